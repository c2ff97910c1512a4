//! Canonical traffic-matrix CSV.
//!
//! Header `timestamp,src,dst,bytes`, one row per nonzero entry, timestamps
//! ascending. Rows sharing a timestamp form one matrix; entries that never
//! appear are zero. The writer emits a single `t,0,0,0` row for an all-zero
//! matrix so that the step survives a round trip.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{TmSeries, TrafficMatrix};
use crate::error::{Error, Result};

const HEADER: [&str; 4] = ["timestamp", "src", "dst", "bytes"];

pub fn ingest_canonical(path: &Path, node_count: usize, interval_seconds: u32) -> Result<TmSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_canonical(file, node_count, interval_seconds)
}

pub fn read_canonical<R: Read>(reader: R, node_count: usize, interval_seconds: u32) -> Result<TmSeries> {
    if node_count == 0 {
        return Err(Error::InvalidArgument("node_count must be positive".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut timestamps: Vec<i64> = Vec::new();
    let mut matrices: Vec<TrafficMatrix> = Vec::new();
    let mut seen_header = false;
    let mut record = csv::StringRecord::new();

    loop {
        let more = rdr.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if !seen_header {
            if record.iter().ne(HEADER.iter().copied()) {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{}`", HEADER.join(",")),
                });
            }
            seen_header = true;
            continue;
        }
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |i: usize| &record[i];
        let parse_err = |what: &str, raw: &str| Error::Parse {
            line,
            message: format!("invalid {what} `{raw}`"),
        };
        let ts: i64 = field(0).parse().map_err(|_| parse_err("timestamp", field(0)))?;
        let src: usize = field(1).parse().map_err(|_| parse_err("src", field(1)))?;
        let dst: usize = field(2).parse().map_err(|_| parse_err("dst", field(2)))?;
        let bytes: f64 = field(3).parse().map_err(|_| parse_err("bytes", field(3)))?;
        if !bytes.is_finite() || bytes < 0.0 {
            return Err(parse_err("bytes", field(3)));
        }
        for index in [src, dst] {
            if index >= node_count {
                return Err(Error::Bounds {
                    line,
                    index,
                    node_count,
                });
            }
        }

        match timestamps.last() {
            Some(&last) if ts < last => {
                return Err(Error::Ordering {
                    line,
                    previous: last,
                    found: ts,
                })
            }
            Some(&last) if ts == last => {}
            _ => {
                timestamps.push(ts);
                matrices.push(TrafficMatrix::zeros(node_count));
            }
        }
        let m = matrices.last_mut().expect("pushed above");
        if m.get(src, dst) != 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("duplicate entry ({src},{dst}) at timestamp {ts}"),
            });
        }
        m.set(src, dst, bytes);
    }

    if matrices.is_empty() {
        return Err(Error::NoRecords);
    }
    TmSeries::new(node_count, interval_seconds, timestamps, matrices)
}

/// Writes `tm` in canonical form. Output is a pure function of the series.
pub fn write_canonical<W: Write>(tm: &TmSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Parse {
        line: 0,
        message: e.to_string(),
    };
    wtr.write_record(HEADER).map_err(to_err)?;
    let n = tm.node_count();
    for (ts, m) in tm.timestamps().iter().zip(tm.matrices()) {
        let mut wrote = false;
        for (id, v) in m.as_slice().iter().enumerate() {
            if *v != 0.0 {
                let (src, dst) = super::flow_endpoints(id, n);
                wtr.write_record([ts.to_string(), src.to_string(), dst.to_string(), v.to_string()])
                    .map_err(to_err)?;
                wrote = true;
            }
        }
        if !wrote {
            wtr.write_record([ts.to_string(), "0".into(), "0".into(), "0".into()])
                .map_err(to_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
