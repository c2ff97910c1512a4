//! Plain-text model checkpoints.
//!
//! ```text
//! tmpredict-gru v1
//! input_dim 2
//! hidden_dim 3
//! seed 42
//! tensor w_z 3 2
//! <one line per row, space separated>
//! ...
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so reading a checkpoint
//! back gives bit-identical parameters.

use std::io::{BufRead, BufReader, Read, Write};

use super::gru::{GruForecaster, Tensor};
use crate::error::{Error, Result};

const MAGIC: &str = "tmpredict-gru v1";

pub fn write_checkpoint<W: Write>(m: &GruForecaster, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    let io = |e| Error::io("<checkpoint>", e);
    writeln!(out, "{MAGIC}").map_err(io)?;
    writeln!(out, "input_dim {}", m.input_dim()).map_err(io)?;
    writeln!(out, "hidden_dim {}", m.hidden_dim()).map_err(io)?;
    writeln!(out, "seed {}", m.seed()).map_err(io)?;
    for t in Tensor::ALL {
        let (rows, cols) = t.shape(m.input_dim(), m.hidden_dim());
        writeln!(out, "tensor {} {rows} {cols}", t.name()).map_err(io)?;
        for row in m.tensor(t).chunks(cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(" ")).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<GruForecaster> {
    let mut lines = BufReader::new(input).lines();
    let mut next = |what: &str| -> Result<String> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io("<checkpoint>", e)),
            None => Err(Error::Checkpoint(format!("unexpected end of file, expected {what}"))),
        }
    };
    if next("header")?.trim() != MAGIC {
        return Err(Error::Checkpoint(format!("missing `{MAGIC}` header")));
    }
    fn field<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
        line.strip_prefix(key)
            .and_then(|rest| rest.trim().parse().ok())
            .ok_or_else(|| Error::Checkpoint(format!("expected `{key} <value>`, got `{line}`")))
    }
    let f: usize = field(&next("input_dim")?, "input_dim ")?;
    let h: usize = field(&next("hidden_dim")?, "hidden_dim ")?;
    let seed: u64 = field(&next("seed")?, "seed ")?;
    if f == 0 || h == 0 {
        return Err(Error::Checkpoint("dimensions must be positive".into()));
    }

    let mut params = Vec::new();
    for t in Tensor::ALL {
        let header = next(t.name())?;
        let expected = t.shape(f, h);
        let parts: Vec<&str> = header.split_whitespace().collect();
        let ok = parts.len() == 4
            && parts[0] == "tensor"
            && parts[1] == t.name()
            && parts[2].parse() == Ok(expected.0)
            && parts[3].parse() == Ok(expected.1);
        if !ok {
            return Err(Error::Checkpoint(format!(
                "expected `tensor {} {} {}`, got `{header}`",
                t.name(),
                expected.0,
                expected.1
            )));
        }
        for _ in 0..expected.0 {
            let row = next("tensor row")?;
            let before = params.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Checkpoint(format!("bad number `{tok}` in {}", t.name())))?;
                params.push(v);
            }
            if params.len() - before != expected.1 {
                return Err(Error::Checkpoint(format!("row of {} has the wrong width", t.name())));
            }
        }
    }
    GruForecaster::from_params(f, h, seed, params).map_err(|e| Error::Checkpoint(e.to_string()))
}
