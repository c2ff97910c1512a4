//! Flow statistics: Pearson correlation, same-source correlation analysis,
//! normalized value histograms and Jensen-Shannon distance matrices.

mod correlation;
mod histogram;

pub use correlation::{
    correlation_matrix, pearson, same_source_fraction, strong_pairs, Correlation, CorrelationMatrix, FlowPair,
    PairGrouping,
};
pub use histogram::{
    flow_histogram, jsd, jsd_distance_matrix, kl_divergence, DistanceMatrix, FlowHistogram, DEFAULT_BIN_COUNT,
};

use std::io::Write;

use crate::error::{Error, Result};
use crate::tmdata::{extract_flows, normalize_value, FlowId, NormalizationParams, TmSeries};

/// Histograms of every flow of `train`, normalized with `params`.
pub fn flow_histograms(train: &TmSeries, params: &NormalizationParams, bin_count: usize) -> Result<Vec<FlowHistogram>> {
    extract_flows(train)?
        .iter()
        .map(|f| {
            let values: Vec<f64> = f
                .values
                .iter()
                .map(|&v| normalize_value(v, params, f.flow_id))
                .collect();
            flow_histogram(f.flow_id, &values, bin_count)
        })
        .collect()
}

/// Square CSV with a `flow_id` header row and column.
pub fn write_square_csv<W: Write>(mut out: W, flow_ids: &[FlowId], values: &[f64]) -> Result<()> {
    let d = flow_ids.len();
    if values.len() != d * d {
        return Err(Error::Dimension(format!("{} values for {d} flows", values.len())));
    }
    let io = |e| Error::io("<csv>", e);
    write!(out, "flow_id").map_err(io)?;
    for id in flow_ids {
        write!(out, ",{id}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (i, id) in flow_ids.iter().enumerate() {
        write!(out, "{id}").map_err(io)?;
        for v in &values[i * d..(i + 1) * d] {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}
