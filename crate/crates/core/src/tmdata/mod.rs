//! Traffic matrix series: the data model, canonical CSV ingest, chronological
//! splitting, min-max normalization and sliding-window dataset construction.

mod ingest;
mod normalize;
mod window;

pub use ingest::{ingest_canonical, read_canonical, write_canonical};
pub use normalize::{denormalize_value, fit_normalization, normalize, normalize_value, NormalizationParams};
pub use window::{build_windows, WindowedDataset};

use std::ops::Range;

use crate::error::{Error, Result};

/// Index of the `(src, dst)` flow in an `N x N` matrix, `src * N + dst`.
pub type FlowId = usize;

#[inline]
pub fn flow_id(src: usize, dst: usize, node_count: usize) -> FlowId {
    src * node_count + dst
}

/// `(src, dst)` for a flow id.
#[inline]
pub fn flow_endpoints(id: FlowId, node_count: usize) -> (usize, usize) {
    (id / node_count, id % node_count)
}

/// One `N x N` traffic matrix stored row-major, so entry `(i, j)` lives at
/// flow id `i * N + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    node_count: usize,
    values: Vec<f64>,
}

impl TrafficMatrix {
    pub fn zeros(node_count: usize) -> Self {
        TrafficMatrix {
            node_count,
            values: vec![0.0; node_count * node_count],
        }
    }

    pub fn from_values(node_count: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != node_count * node_count {
            return Err(Error::Dimension(format!(
                "matrix for {node_count} nodes needs {} entries, got {}",
                node_count * node_count,
                values.len()
            )));
        }
        Ok(TrafficMatrix { node_count, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row of length {} in {n}x{n} matrix",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(TrafficMatrix { node_count: n, values })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn get(&self, src: usize, dst: usize) -> f64 {
        self.values[src * self.node_count + dst]
    }

    #[inline]
    pub fn set(&mut self, src: usize, dst: usize, value: f64) {
        self.values[src * self.node_count + dst] = value;
    }

    /// Entries in flow-id order.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn scaled(&self, factor: f64) -> TrafficMatrix {
        TrafficMatrix {
            node_count: self.node_count,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// A chronologically ordered sequence of traffic matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TmSeries {
    node_count: usize,
    interval_seconds: u32,
    timestamps: Vec<i64>,
    matrices: Vec<TrafficMatrix>,
}

impl TmSeries {
    pub fn new(
        node_count: usize,
        interval_seconds: u32,
        timestamps: Vec<i64>,
        matrices: Vec<TrafficMatrix>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidArgument("node_count must be positive".into()));
        }
        if interval_seconds == 0 {
            return Err(Error::InvalidArgument("interval_seconds must be positive".into()));
        }
        if timestamps.len() != matrices.len() {
            return Err(Error::Dimension(format!(
                "{} timestamps for {} matrices",
                timestamps.len(),
                matrices.len()
            )));
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Ordering {
                    line: 0,
                    previous: pair[0],
                    found: pair[1],
                });
            }
        }
        for (t, m) in matrices.iter().enumerate() {
            if m.node_count != node_count {
                return Err(Error::Dimension(format!(
                    "matrix {t} is {0}x{0}, expected {node_count}x{node_count}",
                    m.node_count
                )));
            }
            if let Some(v) = m.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Domain(format!("matrix {t} has invalid entry {v}")));
            }
        }
        Ok(TmSeries {
            node_count,
            interval_seconds,
            timestamps,
            matrices,
        })
    }

    /// Evenly spaced series starting at `start`.
    pub fn from_matrices(
        node_count: usize,
        interval_seconds: u32,
        start: i64,
        matrices: Vec<TrafficMatrix>,
    ) -> Result<Self> {
        let timestamps = (0..matrices.len())
            .map(|t| start + t as i64 * interval_seconds as i64)
            .collect();
        TmSeries::new(node_count, interval_seconds, timestamps, matrices)
    }

    /// Rebuilds a series from per-flow time series; inverse of [`extract_flows`].
    pub fn from_flows(
        node_count: usize,
        interval_seconds: u32,
        timestamps: Vec<i64>,
        flows: &[FlowSeries],
    ) -> Result<Self> {
        let f = node_count * node_count;
        if flows.len() != f {
            return Err(Error::Dimension(format!("expected {f} flows, got {}", flows.len())));
        }
        let len = timestamps.len();
        let mut matrices = vec![TrafficMatrix::zeros(node_count); len];
        for flow in flows {
            if flow.values.len() != len {
                return Err(Error::Dimension(format!(
                    "flow {} has {} values, expected {len}",
                    flow.flow_id,
                    flow.values.len()
                )));
            }
            for (m, v) in matrices.iter_mut().zip(&flow.values) {
                m.values[flow.flow_id] = *v;
            }
        }
        TmSeries::new(node_count, interval_seconds, timestamps, matrices)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn flow_count(&self) -> usize {
        self.node_count * self.node_count
    }

    pub fn interval_seconds(&self) -> u32 {
        self.interval_seconds
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn matrices(&self) -> &[TrafficMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, t: usize) -> &TrafficMatrix {
        &self.matrices[t]
    }

    /// Values of one flow across all time steps.
    pub fn flow_values(&self, id: FlowId) -> Vec<f64> {
        self.matrices.iter().map(|m| m.values[id]).collect()
    }

    /// Contiguous sub-range of time steps.
    pub fn slice(&self, range: Range<usize>) -> TmSeries {
        TmSeries {
            node_count: self.node_count,
            interval_seconds: self.interval_seconds,
            timestamps: self.timestamps[range.clone()].to_vec(),
            matrices: self.matrices[range].to_vec(),
        }
    }

    /// Concatenates series with identical shape; used to check split round trips.
    pub fn concat(parts: &[&TmSeries]) -> Result<TmSeries> {
        let first = parts
            .first()
            .ok_or_else(|| Error::EmptyInput("no series to concatenate".into()))?;
        let mut timestamps = Vec::new();
        let mut matrices = Vec::new();
        for p in parts {
            timestamps.extend_from_slice(&p.timestamps);
            matrices.extend_from_slice(&p.matrices);
        }
        TmSeries::new(first.node_count, first.interval_seconds, timestamps, matrices)
    }
}

/// One `(src, dst)` traffic flow as a scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSeries {
    pub src: usize,
    pub dst: usize,
    pub flow_id: FlowId,
    pub values: Vec<f64>,
}

/// Splits a series into its `N^2` flows, in flow-id order.
pub fn extract_flows(tm: &TmSeries) -> Result<Vec<FlowSeries>> {
    if tm.is_empty() {
        return Err(Error::EmptyInput("traffic matrix series has no steps".into()));
    }
    let n = tm.node_count;
    Ok((0..n * n)
        .map(|id| {
            let (src, dst) = flow_endpoints(id, n);
            FlowSeries {
                src,
                dst,
                flow_id: id,
                values: tm.flow_values(id),
            }
        })
        .collect())
}

/// Train / validation / test partition of a series along time.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: TmSeries,
    /// `None` when validation is disabled (`val_frac_of_train == 0`).
    pub val: Option<TmSeries>,
    pub test: TmSeries,
}

impl Split {
    /// Step counts `(train, val, test)`.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (
            self.train.len(),
            self.val.as_ref().map_or(0, TmSeries::len),
            self.test.len(),
        )
    }
}

/// Boundaries used by [`chronological_split`]: `(train_end, val_end)` as step
/// indices, so train is `0..train_end`, validation `train_end..val_end` and test
/// `val_end..T`.
pub fn split_boundaries(len: usize, train_frac: f64, val_frac_of_train: f64) -> Result<(usize, usize)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Split(format!("train_frac {train_frac} not in (0, 1)")));
    }
    if !(0.0..1.0).contains(&val_frac_of_train) {
        return Err(Error::Split(format!(
            "val_frac_of_train {val_frac_of_train} not in [0, 1)"
        )));
    }
    // The epsilon absorbs representation error such as 0.9 * 0.8 * 100 = 72.00000000000001.
    let floor = |x: f64| (x + 1e-9).floor() as usize;
    let val_end = floor(train_frac * len as f64);
    let train_end = floor((1.0 - val_frac_of_train) * train_frac * len as f64).min(val_end);
    if train_end == 0 {
        return Err(Error::Split(format!("empty training split for {len} steps")));
    }
    if val_frac_of_train > 0.0 && val_end == train_end {
        return Err(Error::Split(format!("empty validation split for {len} steps")));
    }
    if val_end >= len {
        return Err(Error::Split(format!("empty test split for {len} steps")));
    }
    Ok((train_end, val_end))
}

pub fn chronological_split(tm: &TmSeries, train_frac: f64, val_frac_of_train: f64) -> Result<Split> {
    let (train_end, val_end) = split_boundaries(tm.len(), train_frac, val_frac_of_train)?;
    Ok(Split {
        train: tm.slice(0..train_end),
        val: (val_end > train_end).then(|| tm.slice(train_end..val_end)),
        test: tm.slice(val_end..tm.len()),
    })
}
