use super::{normalize_value, FlowId, NormalizationParams, TmSeries};
use crate::error::{Error, Result};

/// Supervised windows over a subset of flows.
///
/// `inputs` is laid out `[window][step][flow]` with `L - 1` steps per window,
/// `targets` is `[window][flow]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    window_length: usize,
    flow_ids: Vec<FlowId>,
}

impl WindowedDataset {
    /// Assembles a dataset from raw buffers, mostly for tests and synthetic inputs.
    pub fn from_parts(
        inputs: Vec<f64>,
        targets: Vec<f64>,
        window_length: usize,
        flow_ids: Vec<FlowId>,
    ) -> Result<Self> {
        let f = flow_ids.len();
        if window_length < 2 || f == 0 {
            return Err(Error::InvalidArgument(
                "window_length >= 2 and at least one flow required".into(),
            ));
        }
        if !targets.len().is_multiple_of(f) || inputs.len() != targets.len() / f * (window_length - 1) * f {
            return Err(Error::Dimension(format!(
                "inputs {} / targets {} inconsistent with {f} flows and L={window_length}",
                inputs.len(),
                targets.len()
            )));
        }
        Ok(WindowedDataset {
            inputs,
            targets,
            window_length,
            flow_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.flow_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    /// Number of input steps per window, `L - 1`.
    pub fn history(&self) -> usize {
        self.window_length - 1
    }

    pub fn flow_ids(&self) -> &[FlowId] {
        &self.flow_ids
    }

    pub fn flow_count(&self) -> usize {
        self.flow_ids.len()
    }

    /// `(L - 1) x F` block for window `w`, step-major.
    pub fn input(&self, w: usize) -> &[f64] {
        let stride = self.history() * self.flow_count();
        &self.inputs[w * stride..(w + 1) * stride]
    }

    pub fn target(&self, w: usize) -> &[f64] {
        let f = self.flow_count();
        &self.targets[w * f..(w + 1) * f]
    }
}

/// Builds `W = D - L + 1` windows: window `w` takes steps `w..w+L-1` as input
/// and step `w+L-1` as target, all normalized with `p`.
pub fn build_windows(
    tm: &TmSeries,
    p: &NormalizationParams,
    flow_ids: &[FlowId],
    window_length: usize,
) -> Result<WindowedDataset> {
    if window_length < 2 {
        return Err(Error::InvalidArgument(format!("window length {window_length} < 2")));
    }
    if flow_ids.is_empty() {
        return Err(Error::EmptyInput("no flows selected".into()));
    }
    if let Some(&bad) = flow_ids
        .iter()
        .find(|&&id| id >= tm.flow_count() || id >= p.flow_count())
    {
        return Err(Error::InvalidArgument(format!("flow id {bad} out of range")));
    }
    let d = tm.len();
    if d < window_length {
        return Err(Error::InsufficientData {
            needed: window_length,
            available: d,
        });
    }

    let normalized: Vec<Vec<f64>> = tm
        .matrices()
        .iter()
        .map(|m| {
            flow_ids
                .iter()
                .map(|&id| normalize_value(m.as_slice()[id], p, id))
                .collect()
        })
        .collect();

    let w_count = d - window_length + 1;
    let f = flow_ids.len();
    let mut inputs = Vec::with_capacity(w_count * (window_length - 1) * f);
    let mut targets = Vec::with_capacity(w_count * f);
    for w in 0..w_count {
        for row in &normalized[w..w + window_length - 1] {
            inputs.extend_from_slice(row);
        }
        targets.extend_from_slice(&normalized[w + window_length - 1]);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        window_length,
        flow_ids: flow_ids.to_vec(),
    })
}
