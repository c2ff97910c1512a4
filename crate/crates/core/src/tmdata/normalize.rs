use serde::{Deserialize, Serialize};

use super::{FlowId, TmSeries};
use crate::error::{Error, Result};

/// Per-flow min-max statistics taken from a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub per_flow_min: Vec<f64>,
    pub per_flow_max: Vec<f64>,
}

impl NormalizationParams {
    pub fn flow_count(&self) -> usize {
        self.per_flow_min.len()
    }

    /// Zero-range flows; these normalize to 0 and are forecast as their constant.
    pub fn is_constant(&self, id: FlowId) -> bool {
        self.per_flow_max[id] == self.per_flow_min[id]
    }

    pub fn constant_flows(&self) -> Vec<FlowId> {
        (0..self.flow_count()).filter(|&i| self.is_constant(i)).collect()
    }

    /// Affine rescale without clamping; constant flows map to 0.
    #[inline]
    pub fn scale_unclamped(&self, v: f64, id: FlowId) -> f64 {
        let (lo, hi) = (self.per_flow_min[id], self.per_flow_max[id]);
        if hi == lo {
            0.0
        } else {
            (v - lo) / (hi - lo)
        }
    }
}

pub fn fit_normalization(train: &TmSeries) -> Result<NormalizationParams> {
    if train.is_empty() {
        return Err(Error::EmptyInput("cannot fit normalization on an empty split".into()));
    }
    let f = train.flow_count();
    let mut lo = vec![f64::INFINITY; f];
    let mut hi = vec![f64::NEG_INFINITY; f];
    for m in train.matrices() {
        for (i, &v) in m.as_slice().iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    Ok(NormalizationParams {
        per_flow_min: lo,
        per_flow_max: hi,
    })
}

/// Min-max normalizes one value, clamped to `[0, 1]`.
#[inline]
pub fn normalize_value(v: f64, p: &NormalizationParams, id: FlowId) -> f64 {
    p.scale_unclamped(v, id).clamp(0.0, 1.0)
}

#[inline]
pub fn denormalize_value(x: f64, p: &NormalizationParams, id: FlowId) -> f64 {
    let (lo, hi) = (p.per_flow_min[id], p.per_flow_max[id]);
    lo + x * (hi - lo)
}

pub fn normalize(values: &[f64], p: &NormalizationParams, id: FlowId) -> Result<Vec<f64>> {
    if id >= p.flow_count() {
        return Err(Error::InvalidArgument(format!(
            "flow id {id} out of range for {} flows",
            p.flow_count()
        )));
    }
    Ok(values.iter().map(|&v| normalize_value(v, p, id)).collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::tmdata::TrafficMatrix;

    fn params(lo: f64, hi: f64) -> NormalizationParams {
        NormalizationParams {
            per_flow_min: vec![lo],
            per_flow_max: vec![hi],
        }
    }

    fn one_flow(values: &[f64]) -> TmSeries {
        let m = values
            .iter()
            .map(|&v| TrafficMatrix::from_values(1, vec![v]).unwrap())
            .collect();
        TmSeries::from_matrices(1, 300, 0, m).unwrap()
    }

    #[test]
    fn fit_min_max() {
        let p = fit_normalization(&one_flow(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!((p.per_flow_min[0], p.per_flow_max[0]), (2.0, 6.0));
        assert!(!p.is_constant(0));

        let p = fit_normalization(&one_flow(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!((p.per_flow_min[0], p.per_flow_max[0]), (5.0, 5.0));
        assert!(p.is_constant(0));

        let p = fit_normalization(&one_flow(&[0.0, 0.0])).unwrap();
        assert_eq!(p.constant_flows(), vec![0]);
    }

    #[test]
    fn normalize_examples() {
        let p = params(2.0, 6.0);
        assert_eq!(normalize(&[4.0], &p, 0).unwrap(), vec![0.5]);
        assert_eq!(normalize(&[8.0, -1.0], &p, 0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(normalize(&[5.0], &params(5.0, 5.0), 0).unwrap(), vec![0.0]);
        assert!(normalize(&[1.0], &p, 3).is_err());
    }

    proptest! {
        #[test]
        fn denormalize_inverts_on_train_range(lo in -1e6f64..1e6, span in 1e-3f64..1e6, frac in 0.0f64..=1.0) {
            let p = params(lo, lo + span);
            let v = lo + frac * span;
            let back = denormalize_value(normalize_value(v, &p, 0), &p, 0);
            prop_assert!((back - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }

        #[test]
        fn normalize_is_monotone(lo in -100.0f64..100.0, span in 1e-3f64..100.0, a in -300.0f64..300.0, b in -300.0f64..300.0) {
            let p = params(lo, lo + span);
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(normalize_value(x, &p, 0) <= normalize_value(y, &p, 0));
        }
    }
}
