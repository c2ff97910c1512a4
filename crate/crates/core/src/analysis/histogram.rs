use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tmdata::FlowId;

pub const DEFAULT_BIN_COUNT: usize = 50;

/// Empirical distribution of a normalized flow over uniform bins on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowHistogram {
    pub flow_id: FlowId,
    probs: Vec<f64>,
}

impl FlowHistogram {
    /// Wraps a probability vector; entries must be non-negative and sum to 1.
    pub fn from_probs(flow_id: FlowId, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("histogram needs at least one bin".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain(
                "histogram probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("histogram probabilities sum to {total}")));
        }
        Ok(FlowHistogram { flow_id, probs })
    }

    pub fn bin_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Bins are `[k/B, (k+1)/B)`, except the last which also takes 1.0.
pub fn flow_histogram(flow_id: FlowId, normalized_values: &[f64], bin_count: usize) -> Result<FlowHistogram> {
    if bin_count == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    if normalized_values.is_empty() {
        return Err(Error::EmptyInput(format!("flow {flow_id} has no values")));
    }
    let mut counts = vec![0usize; bin_count];
    for &v in normalized_values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("value {v} outside [0, 1] in flow {flow_id}")));
        }
        let k = ((v * bin_count as f64) as usize).min(bin_count - 1);
        counts[k] += 1;
    }
    let len = normalized_values.len() as f64;
    Ok(FlowHistogram {
        flow_id,
        probs: counts.into_iter().map(|c| c as f64 / len).collect(),
    })
}

/// `sum_k p_k log2(p_k / m_k)` over bins where `p_k > 0`.
pub fn kl_divergence(p: &FlowHistogram, m: &FlowHistogram) -> Result<f64> {
    if p.bin_count() != m.bin_count() {
        return Err(Error::Dimension(format!(
            "bin counts {} and {}",
            p.bin_count(),
            m.bin_count()
        )));
    }
    let mut total = 0.0;
    for (k, (&pk, &mk)) in p.probs.iter().zip(&m.probs).enumerate() {
        if pk > 0.0 {
            if mk <= 0.0 {
                return Err(Error::Domain(format!("bin {k}: p > 0 where m = 0")));
            }
            total += pk * (pk / mk).log2();
        }
    }
    Ok(total.max(0.0))
}

/// Jensen-Shannon divergence in bits, so the result lies in `[0, 1]`.
pub fn jsd(p: &FlowHistogram, q: &FlowHistogram) -> Result<f64> {
    if p.bin_count() != q.bin_count() {
        return Err(Error::Dimension(format!(
            "bin counts {} and {}",
            p.bin_count(),
            q.bin_count()
        )));
    }
    Ok(jsd_probs(&p.probs, &q.probs))
}

/// Each bin contributes `½ p log2(p/m) + ½ q log2(q/m)`; summing per bin in
/// this form keeps `jsd(p, q)` and `jsd(q, p)` bit-identical.
fn jsd_probs(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let ta = if a > 0.0 { a * (a / m).log2() } else { 0.0 };
        let tb = if b > 0.0 { b * (b / m).log2() } else { 0.0 };
        total += 0.5 * (ta + tb);
    }
    total.clamp(0.0, 1.0)
}

/// Symmetric matrix of pairwise divergences, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    dim: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and non-negativity.
    pub fn from_values(dim: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != dim * dim {
            return Err(Error::Dimension(format!("{} entries for dim {dim}", d.len())));
        }
        for i in 0..dim {
            if d[i * dim + i] != 0.0 {
                return Err(Error::Domain(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = d[i * dim + j];
                if v != d[j * dim + i] || !v.is_finite() || v < 0.0 {
                    return Err(Error::Domain(format!("entry ({i},{j}) invalid or asymmetric")));
                }
            }
        }
        Ok(DistanceMatrix { dim, d })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.dim + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }
}

pub fn jsd_distance_matrix(histograms: &[FlowHistogram]) -> Result<DistanceMatrix> {
    if histograms.len() < 2 {
        return Err(Error::EmptyInput("distance matrix needs at least 2 histograms".into()));
    }
    let b = histograms[0].bin_count();
    if histograms.iter().any(|h| h.bin_count() != b) {
        return Err(Error::Dimension("histograms differ in bin count".into()));
    }
    let n = histograms.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j > i {
                        jsd_probs(&histograms[i].probs, &histograms[j].probs)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            d[i * n + j] = rows[i][j];
            d[j * n + i] = rows[i][j];
        }
    }
    Ok(DistanceMatrix { dim: n, d })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn h(probs: &[f64]) -> FlowHistogram {
        FlowHistogram::from_probs(0, probs.to_vec()).unwrap()
    }

    #[test]
    fn histogram_bin_edges() {
        // 0 -> [0, .5); 0.5 and 1.0 -> [.5, 1].
        let hist = flow_histogram(0, &[0.0, 0.5, 1.0], 2).unwrap();
        assert_eq!(hist.probs(), &[1.0 / 3.0, 2.0 / 3.0]);
        let hist = flow_histogram(0, &[0.0; 7], 5).unwrap();
        assert_eq!(hist.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn histogram_of_uniform_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let hist = flow_histogram(0, &values, 10).unwrap();
        assert!(
            hist.probs().iter().all(|p| (p - 0.1).abs() <= 0.05),
            "{:?}",
            hist.probs()
        );
    }

    #[test]
    fn histogram_errors() {
        assert!(matches!(flow_histogram(0, &[], 4), Err(Error::EmptyInput(_))));
        assert!(matches!(flow_histogram(0, &[1.2], 4), Err(Error::Domain(_))));
        assert!(flow_histogram(0, &[0.5], 0).is_err());
    }

    #[test]
    fn kl_examples() {
        let m = h(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&m, &m).unwrap(), 0.0);
        assert_eq!(kl_divergence(&h(&[1.0, 0.0]), &m).unwrap(), 1.0);
        let v = kl_divergence(&h(&[0.75, 0.25]), &m).unwrap();
        assert!((v - 0.188_721_875_540_867_14).abs() < 1e-12, "{v}");
        assert!(matches!(kl_divergence(&m, &h(&[1.0, 0.0])), Err(Error::Domain(_))));
        assert!(matches!(kl_divergence(&m, &h(&[1.0])), Err(Error::Dimension(_))));
    }

    #[test]
    fn jsd_examples() {
        let p = h(&[0.3, 0.7]);
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_eq!(jsd(&h(&[1.0, 0.0]), &h(&[0.0, 1.0])).unwrap(), 1.0);
        let v = jsd(&h(&[0.5, 0.5]), &h(&[1.0, 0.0])).unwrap();
        assert!((v - 0.311_278_124_459_132_9).abs() < 1e-12, "{v}");
    }

    #[test]
    fn distance_matrix_consistency() {
        let hs = vec![h(&[0.2, 0.8]), h(&[0.6, 0.4]), h(&[1.0, 0.0])];
        let d = jsd_distance_matrix(&hs).unwrap();
        for i in 0..3 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(d.get(i, j), jsd(&hs[i], &hs[j]).unwrap());
                }
            }
        }
        let same = vec![h(&[0.2, 0.8]); 4];
        assert!(jsd_distance_matrix(&same).unwrap().values().iter().all(|v| *v == 0.0));
    }

    fn random_probs(bins: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], bins).prop_filter_map("all zero", |w| {
            let s: f64 = w.iter().sum();
            (s > 0.0).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn jsd_symmetric_and_bounded(p in random_probs(6), q in random_probs(6)) {
            let (p, q) = (h(&p), h(&q));
            let a = jsd(&p, &q).unwrap();
            prop_assert_eq!(a, jsd(&q, &p).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        }
    }

    proptest! {
        #[test]
        fn sqrt_jsd_triangle_inequality(p in random_probs(5), q in random_probs(5), r in random_probs(5)) {
            let (p, q, r) = (h(&p), h(&q), h(&r));
            let d = |a: &FlowHistogram, b: &FlowHistogram| jsd(a, b).unwrap().sqrt();
            prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-9);
        }

        #[test]
        fn histogram_sums_to_one(values in prop::collection::vec(0.0f64..=1.0, 1..300), bins in 1usize..80) {
            let hist = flow_histogram(0, &values, bins).unwrap();
            prop_assert!((hist.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(hist.probs().iter().all(|p| *p >= 0.0));
        }
    }
}
