use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tmdata::{flow_endpoints, FlowId, FlowSeries};

/// Pearson coefficient with a validity flag; `valid` is false (and `rho` is 0)
/// when either series has zero variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    pub valid: bool,
}

impl Correlation {
    const UNDEFINED: Correlation = Correlation { rho: 0.0, valid: false };
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("series lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Dimension("pearson needs at least 2 samples".into()));
    }
    // Exact-equality test on the raw values: a mean-centred variance of a
    // constant series need not come out as exactly zero.
    if is_constant(x) || is_constant(y) {
        return Ok(Correlation::UNDEFINED);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation::UNDEFINED);
    }
    Ok(Correlation {
        rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        valid: true,
    })
}

/// Pairwise Pearson correlations between flows.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    node_count: usize,
    flow_ids: Vec<FlowId>,
    rho: Vec<f64>,
    valid: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.flow_ids.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn flow_ids(&self) -> &[FlowId] {
        &self.flow_ids
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.dim() + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.dim() + j]
    }

    /// Row-major `dim x dim` coefficients.
    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    /// Valid unordered index pairs `i < j` with their coefficient.
    fn valid_pairs(&self) -> Vec<(usize, usize, f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                if self.is_valid(i, j) {
                    out.push((i, j, self.rho(i, j)));
                }
            }
        }
        out
    }

    /// Valid pairs sorted by coefficient descending, ties by flow ids ascending.
    fn ranked_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut pairs = self.valid_pairs();
        pairs.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap_or(Ordering::Equal)
                .then_with(|| (self.flow_ids[a.0], self.flow_ids[a.1]).cmp(&(self.flow_ids[b.0], self.flow_ids[b.1])))
        });
        pairs
    }
}

/// Correlates every pair of `flows`. Callers pass training-split values.
pub fn correlation_matrix(flows: &[FlowSeries], node_count: usize) -> Result<CorrelationMatrix> {
    if flows.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least 2 flows".into()));
    }
    let len = flows[0].values.len();
    if let Some(f) = flows.iter().find(|f| f.values.len() != len) {
        return Err(Error::Dimension(format!(
            "flow {} has {} values, expected {len}",
            f.flow_id,
            f.values.len()
        )));
    }
    let d = flows.len();
    let rows: Vec<Vec<Correlation>> = (0..d)
        .into_par_iter()
        .map(|i| {
            (0..d)
                .map(|j| {
                    if j < i {
                        Ok(Correlation::UNDEFINED)
                    } else {
                        pearson(&flows[i].values, &flows[j].values)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rho = vec![0.0; d * d];
    let mut valid = vec![false; d * d];
    for i in 0..d {
        for j in i..d {
            let mut c = rows[i][j];
            if i == j && c.valid {
                c.rho = 1.0;
            }
            rho[i * d + j] = c.rho;
            rho[j * d + i] = c.rho;
            valid[i * d + j] = c.valid;
            valid[j * d + i] = c.valid;
        }
    }
    Ok(CorrelationMatrix {
        node_count,
        flow_ids: flows.iter().map(|f| f.flow_id).collect(),
        rho,
        valid,
    })
}

/// What "related" means when counting flow pairs in [`same_source_fraction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairGrouping {
    Source,
    SourceOrDestination,
}

impl PairGrouping {
    fn related(self, a: FlowId, b: FlowId, n: usize) -> bool {
        let (sa, da) = flow_endpoints(a, n);
        let (sb, db) = flow_endpoints(b, n);
        match self {
            PairGrouping::Source => sa == sb,
            PairGrouping::SourceOrDestination => sa == sb || da == db,
        }
    }
}

/// Fraction of the top `top_percent`% most correlated flow pairs whose flows
/// are related under `grouping`. The number of pairs taken is
/// `ceil(P * top_percent / 100)` of the `P` valid pairs.
pub fn same_source_fraction(corr: &CorrelationMatrix, top_percent: f64, grouping: PairGrouping) -> Result<f64> {
    if !(top_percent > 0.0 && top_percent <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "top_percent {top_percent} not in (0, 100]"
        )));
    }
    let pairs = corr.ranked_pairs();
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no valid flow pairs".into()));
    }
    let take = ((pairs.len() as f64 * top_percent / 100.0 - 1e-9).ceil() as usize).clamp(1, pairs.len());
    let related = pairs[..take]
        .iter()
        .filter(|(i, j, _)| grouping.related(corr.flow_ids[*i], corr.flow_ids[*j], corr.node_count))
        .count();
    Ok(related as f64 / take as f64)
}

/// A correlated flow pair, identified by flow ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPair {
    pub a: FlowId,
    pub b: FlowId,
    pub rho: f64,
}

/// All valid pairs with `rho >= threshold`, strongest first.
pub fn strong_pairs(corr: &CorrelationMatrix, threshold: f64) -> Result<Vec<FlowPair>> {
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} not in [-1, 1]")));
    }
    Ok(corr
        .ranked_pairs()
        .into_iter()
        .filter(|p| p.2 >= threshold)
        .map(|(i, j, rho)| FlowPair {
            a: corr.flow_ids[i],
            b: corr.flow_ids[j],
            rho,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn flow(id: FlowId, n: usize, values: Vec<f64>) -> FlowSeries {
        let (src, dst) = flow_endpoints(id, n);
        FlowSeries {
            src,
            dst,
            flow_id: id,
            values,
        }
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().rho, 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().rho, -1.0);
        // Independently: centred sums give cov 4 and variances 5, rho = 4/5.
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.rho - 0.8).abs() < 1e-15);
        assert!(r.valid);
    }

    #[test]
    fn pearson_errors_and_degenerate() {
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(Error::Dimension(_))));
        let c = pearson(&[0.1, 0.1, 0.1], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c, Correlation { rho: 0.0, valid: false });
    }

    #[test]
    fn matrix_identical_and_constant_flows() {
        let a = vec![1.0, 5.0, 2.0, 8.0];
        let flows = vec![flow(0, 2, a.clone()), flow(1, 2, a), flow(2, 2, vec![3.0; 4])];
        let c = correlation_matrix(&flows, 2).unwrap();
        assert_eq!(c.rho(0, 1), 1.0);
        assert_eq!(c.rho(0, 0), 1.0);
        assert!(!c.is_valid(0, 2) && !c.is_valid(2, 2));
        assert_eq!(c.rho(2, 0), 0.0);
    }

    #[test]
    fn strong_pair_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let noisy: Vec<f64> = a.iter().map(|v| v + 0.1 * rng.random::<f64>()).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        // Oracle check of the construction: only (a, a+noise) clears 0.6.
        assert!(pearson(&a, &noisy).unwrap().rho >= 0.6);
        assert!(pearson(&noisy, &neg).unwrap().rho < 0.6);
        let flows = vec![flow(0, 2, a), flow(1, 2, noisy), flow(2, 2, neg)];
        let c = correlation_matrix(&flows, 2).unwrap();
        let strong = strong_pairs(&c, 0.6).unwrap();
        assert_eq!(strong.len(), 1);
        assert_eq!((strong[0].a, strong[0].b), (0, 1));
        assert_eq!(strong_pairs(&c, -1.0).unwrap().len(), 3);

        let same = vec![flow(0, 2, vec![1.0, 2.0, 4.0]), flow(3, 2, vec![1.0, 2.0, 4.0])];
        let c = correlation_matrix(&same, 2).unwrap();
        let s = strong_pairs(&c, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].a, s[0].b), (0, 3));
    }

    fn random_flows(n: usize, len: usize, seed: u64) -> Vec<FlowSeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * n)
            .map(|id| flow(id, n, (0..len).map(|_| rng.random::<f64>()).collect()))
            .collect()
    }

    #[test]
    fn same_source_baselines() {
        for (n, expected) in [(12usize, 0.1539), (23, 0.0833)] {
            let c = correlation_matrix(&random_flows(n, 8, n as u64), n).unwrap();
            let f = same_source_fraction(&c, 100.0, PairGrouping::SourceOrDestination).unwrap();
            assert!((f - expected).abs() < 1e-4, "N={n}: {f}");
            let s = same_source_fraction(&c, 100.0, PairGrouping::Source).unwrap();
            assert!((s - expected / 2.0).abs() < 1e-4, "N={n}: {s}");
        }
    }

    #[test]
    fn top_pair_sharing_source() {
        // Flows 0 and 1 share source 0 and are identical; the rest are unrelated noise.
        let mut flows = random_flows(2, 30, 9);
        flows[1].values = flows[0].values.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = correlation_matrix(&flows, 2).unwrap();
        let f = same_source_fraction(&c, 100.0 / 6.0, PairGrouping::Source).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn same_source_fraction_errors() {
        let flows = vec![flow(0, 1, vec![1.0, 1.0]), flow(0, 1, vec![2.0, 2.0])];
        let c = correlation_matrix(&flows, 1).unwrap();
        assert!(matches!(
            same_source_fraction(&c, 50.0, PairGrouping::Source),
            Err(Error::EmptyInput(_))
        ));
        assert!(same_source_fraction(&c, 0.0, PairGrouping::Source).is_err());
    }

    proptest! {
        #[test]
        fn affine_invariance(xs in prop::collection::vec(-1e3f64..1e3, 3..40), a in -50.0f64..50.0, b in -1e3f64..1e3) {
            prop_assume!(a.abs() > 1e-3);
            let c = pearson(&xs, &xs).unwrap();
            prop_assume!(c.valid);
            prop_assert!((c.rho - 1.0).abs() < 1e-12);
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r = pearson(&xs, &ys).unwrap();
            prop_assume!(r.valid);
            prop_assert!((r.rho - a.signum()).abs() < 1e-9);
        }

        #[test]
        fn matrix_is_symmetric_and_bounded(seed in any::<u64>()) {
            let c = correlation_matrix(&random_flows(2, 12, seed), 2).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert_eq!(c.rho(i, j), c.rho(j, i));
                    prop_assert!(c.rho(i, j).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }
}
