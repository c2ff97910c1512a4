use std::io::Write;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Topology;
use crate::error::{Error, Result};
use crate::tmdata::TrafficMatrix;

/// How demands are grouped into LP commodities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// One commodity per nonzero source-destination demand.
    #[default]
    PerDemand,
    /// One commodity per source, delivering to all its destinations. Same
    /// optimum with far fewer variables.
    PerSource,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::PerDemand => "per_demand",
            Formulation::PerSource => "per_source",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_demand" => Ok(Formulation::PerDemand),
            "per_source" => Ok(Formulation::PerSource),
            other => Err(Error::InvalidArgument(format!("unknown formulation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MluStatus {
    Optimal,
    InfeasibleDemandUnroutable,
}

/// Routed flow of one commodity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommodityFlow {
    pub src: usize,
    /// `(destination, demand)` pairs served by this commodity.
    pub sinks: Vec<(usize, f64)>,
    /// Flow on each topology link, in link order.
    pub link_flows: Vec<f64>,
}

impl CommodityFlow {
    /// Largest absolute flow-conservation violation over all nodes.
    pub fn conservation_residual(&self, topo: &Topology) -> f64 {
        let n = topo.node_count();
        let mut net_out = vec![0.0; n];
        for (l, f) in topo.links().iter().zip(&self.link_flows) {
            net_out[l.src] += f;
            net_out[l.dst] -= f;
        }
        let total: f64 = self.sinks.iter().map(|s| s.1).sum();
        net_out[self.src] -= total;
        for &(d, v) in &self.sinks {
            net_out[d] += v;
        }
        net_out.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MluResult {
    pub mlu: f64,
    pub per_link_utilization: Vec<f64>,
    pub status: MluStatus,
    /// First demand found without a path, when unroutable.
    pub unroutable: Option<(usize, usize)>,
    pub commodities: Vec<CommodityFlow>,
}

impl MluResult {
    pub fn is_optimal(&self) -> bool {
        self.status == MluStatus::Optimal
    }

    /// `src,dst,capacity,utilization` rows with a header line.
    pub fn write_utilization_csv<W: Write>(&self, topo: &Topology, mut out: W) -> Result<()> {
        let io = |e| Error::io("<utilization csv>", e);
        writeln!(out, "src,dst,capacity,utilization").map_err(io)?;
        for (l, u) in topo.links().iter().zip(&self.per_link_utilization) {
            writeln!(out, "{},{},{},{}", l.src, l.dst, l.capacity, u).map_err(io)?;
        }
        Ok(())
    }
}

pub fn min_mlu(topo: &Topology, demand: &TrafficMatrix) -> Result<MluResult> {
    min_mlu_with(topo, demand, Formulation::PerDemand)
}

/// Minimum achievable maximum link utilization for `demand` under optimal
/// fractional multi-commodity routing. The diagonal is ignored.
pub fn min_mlu_with(topo: &Topology, demand: &TrafficMatrix, formulation: Formulation) -> Result<MluResult> {
    let n = topo.node_count();
    if demand.node_count() != n {
        return Err(Error::Dimension(format!(
            "demand has {} nodes, topology {n}",
            demand.node_count()
        )));
    }
    if let Some(v) = demand.as_slice().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!(
            "demand entry {v} is not a finite non-negative value"
        )));
    }

    let mut groups: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    for s in 0..n {
        let sinks: Vec<(usize, f64)> = (0..n)
            .filter(|&d| d != s && demand.get(s, d) > 0.0)
            .map(|d| (d, demand.get(s, d)))
            .collect();
        if sinks.is_empty() {
            continue;
        }
        let reach = topo.reachable_from(s);
        if let Some(&(d, _)) = sinks.iter().find(|(d, _)| !reach[*d]) {
            return Ok(MluResult {
                mlu: f64::INFINITY,
                per_link_utilization: Vec::new(),
                status: MluStatus::InfeasibleDemandUnroutable,
                unroutable: Some((s, d)),
                commodities: Vec::new(),
            });
        }
        match formulation {
            Formulation::PerSource => groups.push((s, sinks)),
            Formulation::PerDemand => groups.extend(sinks.into_iter().map(|sink| (s, vec![sink]))),
        }
    }

    let links = topo.links();
    if groups.is_empty() {
        return Ok(MluResult {
            mlu: 0.0,
            per_link_utilization: vec![0.0; links.len()],
            status: MluStatus::Optimal,
            unroutable: None,
            commodities: Vec::new(),
        });
    }

    // Both demands and capacities are rescaled to at most 1 for conditioning.
    let d_scale = groups
        .iter()
        .flat_map(|(_, s)| s.iter().map(|x| x.1))
        .fold(0.0, f64::max);
    let c_scale = links.iter().map(|l| l.capacity).fold(0.0, f64::max);

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let u = lp.add_var(1.0, (0.0, f64::INFINITY));
    let flows: Vec<Vec<Variable>> = groups
        .iter()
        .map(|_| links.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect())
        .collect();

    for ((src, sinks), vars) in groups.iter().zip(&flows) {
        // The source row is implied by the others.
        for v in (0..n).filter(|v| v != src) {
            let terms: Vec<(Variable, f64)> = links
                .iter()
                .zip(vars)
                .filter_map(|(l, &x)| match (l.dst == v, l.src == v) {
                    (true, _) => Some((x, 1.0)),
                    (_, true) => Some((x, -1.0)),
                    _ => None,
                })
                .collect();
            let rhs = sinks.iter().find(|s| s.0 == v).map_or(0.0, |s| s.1 / d_scale);
            if terms.is_empty() && rhs == 0.0 {
                continue;
            }
            lp.add_constraint(terms, ComparisonOp::Eq, rhs);
        }
    }
    for (e, l) in links.iter().enumerate() {
        let mut terms: Vec<(Variable, f64)> = flows.iter().map(|vars| (vars[e], 1.0)).collect();
        terms.push((u, -l.capacity / c_scale));
        lp.add_constraint(terms, ComparisonOp::Le, 0.0);
    }

    let solution = lp
        .solve()
        .map_err(|e| Error::Solver(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::Solver("solve interrupted".into()))?;

    let commodities: Vec<CommodityFlow> = groups
        .into_iter()
        .zip(&flows)
        .map(|((src, sinks), vars)| CommodityFlow {
            src,
            sinks,
            link_flows: vars.iter().map(|&x| solution.var_value(x).max(0.0) * d_scale).collect(),
        })
        .collect();
    let per_link_utilization: Vec<f64> = (0..links.len())
        .map(|e| commodities.iter().map(|c| c.link_flows[e]).sum::<f64>() / links[e].capacity)
        .collect();
    let mlu = per_link_utilization.iter().copied().fold(0.0, f64::max);
    Ok(MluResult {
        mlu,
        per_link_utilization,
        status: MluStatus::Optimal,
        unroutable: None,
        commodities,
    })
}

fn checked_mlu(topo: &Topology, tm: &TrafficMatrix, formulation: Formulation) -> Result<f64> {
    let r = min_mlu_with(topo, tm, formulation)?;
    match r.unroutable {
        Some((src, dst)) => Err(Error::Unroutable { src, dst }),
        None => Ok(r.mlu),
    }
}

/// Ratio of the predicted matrix's optimal MLU to the true matrix's.
pub fn mlu_bias(topo: &Topology, truth: &TrafficMatrix, pred: &TrafficMatrix) -> Result<f64> {
    mlu_bias_with(topo, truth, pred, Formulation::PerDemand)
}

pub fn mlu_bias_with(
    topo: &Topology,
    truth: &TrafficMatrix,
    pred: &TrafficMatrix,
    formulation: Formulation,
) -> Result<f64> {
    let t = checked_mlu(topo, truth, formulation)?;
    if t == 0.0 {
        return Err(Error::UndefinedBias);
    }
    Ok(checked_mlu(topo, pred, formulation)? / t)
}

/// Bias of one window, or why it has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowBias {
    Value(f64),
    ZeroTruth,
    Unroutable,
}

impl WindowBias {
    pub fn value(self) -> Option<f64> {
        match self {
            WindowBias::Value(b) => Some(b),
            _ => None,
        }
    }
}

/// Per-window biases over paired windows. Solves run on the current rayon pool.
pub fn bias_series(
    topo: &Topology,
    truths: &[TrafficMatrix],
    preds: &[TrafficMatrix],
    formulation: Formulation,
) -> Result<Vec<WindowBias>> {
    if truths.len() != preds.len() {
        return Err(Error::Dimension(format!(
            "{} truths vs {} predictions",
            truths.len(),
            preds.len()
        )));
    }
    truths
        .par_iter()
        .zip(preds)
        .map(|(t, p)| match mlu_bias_with(topo, t, p, formulation) {
            Ok(b) => Ok(WindowBias::Value(b)),
            Err(Error::UndefinedBias) => Ok(WindowBias::ZeroTruth),
            Err(Error::Unroutable { .. }) => Ok(WindowBias::Unroutable),
            Err(e) => Err(e),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    /// Mean over the windows that have a defined bias.
    pub mean: f64,
    pub used: usize,
    pub skipped_zero_truth: usize,
    pub skipped_unroutable: usize,
}

impl BiasSummary {
    pub fn from_series(series: &[WindowBias]) -> Result<Self> {
        let mut s = BiasSummary {
            mean: 0.0,
            used: 0,
            skipped_zero_truth: 0,
            skipped_unroutable: 0,
        };
        let mut total = 0.0;
        for w in series {
            match w {
                WindowBias::Value(b) => {
                    total += b;
                    s.used += 1;
                }
                WindowBias::ZeroTruth => s.skipped_zero_truth += 1,
                WindowBias::Unroutable => s.skipped_unroutable += 1,
            }
        }
        if s.used == 0 {
            return Err(Error::EmptyInput(format!("all {} windows were skipped", series.len())));
        }
        s.mean = total / s.used as f64;
        Ok(s)
    }
}

/// Average MLU bias over paired windows. Windows whose true matrix has zero
/// MLU, or that contain an unroutable demand, are skipped and counted.
pub fn avg_mlu_bias(
    topo: &Topology,
    truths: &[TrafficMatrix],
    preds: &[TrafficMatrix],
    formulation: Formulation,
) -> Result<BiasSummary> {
    if truths.is_empty() {
        return Err(Error::EmptyInput("no windows".into()));
    }
    BiasSummary::from_series(&bias_series(topo, truths, preds, formulation)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teeval::Link;

    fn tm(n: usize, entries: &[(usize, usize, f64)]) -> TrafficMatrix {
        let mut m = TrafficMatrix::zeros(n);
        for &(s, d, v) in entries {
            m.set(s, d, v);
        }
        m
    }

    fn triangle() -> Topology {
        Topology::bidirectional(3, &[(0, 1), (1, 2), (0, 2)], 10.0).unwrap()
    }

    #[test]
    fn zero_demand() {
        let r = min_mlu(&triangle(), &TrafficMatrix::zeros(3)).unwrap();
        assert_eq!(r.mlu, 0.0);
        assert!(r.is_optimal());
        // Diagonal only is still zero demand.
        assert_eq!(min_mlu(&triangle(), &tm(3, &[(1, 1, 5.0)])).unwrap().mlu, 0.0);
    }

    #[test]
    fn single_link() {
        let t = Topology::new(
            2,
            vec![Link {
                src: 0,
                dst: 1,
                capacity: 10.0,
            }],
        )
        .unwrap();
        let r = min_mlu(&t, &tm(2, &[(0, 1, 5.0)])).unwrap();
        assert!((r.mlu - 0.5).abs() < 1e-9);
    }

    #[test]
    fn triangle_splits_across_two_paths() {
        let r = min_mlu(&triangle(), &tm(3, &[(0, 1, 12.0)])).unwrap();
        // Even split: 6 direct, 6 through the relay.
        assert!((r.mlu - 0.6).abs() < 1e-9, "{}", r.mlu);
        let mut u = r.per_link_utilization.clone();
        u.sort_by(f64::total_cmp);
        assert!(u[3..].iter().all(|x| (x - 0.6).abs() < 1e-9), "{u:?}");
    }

    #[test]
    fn unroutable_demand_is_flagged() {
        let t = Topology::new(
            3,
            vec![Link {
                src: 0,
                dst: 1,
                capacity: 1.0,
            }],
        )
        .unwrap();
        let r = min_mlu(&t, &tm(3, &[(0, 1, 1.0), (1, 0, 1.0)])).unwrap();
        assert_eq!(r.status, MluStatus::InfeasibleDemandUnroutable);
        assert_eq!(r.unroutable, Some((1, 0)));
        let ok = tm(3, &[(0, 1, 1.0)]);
        assert!(matches!(
            mlu_bias(&t, &ok, &tm(3, &[(2, 0, 1.0)])),
            Err(Error::Unroutable { src: 2, dst: 0 })
        ));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            min_mlu(&triangle(), &TrafficMatrix::zeros(2)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            min_mlu(&triangle(), &tm(3, &[(0, 1, -1.0)])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bias_examples() {
        let t = triangle();
        let truth = tm(3, &[(0, 1, 4.0), (2, 1, 3.0)]);
        assert!((mlu_bias(&t, &truth, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert!((mlu_bias(&t, &truth, &truth.scaled(2.0)).unwrap() - 2.0).abs() < 1e-9);
        assert!(matches!(
            mlu_bias(&t, &TrafficMatrix::zeros(3), &truth),
            Err(Error::UndefinedBias)
        ));
    }

    #[test]
    fn average_bias_skips_and_counts() {
        let t = triangle();
        let a = tm(3, &[(0, 1, 10.0)]);
        let truths = vec![a.clone(), a.clone(), TrafficMatrix::zeros(3)];
        let preds = vec![a.scaled(0.5), a.scaled(1.5), a.clone()];
        let s = avg_mlu_bias(&t, &truths, &preds, Formulation::PerDemand).unwrap();
        assert!((s.mean - 1.0).abs() < 1e-9);
        assert_eq!((s.used, s.skipped_zero_truth, s.skipped_unroutable), (2, 1, 0));
        let series = bias_series(&t, &truths, &preds, Formulation::PerDemand).unwrap();
        assert_eq!(series[2], WindowBias::ZeroTruth);
        assert_eq!(series[0].value(), Some(0.5));
        let zeros = vec![TrafficMatrix::zeros(3)];
        assert!(matches!(
            avg_mlu_bias(&t, &zeros, &zeros, Formulation::PerDemand),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn formulations_agree() {
        let t = Topology::bidirectional(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], 5.0).unwrap();
        let m = tm(4, &[(0, 1, 3.0), (0, 3, 4.0), (1, 3, 2.0), (2, 0, 6.0), (3, 1, 1.0)]);
        let a = min_mlu_with(&t, &m, Formulation::PerDemand).unwrap();
        let b = min_mlu_with(&t, &m, Formulation::PerSource).unwrap();
        assert!((a.mlu - b.mlu).abs() < 1e-9, "{} vs {}", a.mlu, b.mlu);
        assert_eq!(a.commodities.len(), 5);
        assert_eq!(b.commodities.len(), 4);
        for c in a.commodities.iter().chain(&b.commodities) {
            assert!(c.conservation_residual(&t) <= 1e-8 * 6.0);
        }
    }

    #[test]
    fn utilization_csv() {
        let t = Topology::new(
            2,
            vec![Link {
                src: 0,
                dst: 1,
                capacity: 10.0,
            }],
        )
        .unwrap();
        let r = min_mlu(&t, &tm(2, &[(0, 1, 5.0)])).unwrap();
        let mut buf = Vec::new();
        r.write_utilization_csv(&t, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "src,dst,capacity,utilization\n0,1,10,0.5\n"
        );
    }
}
