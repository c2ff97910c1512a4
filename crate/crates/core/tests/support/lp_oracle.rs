//! Brute-force references for the min-MLU linear program: exhaustive
//! path-split search, max-flow closed forms and random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmpredict_core::teeval::{min_mlu, min_mlu_with, Formulation, Link, Topology};
use tmpredict_core::TrafficMatrix;

pub struct Commodity {
    pub src: usize,
    pub dst: usize,
    pub demand: f64,
}

pub fn random_topology(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Topology {
    let mut links = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.random_bool(density) {
                links.push(Link {
                    src: s,
                    dst: d,
                    capacity: rng.random_range(1.0..10.0),
                });
            }
        }
    }
    Topology::new(n, links).unwrap()
}

pub fn simple_paths(topo: &Topology, src: usize, dst: usize) -> Vec<Vec<usize>> {
    fn walk(
        topo: &Topology,
        at: usize,
        dst: usize,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == dst {
            out.push(path.clone());
            return;
        }
        for (e, l) in topo.links().iter().enumerate() {
            if l.src == at && !seen[l.dst] {
                seen[l.dst] = true;
                path.push(e);
                walk(topo, l.dst, dst, seen, path, out);
                path.pop();
                seen[l.dst] = false;
            }
        }
    }
    let mut seen = vec![false; topo.node_count()];
    seen[src] = true;
    let mut out = Vec::new();
    walk(topo, src, dst, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Path-split brute force. Each commodity with `p` paths contributes `p - 1`
/// coordinates (shares of its first paths, summing to at most 1); the rest
/// goes on its last path. The objective is convex in these coordinates.
pub struct PathOracle<'a> {
    pub topo: &'a Topology,
    pub commodities: &'a [Commodity],
    pub paths: Vec<Vec<Vec<usize>>>,
}

impl PathOracle<'_> {
    pub fn dims(&self) -> usize {
        self.paths.iter().map(|p| p.len() - 1).sum()
    }

    /// Splits for a coordinate vector, or `None` outside the feasible region.
    pub fn mlu(&self, coords: &[f64]) -> Option<f64> {
        let mut load = vec![0.0; self.topo.links().len()];
        let mut k = 0;
        for (c, paths) in self.commodities.iter().zip(&self.paths) {
            let shares = &coords[k..k + paths.len() - 1];
            k += paths.len() - 1;
            let rest = 1.0 - shares.iter().sum::<f64>();
            if rest < -1e-12 || shares.iter().any(|s| *s < 0.0) {
                return None;
            }
            for (i, path) in paths.iter().enumerate() {
                let share = if i + 1 == paths.len() { rest.max(0.0) } else { shares[i] };
                for &e in path {
                    load[e] += share * c.demand;
                }
            }
        }
        Some(
            load.iter()
                .zip(self.topo.links())
                .map(|(x, l)| x / l.capacity)
                .fold(0.0, f64::max),
        )
    }

    pub fn grid(&self, step: f64) -> f64 {
        let ticks = (1.0 / step).round() as usize;
        let at = |i: usize| i as f64 * step;
        match self.dims() {
            0 => self.mlu(&[]).unwrap(),
            1 => (0..=ticks)
                .filter_map(|i| self.mlu(&[at(i)]))
                .fold(f64::INFINITY, f64::min),
            2 => {
                let mut best = f64::INFINITY;
                for i in 0..=ticks {
                    for j in 0..=ticks {
                        if let Some(v) = self.mlu(&[at(i), at(j)]) {
                            best = best.min(v);
                        }
                    }
                }
                best
            }
            _ => unreachable!(),
        }
    }

    /// Upper end of the second coordinate given the first: shared simplex
    /// when both belong to one commodity, otherwise the unit interval.
    fn second_limit(&self, x: f64) -> f64 {
        if self.paths.iter().any(|p| p.len() == 3) {
            1.0 - x
        } else {
            1.0
        }
    }

    pub fn refine(&self) -> f64 {
        fn ternary(lo: f64, hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..100 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if f(m1) <= f(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            f(0.5 * (a + b)).min(f(lo)).min(f(hi))
        }
        match self.dims() {
            0 => self.mlu(&[]).unwrap(),
            1 => ternary(0.0, 1.0, &|x| self.mlu(&[x]).unwrap()),
            2 => ternary(0.0, 1.0, &|x| {
                let hi = self.second_limit(x).max(0.0);
                ternary(0.0, hi, &|y| self.mlu(&[x, y.min(hi)]).unwrap())
            }),
            _ => unreachable!(),
        }
    }
}

/// Edmonds-Karp on a dense capacity matrix.
pub fn max_flow(topo: &Topology, s: usize, t: usize) -> f64 {
    let n = topo.node_count();
    let mut cap = vec![vec![0.0; n]; n];
    for l in topo.links() {
        cap[l.src][l.dst] += l.capacity;
    }
    let mut total = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if prev[w] == usize::MAX && cap[v][w] > 1e-15 {
                    prev[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        total += push;
    }
}

pub fn demand_matrix(n: usize, commodities: &[Commodity]) -> TrafficMatrix {
    let mut m = TrafficMatrix::zeros(n);
    for c in commodities {
        m.set(c.src, c.dst, c.demand);
    }
    m
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Topology, TrafficMatrix) {
    loop {
        let n = rng.random_range(2..=6);
        let density = rng.random_range(0.4..1.0);
        let topo = random_topology(rng, n, density);
        let mut m = TrafficMatrix::zeros(n);
        for s in 0..n {
            let reach = topo.reachable_from(s);
            for (d, &ok) in reach.iter().enumerate() {
                if s != d && ok && rng.random_bool(0.6) {
                    m.set(s, d, rng.random_range(0.0..5.0));
                }
            }
        }
        if m.as_slice().iter().any(|v| *v > 0.0) {
            return (topo, m);
        }
    }
}

/// Instance counts and worst absolute deviations of [`path_enumeration_check`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerationStats {
    pub grid_checked: usize,
    pub flow_checked: usize,
    pub worst_grid_error: f64,
    pub worst_flow_error: f64,
}

/// Compares the LP with path-split enumeration on random instances of at
/// most 5 nodes and 2 commodities: grid plus refinement when there are at
/// most 2 free split coordinates, the max-flow closed form for single
/// commodities otherwise.
pub fn path_enumeration_check(seed: u64, grid_target: usize, flow_target: usize) -> Result<EnumerationStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = EnumerationStats::default();
    let mut attempts = 0;
    while (st.grid_checked < grid_target || st.flow_checked < flow_target) && attempts < 100_000 {
        attempts += 1;
        let n = rng.random_range(2..=5);
        let density = rng.random_range(0.3..0.9);
        let topo = random_topology(&mut rng, n, density);
        let k = rng.random_range(1..=2).min(n * (n - 1));
        let mut commodities: Vec<Commodity> = Vec::new();
        while commodities.len() < k {
            let (s, d) = (rng.random_range(0..n), rng.random_range(0..n));
            if s != d && !commodities.iter().any(|c| c.src == s && c.dst == d) {
                commodities.push(Commodity {
                    src: s,
                    dst: d,
                    demand: rng.random_range(0.5..10.0),
                });
            }
        }
        let paths: Vec<_> = commodities.iter().map(|c| simple_paths(&topo, c.src, c.dst)).collect();
        if paths.iter().any(Vec::is_empty) {
            continue;
        }
        let lp = min_mlu(&topo, &demand_matrix(n, &commodities)).map_err(|e| e.to_string())?;
        if !lp.is_optimal() {
            return Err(format!("routable instance reported {:?}", lp.status));
        }
        let oracle = PathOracle {
            topo: &topo,
            commodities: &commodities,
            paths,
        };
        if oracle.dims() <= 2 && st.grid_checked < grid_target {
            let grid = oracle.grid(1e-3);
            let refined = oracle.refine();
            if refined > grid + 1e-12 {
                return Err(format!("refinement lost to the grid: {refined} vs {grid}"));
            }
            let err = (lp.mlu - grid.min(refined)).abs();
            if err > 1e-4 {
                return Err(format!("lp {} vs enumeration {}", lp.mlu, grid.min(refined)));
            }
            st.worst_grid_error = st.worst_grid_error.max(err);
            st.grid_checked += 1;
        } else if commodities.len() == 1 && st.flow_checked < flow_target {
            let c = &commodities[0];
            let closed = c.demand / max_flow(&topo, c.src, c.dst);
            let err = (lp.mlu - closed).abs();
            if err > 1e-6 * closed.max(1.0) {
                return Err(format!("lp {} vs max-flow bound {closed}", lp.mlu));
            }
            st.worst_flow_error = st.worst_flow_error.max(err);
            st.flow_checked += 1;
        }
    }
    if st.grid_checked < grid_target || st.flow_checked < flow_target {
        return Err(format!(
            "only {} / {} instances generated",
            st.grid_checked, st.flow_checked
        ));
    }
    Ok(st)
}

/// Homogeneity, monotonicity, flow conservation and agreement of the two
/// formulations on `instances` random instances.
pub fn property_check(seed: u64, instances: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = |e: tmpredict_core::Error| e.to_string();
    for i in 0..instances {
        let (topo, m) = random_instance(&mut rng);
        let base = min_mlu(&topo, &m).map_err(e)?;
        if !base.is_optimal() {
            return Err(format!("instance {i}: not optimal"));
        }
        let max_util = base.per_link_utilization.iter().copied().fold(0.0, f64::max);
        if base.mlu != max_util {
            return Err(format!("instance {i}: mlu {} but max utilization {max_util}", base.mlu));
        }
        let max_demand = m.as_slice().iter().copied().fold(0.0, f64::max);
        for c in &base.commodities {
            let r = c.conservation_residual(&topo);
            if r > 1e-8 * max_demand.max(1.0) {
                return Err(format!("instance {i}: conservation residual {r}"));
            }
        }

        let alpha = rng.random_range(0.0..3.0);
        let scaled = min_mlu(&topo, &m.scaled(alpha)).map_err(e)?;
        if (scaled.mlu - alpha * base.mlu).abs() > 1e-6 {
            return Err(format!(
                "instance {i}: scaled by {alpha} gives {} vs {}",
                scaled.mlu,
                alpha * base.mlu
            ));
        }

        let mut bigger = m.clone();
        let n = m.node_count();
        for s in 0..n {
            for d in 0..n {
                if m.get(s, d) > 0.0 && rng.random_bool(0.5) {
                    bigger.set(s, d, m.get(s, d) + rng.random_range(0.0..2.0));
                }
            }
        }
        let grown = min_mlu(&topo, &bigger).map_err(e)?.mlu;
        if grown < base.mlu - 1e-9 {
            return Err(format!("instance {i}: more demand lowered mlu {} -> {grown}", base.mlu));
        }

        let per_source = min_mlu_with(&topo, &m, Formulation::PerSource).map_err(e)?;
        if (per_source.mlu - base.mlu).abs() > 1e-6 {
            return Err(format!(
                "instance {i}: per-source {} vs per-demand {}",
                per_source.mlu, base.mlu
            ));
        }
    }
    Ok(())
}
