use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, ClusterMethod};
use crate::analysis::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Average,
    Complete,
    Single,
}

impl Linkage {
    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        }
    }

    /// Lance-Williams update: distance from `k` to `a ∪ b`.
    #[inline]
    fn combine(self, d_ka: f64, d_kb: f64, size_a: usize, size_b: usize) -> f64 {
        match self {
            // Written as an interpolation so equal inputs reproduce themselves exactly.
            Linkage::Average => d_ka + (d_kb - d_ka) * (size_b as f64 / (size_a + size_b) as f64),
            Linkage::Complete => d_ka.max(d_kb),
            Linkage::Single => d_ka.min(d_kb),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::InvalidArgument(format!("unknown linkage `{other}`"))),
        }
    }
}

/// One agglomeration step. Ids below the leaf count are leaves; the node
/// created by step `s` gets id `leaf_count + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageMatrix {
    leaf_count: usize,
    merges: Vec<Merge>,
}

impl LinkageMatrix {
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// `left,right,distance,size` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<linkage csv>", e);
        writeln!(out, "left,right,distance,size").map_err(io)?;
        for m in &self.merges {
            writeln!(out, "{},{},{},{}", m.left, m.right, m.distance, m.size).map_err(io)?;
        }
        Ok(())
    }

    /// Threshold halfway across the widest gap between consecutive merge
    /// heights, so a cut there stops just before the largest jump. Returns
    /// `None` with fewer than two merges.
    pub fn largest_gap_threshold(&self) -> Option<f64> {
        self.merges
            .windows(2)
            .map(|w| (w[0].distance, w[1].distance))
            .fold(None::<(f64, f64)>, |best, (lo, hi)| match best {
                Some((blo, bhi)) if bhi - blo >= hi - lo => Some((blo, bhi)),
                _ => Some((lo, hi)),
            })
            .map(|(lo, hi)| 0.5 * (lo + hi))
    }
}

/// Agglomerative clustering over a full distance matrix.
///
/// Each step merges the closest pair of active clusters; ties go to the pair
/// with the smallest `(min id, max id)`. The naive `O(F^3)` scan is fine for
/// the few hundred flows of a traffic matrix.
pub fn agglomerate(d: &DistanceMatrix, linkage: Linkage) -> Result<LinkageMatrix> {
    let n = d.dim();
    if n < 2 {
        return Err(Error::EmptyInput(format!("need at least 2 items to cluster, got {n}")));
    }
    // Slot i holds one active cluster; `dist` is indexed by slot.
    let mut dist: Vec<f64> = d.values().to_vec();
    let mut slot_id: Vec<usize> = (0..n).collect();
    let mut slot_size: Vec<usize> = vec![1; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut last = f64::NEG_INFINITY;

    for step in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let dab = dist[a * n + b];
                let (ia, ib) = (slot_id[a], slot_id[b]);
                let key = (ia.min(ib), ia.max(ib));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => dab < bd || (dab == bd && key < bkey),
                };
                if better {
                    best = Some((dab, key, a, b));
                }
            }
        }
        let (dab, (left, right), sa, sb) = best.expect("at least two active clusters");
        // Lance-Williams rounding can dip an ulp below the previous height.
        let height = dab.max(last);
        last = height;
        let size = slot_size[sa] + slot_size[sb];
        merges.push(Merge {
            left,
            right,
            distance: height,
            size,
        });

        // The merged cluster takes over slot `keep`; `drop` is retired.
        let (keep, drop) = (sa.min(sb), sa.max(sb));
        for &k in &active {
            if k == sa || k == sb {
                continue;
            }
            let v = linkage.combine(dist[k * n + sa], dist[k * n + sb], slot_size[sa], slot_size[sb]);
            dist[k * n + keep] = v;
            dist[keep * n + k] = v;
        }
        slot_size[keep] = size;
        slot_id[keep] = n + step;
        active.retain(|&s| s != drop);
    }
    Ok(LinkageMatrix { leaf_count: n, merges })
}

/// Clusters formed by all merges with height strictly below `threshold`,
/// ordered by their smallest member.
pub fn cut_tree(l: &LinkageMatrix, threshold: f64) -> Result<ClusterAssignment> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be >= 0")));
    }
    let n = l.leaf_count;
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (s, m) in l.merges.iter().enumerate() {
        if m.distance < threshold {
            let node = n + s;
            let a = find(&mut parent, m.left);
            let b = find(&mut parent, m.right);
            parent[a] = node;
            parent[b] = node;
        }
    }
    let mut root_to_cluster = std::collections::HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        let c = *root_to_cluster.entry(root).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[c].push(leaf);
    }
    // Leaves were visited in ascending order, so clusters are already sorted
    // by smallest member.
    ClusterAssignment::new(ClusterMethod::Histogram, clusters)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn dm(dim: usize, upper: &[f64]) -> DistanceMatrix {
        let mut d = vec![0.0; dim * dim];
        let mut k = 0;
        for i in 0..dim {
            for j in i + 1..dim {
                d[i * dim + j] = upper[k];
                d[j * dim + i] = upper[k];
                k += 1;
            }
        }
        DistanceMatrix::from_values(dim, d).unwrap()
    }

    #[test]
    fn three_point_average_linkage() {
        let d = dm(3, &[0.1, 0.9, 0.8]);
        let l = agglomerate(&d, Linkage::Average).unwrap();
        assert_eq!(
            l.merges()[0],
            Merge {
                left: 0,
                right: 1,
                distance: 0.1,
                size: 2
            }
        );
        assert_eq!((l.merges()[1].left, l.merges()[1].right, l.merges()[1].size), (2, 3, 3));
        assert!((l.merges()[1].distance - 0.85).abs() < 1e-15);
        assert_eq!(cut_tree(&l, 0.5).unwrap().clusters(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn three_point_other_linkages() {
        let d = dm(3, &[0.1, 0.9, 0.8]);
        assert_eq!(agglomerate(&d, Linkage::Complete).unwrap().merges()[1].distance, 0.9);
        assert_eq!(agglomerate(&d, Linkage::Single).unwrap().merges()[1].distance, 0.8);
    }

    #[test]
    fn equal_distances_merge_by_smallest_ids() {
        let d = dm(4, &[0.5; 6]);
        let l = agglomerate(&d, Linkage::Average).unwrap();
        let pairs: Vec<_> = l.merges().iter().map(|m| (m.left, m.right, m.distance)).collect();
        assert_eq!(pairs, vec![(0, 1, 0.5), (2, 3, 0.5), (4, 5, 0.5)]);
    }

    #[test]
    fn two_points_and_errors() {
        let l = agglomerate(&dm(2, &[0.3]), Linkage::Average).unwrap();
        assert_eq!(
            l.merges(),
            &[Merge {
                left: 0,
                right: 1,
                distance: 0.3,
                size: 2
            }]
        );
        let one = DistanceMatrix::from_values(1, vec![0.0]).unwrap();
        assert!(matches!(agglomerate(&one, Linkage::Average), Err(Error::EmptyInput(_))));
        assert!(cut_tree(&l, -1.0).is_err());
    }

    #[test]
    fn cut_extremes() {
        let l = agglomerate(&dm(3, &[0.1, 0.9, 0.8]), Linkage::Average).unwrap();
        assert_eq!(cut_tree(&l, 0.05).unwrap().cluster_count(), 3);
        assert_eq!(cut_tree(&l, 0.1).unwrap().cluster_count(), 3);
        assert_eq!(cut_tree(&l, 0.86).unwrap().cluster_count(), 1);
    }

    #[test]
    fn gap_threshold_and_csv() {
        let l = agglomerate(&dm(3, &[0.1, 0.9, 0.8]), Linkage::Average).unwrap();
        let t = l.largest_gap_threshold().unwrap();
        assert!((t - 0.475).abs() < 1e-12);
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("left,right,distance,size\n0,1,0.1,2\n2,3,"));
    }

    fn random_matrix(dim: usize) -> impl Strategy<Value = DistanceMatrix> {
        prop::collection::vec(0.0f64..1.0, dim * (dim - 1) / 2).prop_map(move |u| dm(dim, &u))
    }

    proptest! {
        #[test]
        fn cuts_partition_and_refine(d in (2usize..12).prop_flat_map(random_matrix), t1 in 0.0f64..1.2, t2 in 0.0f64..1.2) {
            for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
                let l = agglomerate(&d, linkage).unwrap();
                prop_assert_eq!(l.merges().len(), d.dim() - 1);
                prop_assert_eq!(l.merges().last().unwrap().size, d.dim());
                prop_assert!(l.merges().windows(2).all(|w| w[0].distance <= w[1].distance));
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                let fine = cut_tree(&l, lo).unwrap();
                let coarse = cut_tree(&l, hi).unwrap();
                prop_assert_eq!(fine.flow_count(), d.dim());
                prop_assert!(fine.refines(&coarse));
            }
        }
    }
}
