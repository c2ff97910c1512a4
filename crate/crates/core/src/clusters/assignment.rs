use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tmdata::FlowId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    Source,
    Histogram,
    EntireMatrix,
    Local,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 4] = [
        ClusterMethod::Histogram,
        ClusterMethod::Source,
        ClusterMethod::EntireMatrix,
        ClusterMethod::Local,
    ];

    /// Short name used on the command line and in file names.
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterMethod::Source => "source",
            ClusterMethod::Histogram => "histogram",
            ClusterMethod::EntireMatrix => "em",
            ClusterMethod::Local => "local",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(ClusterMethod::Source),
            "histogram" => Ok(ClusterMethod::Histogram),
            "em" | "entire_matrix" => Ok(ClusterMethod::EntireMatrix),
            "local" => Ok(ClusterMethod::Local),
            other => Err(Error::InvalidArgument(format!(
                "unknown clustering method `{other}` (expected source, histogram, em or local)"
            ))),
        }
    }
}

/// A partition of flow ids `0..F` into non-empty clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentRepr", into = "AssignmentRepr")]
pub struct ClusterAssignment {
    method: ClusterMethod,
    clusters: Vec<Vec<FlowId>>,
    flow_to_cluster: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AssignmentRepr {
    method: ClusterMethod,
    clusters: Vec<Vec<FlowId>>,
}

impl TryFrom<AssignmentRepr> for ClusterAssignment {
    type Error = Error;
    fn try_from(r: AssignmentRepr) -> Result<Self> {
        ClusterAssignment::new(r.method, r.clusters)
    }
}

impl From<ClusterAssignment> for AssignmentRepr {
    fn from(a: ClusterAssignment) -> Self {
        AssignmentRepr {
            method: a.method,
            clusters: a.clusters,
        }
    }
}

impl ClusterAssignment {
    /// Validates that `clusters` partition `0..F` exactly, with no empty cluster.
    pub fn new(method: ClusterMethod, clusters: Vec<Vec<FlowId>>) -> Result<Self> {
        let f: usize = clusters.iter().map(Vec::len).sum();
        let mut flow_to_cluster = vec![usize::MAX; f];
        for (c, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidArgument(format!("cluster {c} is empty")));
            }
            for &id in members {
                if id >= f || flow_to_cluster[id] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "flow {id} is out of range or assigned twice"
                    )));
                }
                flow_to_cluster[id] = c;
            }
        }
        Ok(ClusterAssignment {
            method,
            clusters,
            flow_to_cluster,
        })
    }

    pub fn source(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidArgument("node_count must be positive".into()));
        }
        let clusters = (0..node_count)
            .map(|s| (0..node_count).map(|d| s * node_count + d).collect())
            .collect();
        ClusterAssignment::new(ClusterMethod::Source, clusters)
    }

    pub fn entire_matrix(flow_count: usize) -> Result<Self> {
        ClusterAssignment::new(ClusterMethod::EntireMatrix, vec![(0..flow_count).collect()])
    }

    pub fn local(flow_count: usize) -> Result<Self> {
        ClusterAssignment::new(ClusterMethod::Local, (0..flow_count).map(|i| vec![i]).collect())
    }

    pub fn method(&self) -> ClusterMethod {
        self.method
    }

    pub fn clusters(&self) -> &[Vec<FlowId>] {
        &self.clusters
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn flow_count(&self) -> usize {
        self.flow_to_cluster.len()
    }

    pub fn cluster_of(&self, id: FlowId) -> usize {
        self.flow_to_cluster[id]
    }

    /// Whether every cluster of `self` lies inside a single cluster of `coarser`.
    pub fn refines(&self, coarser: &ClusterAssignment) -> bool {
        self.flow_count() == coarser.flow_count()
            && self
                .clusters
                .iter()
                .all(|c| c.iter().all(|&id| coarser.cluster_of(id) == coarser.cluster_of(c[0])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub method: ClusterMethod,
    pub cluster_count: usize,
    /// cluster size -> number of clusters of that size
    pub size_histogram: BTreeMap<usize, usize>,
    pub clusters: Vec<Vec<FlowId>>,
}

pub fn cluster_summary(a: &ClusterAssignment) -> ClusterSummary {
    let mut size_histogram = BTreeMap::new();
    for c in &a.clusters {
        *size_histogram.entry(c.len()).or_insert(0) += 1;
    }
    ClusterSummary {
        method: a.method,
        cluster_count: a.cluster_count(),
        size_histogram,
        clusters: a.clusters.clone(),
    }
}
