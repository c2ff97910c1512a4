//! Flow clustering: by source node, or agglomeratively over a distance matrix
//! with a threshold cut of the dendrogram.

mod assignment;
mod linkage;

pub use assignment::{cluster_summary, ClusterAssignment, ClusterMethod, ClusterSummary};
pub use linkage::{agglomerate, cut_tree, Linkage, LinkageMatrix, Merge};

use crate::analysis::{flow_histograms, jsd_distance_matrix};
use crate::error::Result;
use crate::tmdata::{NormalizationParams, TmSeries};

/// Histogram clustering end to end: normalized histograms of the training
/// split, pairwise JSD, agglomeration. Returns the dendrogram so callers can
/// choose the cut.
pub fn histogram_linkage(
    train: &TmSeries,
    params: &NormalizationParams,
    bin_count: usize,
    linkage: Linkage,
) -> Result<LinkageMatrix> {
    let hists = flow_histograms(train, params, bin_count)?;
    let d = jsd_distance_matrix(&hists)?;
    agglomerate(&d, linkage)
}
