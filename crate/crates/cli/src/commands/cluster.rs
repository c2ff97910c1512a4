use std::fmt::Write as _;

use tmpredict_core::analysis::{flow_histograms, jsd_distance_matrix, write_square_csv};
use tmpredict_core::clusters::{agglomerate, cluster_summary, cut_tree, ClusterSummary};
use tmpredict_core::{ClusterAssignment, ClusterMethod};

use super::{load_dataset, split_and_fit, write_file, write_json};
use crate::config::{CutThreshold, RunConfig};
use crate::error::{CliError, Result};

/// Evenly spaced thresholds for `--sweep`.
const SWEEP_STEPS: usize = 40;

/// Builds the configured flow clustering and writes it with its diagnostics.
pub fn cmd_cluster(cfg: &RunConfig, sweep: bool) -> Result<ClusterSummary> {
    let tm = load_dataset(cfg)?;
    let dir = cfg.method_dir();
    let f = tm.flow_count();
    let assignment = match cfg.method {
        ClusterMethod::Source => ClusterAssignment::source(tm.node_count())?,
        ClusterMethod::EntireMatrix => ClusterAssignment::entire_matrix(f)?,
        ClusterMethod::Local => ClusterAssignment::local(f)?,
        ClusterMethod::Histogram => {
            let (split, params) = split_and_fit(cfg, &tm)?;
            let hists = flow_histograms(&split.train, &params, cfg.bin_count)?;
            let d = jsd_distance_matrix(&hists)?;
            let ids: Vec<usize> = (0..f).collect();
            let mut buf = Vec::new();
            write_square_csv(&mut buf, &ids, d.values())?;
            write_file(&dir.join("distances.csv"), buf)?;

            let linkage = agglomerate(&d, cfg.linkage)?;
            let mut buf = Vec::new();
            linkage.write_csv(&mut buf)?;
            write_file(&dir.join("linkage.csv"), buf)?;

            let threshold = match cfg.cut_threshold {
                CutThreshold::Value(t) => t,
                CutThreshold::Auto => linkage.largest_gap_threshold().ok_or_else(|| {
                    CliError::Validation("too few flows to choose a cut automatically; set cut_threshold".into())
                })?,
            };
            if sweep {
                let top = linkage.merges().last().map_or(1.0, |m| m.distance) * 1.05;
                let mut s = String::from("threshold,clusters\n");
                for k in 0..=SWEEP_STEPS {
                    let t = top * k as f64 / SWEEP_STEPS as f64;
                    let _ = writeln!(s, "{t},{}", cut_tree(&linkage, t)?.cluster_count());
                }
                write_file(&dir.join("sweep.csv"), s)?;
            }
            let a = cut_tree(&linkage, threshold)?;
            write_file(
                &dir.join("cut.txt"),
                format!("threshold={threshold}\nclusters={}\n", a.cluster_count()),
            )?;
            a
        }
    };
    let summary = cluster_summary(&assignment);
    write_json(&dir.join("assignment.json"), &assignment)?;
    write_json(&dir.join("cluster_summary.json"), &summary)?;
    Ok(summary)
}
