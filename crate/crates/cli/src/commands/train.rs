use std::fmt::Write as _;

use serde::Serialize;
use tmpredict_core::forecast::{run_experiment, write_checkpoint, PredictionSet, TrainReport};
use tmpredict_core::tmdata::write_canonical;
use tmpredict_core::ClusterAssignment;

use super::{load_dataset, read_json, write_file, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Serialize)]
struct ClusterReport<'a> {
    cluster: usize,
    flows: &'a [usize],
    report: &'a TrainReport,
}

/// Trains one model per cluster and writes predictions, checkpoints,
/// training curves and the run manifest.
pub fn cmd_train(cfg: &RunConfig) -> Result<PredictionSet> {
    let tm = load_dataset(cfg)?;
    let dir = cfg.method_dir();
    let hint = format!("run `tmpredict cluster --method {}` first", cfg.method);
    let assignment: ClusterAssignment = read_json(&dir.join("assignment.json"), &hint)?;
    if assignment.method() != cfg.method {
        return Err(CliError::Validation(format!(
            "assignment in {} was built for method {}, not {}",
            dir.display(),
            assignment.method(),
            cfg.method
        )));
    }
    let set = run_experiment(&tm, &assignment, &cfg.experiment_config())?;

    let mut buf = Vec::new();
    write_canonical(&set.predicted_series()?, &mut buf)?;
    write_file(&dir.join("predictions.csv"), buf)?;

    let ckpt_dir = dir.join("checkpoints");
    if ckpt_dir.exists() {
        std::fs::remove_dir_all(&ckpt_dir).map_err(|e| CliError::io(&ckpt_dir, e))?;
    }
    for (i, model) in set.models.iter().enumerate() {
        let mut buf = Vec::new();
        write_checkpoint(model, &mut buf)?;
        write_file(&ckpt_dir.join(format!("cluster_{i:04}.gru")), buf)?;
    }

    let reports: Vec<ClusterReport> = assignment
        .clusters()
        .iter()
        .zip(&set.reports)
        .enumerate()
        .map(|(cluster, (flows, report))| ClusterReport { cluster, flows, report })
        .collect();
    write_json(&dir.join("train_reports.json"), &reports)?;
    write_json(&dir.join("normalization.json"), &set.normalization)?;

    let mut manifest = cfg.canonical_text();
    let b = set.boundaries;
    let _ = writeln!(manifest, "derived.config_hash = {}", cfg.hash());
    let _ = writeln!(manifest, "derived.steps = {}", b.len);
    let _ = writeln!(manifest, "derived.train_end = {}", b.train_end);
    let _ = writeln!(manifest, "derived.val_end = {}", b.val_end);
    let _ = writeln!(manifest, "derived.test_windows = {}", set.window_count());
    let _ = writeln!(manifest, "derived.models = {}", set.models.len());
    write_file(&dir.join("run_manifest.txt"), manifest)?;
    Ok(set)
}
