//! Pipeline stages. Each reads what earlier stages left under the output
//! directory and writes its own files next to them.

mod cluster;
mod evaluate;
mod ingest;
mod report;
mod synth;
mod train;

pub use cluster::cmd_cluster;
pub use evaluate::{cmd_evaluate, BiasOutcome, Evaluation, AGGREGATE_HEADER};
pub use ingest::{cmd_ingest, IngestSummary};
pub use report::{cmd_report, MethodRow, Report};
pub use synth::{cmd_synth, SynthOutput, SYNTHETIC_CAPACITY};
pub use train::cmd_train;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tmpredict_core::tmdata::{chronological_split, fit_normalization, ingest_canonical, Split};
use tmpredict_core::{NormalizationParams, TmSeries};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_file(path, text)
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path, hint: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| CliError::Validation(format!("{} not found; {hint}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// The ingested dataset, or an error pointing at the ingest stage.
pub(crate) fn load_dataset(cfg: &RunConfig) -> Result<TmSeries> {
    let path = cfg.dataset_copy();
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "{} not found; run `tmpredict ingest` first",
            path.display()
        )));
    }
    Ok(ingest_canonical(&path, cfg.node_count, cfg.interval_seconds)?)
}

pub(crate) fn split_and_fit(cfg: &RunConfig, tm: &TmSeries) -> Result<(Split, NormalizationParams)> {
    let split = chronological_split(tm, cfg.train_frac, cfg.val_frac)?;
    let params = fit_normalization(&split.train)?;
    Ok((split, params))
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {jobs} worker threads: {e}")))
}
