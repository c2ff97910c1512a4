//! Command-line pipeline: ingest, cluster, train, evaluate and report.

pub mod commands;
pub mod config;
pub mod error;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use tmpredict_core::synthetic::SyntheticConfig;

pub use commands::{BiasOutcome, Evaluation, Report};
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "tmpredict",
    version,
    about = "Traffic matrix prediction with clustered recurrent models"
)]
pub struct Cli {
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Clustering method: source, histogram, em or local.
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-cluster training and per-window TE solves.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the dataset and store a canonical copy.
    Ingest,
    /// Cluster flows with the configured method.
    Cluster {
        /// Also tabulate cluster counts over a range of cut thresholds.
        #[arg(long)]
        sweep: bool,
    },
    /// Train one forecaster per cluster and predict the test split.
    Train,
    /// Score predictions and, with a topology, their MLU bias.
    Evaluate {
        /// Upsert a `(method, seed)` row into this CSV.
        #[arg(long)]
        aggregate: Option<PathBuf>,
    },
    /// Build comparison tables from every evaluated method.
    Report,
    /// Generate a synthetic dataset with planted regimes.
    Synth {
        #[arg(long, default_value_t = SyntheticConfig::default().steps)]
        steps: usize,
        #[arg(long, default_value_t = SyntheticConfig::default().node_count)]
        nodes: usize,
    },
}

/// Config file plus command-line overrides, validated.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let cwd = Path::new(".");
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &cli.method {
        cfg.set("method", m, cwd)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and returns the text to print.
pub fn run(cli: &Cli) -> Result<String> {
    if let Command::Synth { steps, nodes } = cli.command {
        let scfg = SyntheticConfig {
            steps,
            node_count: nodes,
            seed: cli.seed.unwrap_or(SyntheticConfig::default().seed),
            ..SyntheticConfig::default()
        };
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let o = commands::cmd_synth(&scfg, &out)?;
        return Ok(format!(
            "dataset={}\ntopology={}\nconfig={}\n",
            o.dataset.display(),
            o.topology.display(),
            o.config.display()
        ));
    }

    let cfg = resolve_config(cli)?;
    let mut s = String::new();
    match &cli.command {
        Command::Ingest => s = commands::cmd_ingest(&cfg)?.to_text(),
        Command::Cluster { sweep } => {
            let summary = commands::cmd_cluster(&cfg, *sweep)?;
            let _ = writeln!(s, "method={}\nclusters={}", summary.method, summary.cluster_count);
        }
        Command::Train => {
            let set = commands::cmd_train(&cfg)?;
            let _ = writeln!(
                s,
                "method={}\nmodels={}\ntest_windows={}",
                cfg.method,
                set.models.len(),
                set.window_count()
            );
        }
        Command::Evaluate { aggregate } => {
            let e = commands::cmd_evaluate(&cfg, aggregate.as_deref())?;
            let _ = writeln!(s, "method={}", cfg.method);
            let _ = writeln!(
                s,
                "normalized.rmse={:e}\nnormalized.mae={:e}",
                e.normalized.rmse, e.normalized.mae
            );
            let _ = writeln!(
                s,
                "denormalized.rmse={:e}\ndenormalized.mae={:e}",
                e.denormalized.rmse, e.denormalized.mae
            );
            match e.bias {
                Some(BiasOutcome::Summary(b)) => {
                    let _ = writeln!(s, "avg_mlu_bias={:e}", b.mean);
                }
                Some(BiasOutcome::AllSkipped { .. }) => s.push_str("avg_mlu_bias=skipped\n"),
                None => {}
            }
        }
        Command::Report => {
            let r = commands::cmd_report(&cfg)?;
            let _ = writeln!(
                s,
                "methods={}\nreport={}",
                r.rows.len(),
                cfg.out.join("report.md").display()
            );
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(s)
}
