use std::fmt::Write as _;

use tmpredict_core::tmdata::{ingest_canonical, write_canonical};
use tmpredict_core::TmSeries;

use super::write_file;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Dataset statistics printed by `ingest`.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub nodes: usize,
    pub flows: usize,
    pub steps: usize,
    pub first_timestamp: i64,
    pub last_timestamp: i64,
    pub duration_seconds: i64,
    /// Intervals absent between the first and last timestamp.
    pub missing_intervals: i64,
    /// Matrix entries without a record (zero traffic).
    pub zero_entries: usize,
    pub all_zero_flows: usize,
}

impl IngestSummary {
    pub fn of(tm: &TmSeries) -> Self {
        let ts = tm.timestamps();
        let interval = i64::from(tm.interval_seconds());
        let missing_intervals = ts.windows(2).map(|w| ((w[1] - w[0]) / interval - 1).max(0)).sum();
        let zero_entries = tm
            .matrices()
            .iter()
            .map(|m| m.as_slice().iter().filter(|v| **v == 0.0).count())
            .sum();
        let all_zero_flows = (0..tm.flow_count())
            .filter(|&id| tm.matrices().iter().all(|m| m.as_slice()[id] == 0.0))
            .count();
        IngestSummary {
            nodes: tm.node_count(),
            flows: tm.flow_count(),
            steps: tm.len(),
            first_timestamp: ts[0],
            last_timestamp: ts[ts.len() - 1],
            duration_seconds: ts[ts.len() - 1] - ts[0] + interval,
            missing_intervals,
            zero_entries,
            all_zero_flows,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let entries = (self.steps * self.flows).max(1) as f64;
        let _ = writeln!(s, "nodes={}", self.nodes);
        let _ = writeln!(s, "flows={}", self.flows);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "first_timestamp={}", self.first_timestamp);
        let _ = writeln!(s, "last_timestamp={}", self.last_timestamp);
        let _ = writeln!(s, "duration_seconds={}", self.duration_seconds);
        let _ = writeln!(s, "missing_intervals={}", self.missing_intervals);
        let _ = writeln!(s, "zero_entries={}", self.zero_entries);
        let _ = writeln!(s, "zero_entry_fraction={:.6}", self.zero_entries as f64 / entries);
        let _ = writeln!(s, "all_zero_flows={}", self.all_zero_flows);
        s
    }
}

/// Validates the configured dataset and stores a canonical copy in the
/// output directory.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary> {
    let src = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Validation("`dataset` is not set in the config".into()))?;
    let tm = ingest_canonical(src, cfg.node_count, cfg.interval_seconds)?;
    let mut buf = Vec::new();
    write_canonical(&tm, &mut buf)?;
    write_file(&cfg.dataset_copy(), buf)?;
    let summary = IngestSummary::of(&tm);
    write_file(&cfg.out.join("ingest_summary.txt"), summary.to_text())?;
    Ok(summary)
}
