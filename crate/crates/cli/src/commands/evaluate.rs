use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use tmpredict_core::metrics::{error_report, CSV_HEADER};
use tmpredict_core::teeval::{bias_series, BiasSummary, Topology, WindowBias};
use tmpredict_core::tmdata::{flow_endpoints, read_canonical};
use tmpredict_core::{ErrorReport, NormalizationParams, Scope, TmSeries, TrafficMatrix};

use super::{load_dataset, read_json, thread_pool, write_file};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Flows sampled for the trace plot: highest, median and lowest mean volume.
const TRACE_FLOWS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum BiasOutcome {
    Summary(BiasSummary),
    /// Every window was skipped.
    AllSkipped {
        zero_truth: usize,
        unroutable: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub normalized: ErrorReport,
    pub denormalized: ErrorReport,
    pub bias: Option<BiasOutcome>,
}

pub const AGGREGATE_HEADER: &str = "method,seed,windows,rmse_normalized,mae_normalized,rmse,mae,avg_mlu_bias";

fn load_predictions(cfg: &RunConfig, dir: &Path) -> Result<TmSeries> {
    let path = dir.join("predictions.csv");
    let file = std::fs::File::open(&path).map_err(|_| {
        CliError::Validation(format!(
            "{} not found; run `tmpredict train --method {}` first",
            path.display(),
            cfg.method
        ))
    })?;
    Ok(read_canonical(file, cfg.node_count, cfg.interval_seconds)?)
}

/// Ground-truth matrices at the predicted timestamps.
fn aligned_truth(tm: &TmSeries, pred: &TmSeries) -> Result<Vec<TrafficMatrix>> {
    let index: HashMap<i64, usize> = tm.timestamps().iter().enumerate().map(|(i, &t)| (t, i)).collect();
    pred.timestamps()
        .iter()
        .map(|t| {
            index
                .get(t)
                .map(|&i| tm.matrix(i).clone())
                .ok_or_else(|| CliError::Validation(format!("prediction timestamp {t} is not in the dataset")))
        })
        .collect()
}

/// Scores the configured method's predictions and writes metric, bias and
/// plot-data files.
pub fn cmd_evaluate(cfg: &RunConfig, aggregate: Option<&Path>) -> Result<Evaluation> {
    let tm = load_dataset(cfg)?;
    let dir = cfg.method_dir();
    let pred_series = load_predictions(cfg, &dir)?;
    let params: NormalizationParams = read_json(
        &dir.join("normalization.json"),
        &format!("run `tmpredict train --method {}` first", cfg.method),
    )?;
    let truth = aligned_truth(&tm, &pred_series)?;
    let pred = pred_series.matrices();

    let normalized = error_report(&truth, pred, Scope::Normalized, Some(&params), true)?;
    let denormalized = error_report(&truth, pred, Scope::Denormalized, None, false)?;

    let mut text = format!("method={}\nseed={}\nwindows={}\n", cfg.method, cfg.seed, normalized.n);
    for r in [&normalized, &denormalized] {
        let _ = writeln!(text, "{}.rmse={:e}", r.scope, r.rmse);
        let _ = writeln!(text, "{}.mae={:e}", r.scope, r.mae);
    }
    write_file(&dir.join("metrics.txt"), text)?;
    let method = cfg.method.as_str();
    write_file(
        &dir.join("metrics.csv"),
        format!(
            "{CSV_HEADER}\n{}\n{}\n",
            normalized.csv_row(method, cfg.seed),
            denormalized.csv_row(method, cfg.seed)
        ),
    )?;
    let mut per_flow = String::from("flow_id,src,dst,rmse_normalized\n");
    for (id, v) in normalized.per_flow_rmse.iter().flatten().enumerate() {
        let (s, d) = flow_endpoints(id, cfg.node_count);
        let _ = writeln!(per_flow, "{id},{s},{d},{v:e}");
    }
    write_file(&dir.join("per_flow_rmse.csv"), per_flow)?;

    write_traces(&dir, &pred_series, &truth)?;
    write_heatmaps(&dir, &pred_series, &truth)?;

    let bias = match &cfg.topology {
        None => None,
        Some(path) => Some(evaluate_bias(cfg, &dir, path, &pred_series, &truth)?),
    };

    if let Some(path) = aggregate {
        let bias_text = match &bias {
            Some(BiasOutcome::Summary(s)) => format!("{:e}", s.mean),
            _ => "skipped".into(),
        };
        let row = format!(
            "{method},{},{},{:e},{:e},{:e},{:e},{bias_text}",
            cfg.seed, normalized.n, normalized.rmse, normalized.mae, denormalized.rmse, denormalized.mae
        );
        upsert_aggregate(path, &row, method, cfg.seed)?;
    }

    Ok(Evaluation {
        normalized,
        denormalized,
        bias,
    })
}

fn evaluate_bias(
    cfg: &RunConfig,
    dir: &Path,
    topo_path: &Path,
    pred_series: &TmSeries,
    truth: &[TrafficMatrix],
) -> Result<BiasOutcome> {
    let topo = Topology::read(topo_path)?;
    if topo.node_count() != cfg.node_count {
        return Err(CliError::Validation(format!(
            "topology {} has {} nodes, dataset has {}",
            topo_path.display(),
            topo.node_count(),
            cfg.node_count
        )));
    }
    let series =
        thread_pool(cfg.jobs)?.install(|| bias_series(&topo, truth, pred_series.matrices(), cfg.te_formulation))?;

    let mut csv = String::from("window,timestamp,bias\n");
    for (w, (b, t)) in series.iter().zip(pred_series.timestamps()).enumerate() {
        let cell = match b {
            WindowBias::Value(v) => format!("{v:e}"),
            WindowBias::ZeroTruth => "skipped_zero_truth".into(),
            WindowBias::Unroutable => "skipped_unroutable".into(),
        };
        let _ = writeln!(csv, "{w},{t},{cell}");
    }
    write_file(&dir.join("bias_series.csv"), csv)?;

    let count = |k: WindowBias| series.iter().filter(|b| **b == k).count();
    let outcome = match BiasSummary::from_series(&series) {
        Ok(s) => BiasOutcome::Summary(s),
        Err(tmpredict_core::Error::EmptyInput(_)) => BiasOutcome::AllSkipped {
            zero_truth: count(WindowBias::ZeroTruth),
            unroutable: count(WindowBias::Unroutable),
        },
        Err(e) => return Err(e.into()),
    };
    let text = match &outcome {
        BiasOutcome::Summary(s) => format!(
            "status=ok\navg_mlu_bias={:e}\nwindows_used={}\nskipped_zero_truth={}\nskipped_unroutable={}\n",
            s.mean, s.used, s.skipped_zero_truth, s.skipped_unroutable
        ),
        BiasOutcome::AllSkipped { zero_truth, unroutable } => format!(
            "status=skipped\nwindows_used=0\nskipped_zero_truth={zero_truth}\nskipped_unroutable={unroutable}\n"
        ),
    };
    write_file(&dir.join("bias.txt"), text)?;
    Ok(outcome)
}

fn write_traces(dir: &Path, pred: &TmSeries, truth: &[TrafficMatrix]) -> Result<()> {
    let n = pred.node_count();
    let f = pred.flow_count();
    let mut by_volume: Vec<(f64, usize)> = (0..f)
        .map(|id| (truth.iter().map(|m| m.as_slice()[id]).sum::<f64>(), id))
        .collect();
    by_volume.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut picks = vec![by_volume[0].1, by_volume[f / 2].1, by_volume[f - 1].1];
    picks.dedup();
    picks.truncate(TRACE_FLOWS);

    let mut csv = String::from("timestamp,flow_id,src,dst,truth,predicted\n");
    for &id in &picks {
        let (s, d) = flow_endpoints(id, n);
        for (w, t) in pred.timestamps().iter().enumerate() {
            let _ = writeln!(
                csv,
                "{t},{id},{s},{d},{},{}",
                truth[w].as_slice()[id],
                pred.matrix(w).as_slice()[id]
            );
        }
    }
    write_file(&dir.join("flow_traces.csv"), csv)
}

/// Full matrices at the heaviest and lightest true windows.
fn write_heatmaps(dir: &Path, pred: &TmSeries, truth: &[TrafficMatrix]) -> Result<()> {
    let total = |m: &TrafficMatrix| m.as_slice().iter().sum::<f64>();
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| total(&truth[b]).total_cmp(&total(&truth[a])).then(a.cmp(&b)));
    let mut picks = vec![("high_load", order[0]), ("low_load", order[order.len() - 1])];
    picks.dedup_by_key(|p| p.1);

    let n = pred.node_count();
    let mut csv = String::from("label,window,timestamp,src,dst,truth,predicted\n");
    for (label, w) in picks {
        let t = pred.timestamps()[w];
        for s in 0..n {
            for d in 0..n {
                let _ = writeln!(
                    csv,
                    "{label},{w},{t},{s},{d},{},{}",
                    truth[w].get(s, d),
                    pred.matrix(w).get(s, d)
                );
            }
        }
    }
    write_file(&dir.join("heatmaps.csv"), csv)
}

/// Replaces or inserts the row for `(method, seed)`, keeping rows sorted.
fn upsert_aggregate(path: &Path, row: &str, method: &str, seed: u64) -> Result<()> {
    let existing = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let mut lines = existing.lines();
    if let Some(header) = lines.next() {
        if header != AGGREGATE_HEADER {
            return Err(CliError::Validation(format!(
                "{} is not an aggregate file (unexpected header)",
                path.display()
            )));
        }
    }
    let key = format!("{method},{seed},");
    let mut rows: Vec<String> = lines.filter(|l| !l.starts_with(&key)).map(str::to_string).collect();
    rows.push(row.to_string());
    rows.sort_by(|a, b| {
        let k = |r: &str| {
            let mut it = r.split(',');
            let m = it.next().unwrap_or("").to_string();
            let s: u64 = it.next().and_then(|v| v.parse().ok()).unwrap_or(0);
            (m, s)
        };
        k(a).cmp(&k(b))
    });
    let mut text = format!("{AGGREGATE_HEADER}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    write_file(path, text)
}
