use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use tmpredict_core::analysis::{correlation_matrix, same_source_fraction, PairGrouping};
use tmpredict_core::tmdata::extract_flows;
use tmpredict_core::ClusterMethod;

use super::{load_dataset, split_and_fit, write_file};
use crate::config::{Reference, RunConfig};
use crate::error::{CliError, Result};

/// Top-percent cut points for the same-source correlation curve.
const FIG_PERCENTS: [f64; 10] = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0];

/// Measured results of one method, read back from its evaluate outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub method: ClusterMethod,
    pub rmse_normalized: f64,
    pub mae_normalized: f64,
    pub rmse: f64,
    pub mae: f64,
    /// `None` when no topology was evaluated or every window was skipped.
    pub avg_mlu_bias: Option<f64>,
    pub bias_status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<MethodRow>,
    /// `(top_percent, source fraction, source-or-destination fraction)`.
    pub same_source: Vec<(f64, f64, f64)>,
}

/// Published `(rmse, mae, bias)` for the reference datasets.
fn reference_values(reference: Reference, method: ClusterMethod) -> Option<(f64, f64, f64)> {
    use ClusterMethod::*;
    let v = match (reference, method) {
        (Reference::None, _) => return None,
        (Reference::Abilene, Histogram) => (2.38e-2, 1.80e-2, 1.00),
        (Reference::Abilene, Source) => (0.286, 0.242, 0.80),
        (Reference::Abilene, EntireMatrix) => (0.294, 0.249, 0.92),
        (Reference::Abilene, Local) => (2.89e-3, 1.88e-3, 1.02),
        (Reference::Geant, Histogram) => (8.55e-2, 6.79e-2, 1.07),
        (Reference::Geant, Source) => (0.114, 0.092, 1.06),
        (Reference::Geant, EntireMatrix) => (0.244, 0.196, 0.88),
        (Reference::Geant, Local) => (1.11e-2, 7.79e-3, 1.06),
    };
    Some(v)
}

fn read_kv(path: &Path) -> Result<Option<HashMap<String, String>>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(CliError::io(path, e)),
    };
    Ok(Some(
        text.lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect(),
    ))
}

fn field(map: &HashMap<String, String>, key: &str, path: &Path) -> Result<f64> {
    map.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Validation(format!("{} has no numeric `{key}`", path.display())))
}

fn method_row(cfg: &RunConfig, method: ClusterMethod) -> Result<Option<MethodRow>> {
    let dir = cfg.method_dir_for(method);
    let metrics_path = dir.join("metrics.txt");
    let Some(m) = read_kv(&metrics_path)? else {
        return Ok(None);
    };
    let bias_path = dir.join("bias.txt");
    let (avg_mlu_bias, bias_status) = match read_kv(&bias_path)? {
        None => (None, "not_evaluated".to_string()),
        Some(b) => {
            let status = b.get("status").cloned().unwrap_or_default();
            let value = if status == "ok" {
                Some(field(&b, "avg_mlu_bias", &bias_path)?)
            } else {
                None
            };
            (value, status)
        }
    };
    Ok(Some(MethodRow {
        method,
        rmse_normalized: field(&m, "normalized.rmse", &metrics_path)?,
        mae_normalized: field(&m, "normalized.mae", &metrics_path)?,
        rmse: field(&m, "denormalized.rmse", &metrics_path)?,
        mae: field(&m, "denormalized.mae", &metrics_path)?,
        avg_mlu_bias,
        bias_status,
    }))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"))
}

/// Collects every evaluated method into comparison tables and computes the
/// same-source correlation curve of the training split.
pub fn cmd_report(cfg: &RunConfig) -> Result<Report> {
    let rows: Vec<MethodRow> = ClusterMethod::ALL
        .iter()
        .filter_map(|&m| method_row(cfg, m).transpose())
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "no evaluated methods under {}; run `tmpredict evaluate` first",
            cfg.out.join("methods").display()
        )));
    }

    let tm = load_dataset(cfg)?;
    let (split, _) = split_and_fit(cfg, &tm)?;
    let corr = correlation_matrix(&extract_flows(&split.train)?, cfg.node_count)?;
    let same_source = FIG_PERCENTS
        .iter()
        .map(|&p| {
            Ok((
                p,
                same_source_fraction(&corr, p, PairGrouping::Source)?,
                same_source_fraction(&corr, p, PairGrouping::SourceOrDestination)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let with_ref = cfg.reference != Reference::None;
    let refs = |m| reference_values(cfg.reference, m);

    let mut t1 = String::from("method,rmse_normalized,mae_normalized,rmse,mae");
    let mut t2 = String::from("method,avg_mlu_bias,status");
    if with_ref {
        t1.push_str(",reference_rmse,reference_mae");
        t2.push_str(",reference_bias");
    }
    t1.push('\n');
    t2.push('\n');
    for r in &rows {
        let _ = write!(
            t1,
            "{},{:e},{:e},{:e},{:e}",
            r.method, r.rmse_normalized, r.mae_normalized, r.rmse, r.mae
        );
        let bias = r.avg_mlu_bias.map_or(String::new(), |b| format!("{b:e}"));
        let _ = write!(t2, "{},{bias},{}", r.method, r.bias_status);
        if let Some((rm, ma, bi)) = refs(r.method) {
            let _ = write!(t1, ",{rm:e},{ma:e}");
            let _ = write!(t2, ",{bi:e}");
        }
        t1.push('\n');
        t2.push('\n');
    }
    write_file(&cfg.out.join("report_table1.csv"), &t1)?;
    write_file(&cfg.out.join("report_table2.csv"), &t2)?;

    let mut fig = String::from("top_percent,same_source,same_source_or_destination\n");
    for (p, s, sd) in &same_source {
        let _ = writeln!(fig, "{p},{s:e},{sd:e}");
    }
    write_file(&cfg.out.join("fig2_same_source.csv"), fig)?;

    let mut md = String::from("# Prediction report\n\n");
    let _ = writeln!(md, "Config hash: `{}`\n", cfg.hash());
    md.push_str("## Normalized average test error\n\n");
    if with_ref {
        md.push_str("| Method | RMSE | MAE | Reference RMSE | Reference MAE |\n|---|---|---|---|---|\n");
    } else {
        md.push_str("| Method | RMSE | MAE |\n|---|---|---|\n");
    }
    for r in &rows {
        let _ = write!(
            md,
            "| {} | {:.4e} | {:.4e} |",
            r.method, r.rmse_normalized, r.mae_normalized
        );
        if with_ref {
            let (rm, ma) = refs(r.method).map_or((None, None), |v| (Some(v.0), Some(v.1)));
            let _ = write!(md, " {} | {} |", opt(rm), opt(ma));
        }
        md.push('\n');
    }
    md.push_str("\n## Average MLU bias\n\n");
    if with_ref {
        md.push_str("| Method | Bias | Reference bias |\n|---|---|---|\n");
    } else {
        md.push_str("| Method | Bias |\n|---|---|\n");
    }
    for r in &rows {
        let bias = r
            .avg_mlu_bias
            .map_or_else(|| r.bias_status.clone(), |b| format!("{b:.4}"));
        let _ = write!(md, "| {} | {bias} |", r.method);
        if with_ref {
            let _ = write!(
                md,
                " {} |",
                refs(r.method).map_or("-".into(), |v| format!("{:.2}", v.2))
            );
        }
        md.push('\n');
    }
    md.push_str("\n## Same-source share of the most correlated flow pairs\n\n");
    md.push_str("| Top % | Same source | Same source or destination |\n|---|---|---|\n");
    for (p, s, sd) in &same_source {
        let _ = writeln!(md, "| {p} | {s:.4} | {sd:.4} |");
    }
    write_file(&cfg.out.join("report.md"), md)?;

    Ok(Report { rows, same_source })
}
