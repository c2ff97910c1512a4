//! Error metrics between predicted and true traffic matrix sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tmdata::{NormalizationParams, TrafficMatrix};

fn check_shapes(truth: &[TrafficMatrix], pred: &[TrafficMatrix]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::EmptyInput("no matrices to compare".into()));
    }
    if truth.len() != pred.len() {
        return Err(Error::Dimension(format!(
            "{} true matrices vs {} predicted",
            truth.len(),
            pred.len()
        )));
    }
    let n = truth[0].node_count();
    if truth.iter().chain(pred).any(|m| m.node_count() != n) {
        return Err(Error::Dimension("matrices differ in node count".into()));
    }
    Ok(())
}

fn diffs<'a>(truth: &'a [TrafficMatrix], pred: &'a [TrafficMatrix]) -> impl Iterator<Item = f64> + 'a {
    truth
        .iter()
        .zip(pred)
        .flat_map(|(t, p)| t.as_slice().iter().zip(p.as_slice()).map(|(a, b)| a - b))
}

/// Root of the mean squared difference over all windows and entries.
pub fn rmse(truth: &[TrafficMatrix], pred: &[TrafficMatrix]) -> Result<f64> {
    check_shapes(truth, pred)?;
    let count = truth.len() * truth[0].as_slice().len();
    Ok((diffs(truth, pred).map(|d| d * d).sum::<f64>() / count as f64).sqrt())
}

/// Mean absolute difference over all windows and entries.
pub fn mae(truth: &[TrafficMatrix], pred: &[TrafficMatrix]) -> Result<f64> {
    check_shapes(truth, pred)?;
    let count = truth.len() * truth[0].as_slice().len();
    Ok(diffs(truth, pred).map(f64::abs).sum::<f64>() / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Per-flow min-max units of the training split.
    Normalized,
    /// Raw traffic units.
    Denormalized,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Normalized => "normalized",
            Scope::Denormalized => "denormalized",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Scope::Normalized),
            "denormalized" => Ok(Scope::Denormalized),
            other => Err(Error::InvalidArgument(format!("unknown scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rmse: f64,
    pub mae: f64,
    /// Number of compared windows.
    pub n: usize,
    pub scope: Scope,
    pub per_flow_rmse: Option<Vec<f64>>,
}

pub const CSV_HEADER: &str = "method,seed,scope,n,rmse,mae";

impl ErrorReport {
    /// `key=value` lines; the per-flow breakdown is comma separated.
    pub fn to_key_value(&self) -> String {
        let mut s = format!(
            "scope={}\nn={}\nrmse={:e}\nmae={:e}\n",
            self.scope, self.n, self.rmse, self.mae
        );
        if let Some(per_flow) = &self.per_flow_rmse {
            let values: Vec<String> = per_flow.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&format!("per_flow_rmse={}\n", values.join(",")));
        }
        s
    }

    /// One row matching [`CSV_HEADER`].
    pub fn csv_row(&self, method: &str, seed: u64) -> String {
        format!(
            "{method},{seed},{},{},{:e},{:e}",
            self.scope, self.n, self.rmse, self.mae
        )
    }
}

fn rescale(ms: &[TrafficMatrix], p: &NormalizationParams) -> Vec<TrafficMatrix> {
    ms.iter()
        .map(|m| {
            let values = m
                .as_slice()
                .iter()
                .enumerate()
                .map(|(id, &v)| p.scale_unclamped(v, id))
                .collect();
            TrafficMatrix::from_values(m.node_count(), values).expect("same shape")
        })
        .collect()
}

/// RMSE and MAE at the requested scope. The normalized scope rescales both
/// sides with the training min-max parameters (without clamping, so test
/// values outside the training range still count in full).
pub fn error_report(
    truth: &[TrafficMatrix],
    pred: &[TrafficMatrix],
    scope: Scope,
    params: Option<&NormalizationParams>,
    per_flow: bool,
) -> Result<ErrorReport> {
    check_shapes(truth, pred)?;
    let (truth, pred) = match scope {
        Scope::Denormalized => (truth.to_vec(), pred.to_vec()),
        Scope::Normalized => {
            let p = params
                .ok_or_else(|| Error::InvalidArgument("normalized scope needs normalization parameters".into()))?;
            if p.flow_count() != truth[0].as_slice().len() {
                return Err(Error::Dimension(format!(
                    "normalization covers {} flows, matrices have {}",
                    p.flow_count(),
                    truth[0].as_slice().len()
                )));
            }
            (rescale(truth, p), rescale(pred, p))
        }
    };
    let per_flow_rmse = per_flow.then(|| {
        let f = truth[0].as_slice().len();
        (0..f)
            .map(|id| {
                let ss: f64 = truth
                    .iter()
                    .zip(&pred)
                    .map(|(t, p)| (t.as_slice()[id] - p.as_slice()[id]).powi(2))
                    .sum();
                (ss / truth.len() as f64).sqrt()
            })
            .collect()
    });
    Ok(ErrorReport {
        rmse: rmse(&truth, &pred)?,
        mae: mae(&truth, &pred)?,
        n: truth.len(),
        scope,
        per_flow_rmse,
    })
}
