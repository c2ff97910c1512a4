use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gru::{init_forecaster, GruForecaster};
use super::train::{train, TrainConfig, TrainReport};
use crate::clusters::ClusterAssignment;
use crate::error::{Error, Result};
use crate::tmdata::{
    build_windows, chronological_split, denormalize_value, fit_normalization, split_boundaries, NormalizationParams,
    TmSeries, TrafficMatrix, WindowedDataset,
};

/// Denormalized one-step forecasts for every window, `W x F_g`.
///
/// Constant flows skip the model and repeat their training value. Forecasts
/// are floored at zero since traffic volumes cannot be negative.
pub fn predict_group(m: &GruForecaster, test_ds: &WindowedDataset, p: &NormalizationParams) -> Result<Vec<Vec<f64>>> {
    if test_ds.flow_count() != m.input_dim() {
        return Err(Error::Dimension(format!(
            "dataset has {} flows, model expects {}",
            test_ds.flow_count(),
            m.input_dim()
        )));
    }
    if let Some(&bad) = test_ds.flow_ids().iter().find(|&&id| id >= p.flow_count()) {
        return Err(Error::Dimension(format!("flow {bad} has no normalization parameters")));
    }
    (0..test_ds.len())
        .map(|w| {
            let y = m.forward(test_ds.input(w))?;
            Ok(test_ds
                .flow_ids()
                .iter()
                .zip(y)
                .map(|(&id, v)| {
                    if p.is_constant(id) {
                        p.per_flow_min[id]
                    } else {
                        denormalize_value(v, p, id).max(0.0)
                    }
                })
                .collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub hidden_dim: usize,
    /// `L`: history steps plus the target step.
    pub window_length: usize,
    pub train_frac: f64,
    /// Share of the training portion held out for validation.
    pub val_frac: f64,
    /// Worker threads for per-cluster training. Results do not depend on it.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig::default(),
            hidden_dim: 30,
            window_length: 11,
            train_frac: 0.8,
            val_frac: 0.1,
            jobs: 1,
        }
    }
}

/// Step indices of the chronological split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBoundaries {
    pub train_end: usize,
    pub val_end: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct PredictionSet {
    pub node_count: usize,
    pub interval_seconds: u32,
    /// Timestamp of each forecast target.
    pub timestamps: Vec<i64>,
    pub predicted: Vec<TrafficMatrix>,
    pub truth: Vec<TrafficMatrix>,
    /// One model and report per cluster, in assignment order.
    pub models: Vec<GruForecaster>,
    pub reports: Vec<TrainReport>,
    pub normalization: NormalizationParams,
    pub boundaries: SplitBoundaries,
}

impl PredictionSet {
    pub fn window_count(&self) -> usize {
        self.predicted.len()
    }

    pub fn predicted_series(&self) -> Result<TmSeries> {
        TmSeries::new(
            self.node_count,
            self.interval_seconds,
            self.timestamps.clone(),
            self.predicted.clone(),
        )
    }

    pub fn truth_series(&self) -> Result<TmSeries> {
        TmSeries::new(
            self.node_count,
            self.interval_seconds,
            self.timestamps.clone(),
            self.truth.clone(),
        )
    }
}

/// SplitMix64 finalizer.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seed for one `(cluster, stream)` pair under a global seed.
pub fn derive_seed(global: u64, cluster: usize, stream: u64) -> u64 {
    mix(mix(mix(global) ^ cluster as u64) ^ stream)
}

struct ClusterOutcome {
    model: GruForecaster,
    report: TrainReport,
    predictions: Vec<Vec<f64>>,
}

/// Splits `tm`, fits normalization on the training part, trains one model per
/// cluster and scatters the per-cluster forecasts back into full matrices.
pub fn run_experiment(tm: &TmSeries, assignment: &ClusterAssignment, cfg: &ExperimentConfig) -> Result<PredictionSet> {
    cfg.train.validate()?;
    if assignment.flow_count() != tm.flow_count() {
        return Err(Error::Dimension(format!(
            "assignment covers {} flows, series has {}",
            assignment.flow_count(),
            tm.flow_count()
        )));
    }
    let (train_end, val_end) = split_boundaries(tm.len(), cfg.train_frac, cfg.val_frac)?;
    let split = chronological_split(tm, cfg.train_frac, cfg.val_frac)?;
    let params = fit_normalization(&split.train)?;
    let l = cfg.window_length;

    let run_cluster = |(c, flows): (usize, &Vec<usize>)| -> Result<ClusterOutcome> {
        let train_ds = build_windows(&split.train, &params, flows, l)?;
        let val_ds = split
            .val
            .as_ref()
            .map(|v| build_windows(v, &params, flows, l))
            .transpose()?;
        let test_ds = build_windows(&split.test, &params, flows, l)?;
        let model = init_forecaster(flows.len(), cfg.hidden_dim, derive_seed(cfg.train.seed, c, 0))?;
        let tcfg = TrainConfig {
            seed: derive_seed(cfg.train.seed, c, 1),
            ..cfg.train.clone()
        };
        let (model, report) = train(model, &train_ds, val_ds.as_ref(), &tcfg)?;
        let predictions = predict_group(&model, &test_ds, &params)?;
        Ok(ClusterOutcome {
            model,
            report,
            predictions,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<ClusterOutcome> = pool.install(|| {
        assignment
            .clusters()
            .par_iter()
            .enumerate()
            .map(run_cluster)
            .collect::<Result<Vec<_>>>()
    })?;

    let n = tm.node_count();
    let offset = l - 1;
    let windows = split.test.len() - offset;
    let mut predicted = vec![TrafficMatrix::zeros(n); windows];
    for (flows, out) in assignment.clusters().iter().zip(&outcomes) {
        for (w, row) in out.predictions.iter().enumerate() {
            let slots = predicted[w].as_mut_slice();
            for (&id, &v) in flows.iter().zip(row) {
                slots[id] = v;
            }
        }
    }
    let truth = split.test.matrices()[offset..].to_vec();
    let timestamps = split.test.timestamps()[offset..].to_vec();

    let (models, reports) = outcomes.into_iter().map(|o| (o.model, o.report)).unzip();
    Ok(PredictionSet {
        node_count: n,
        interval_seconds: tm.interval_seconds(),
        timestamps,
        predicted,
        truth,
        models,
        reports,
        normalization: params,
        boundaries: SplitBoundaries {
            train_end,
            val_end,
            len: tm.len(),
        },
    })
}
