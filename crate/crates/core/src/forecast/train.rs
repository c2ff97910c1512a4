use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gru::GruForecaster;
use crate::error::{Error, Result};
use crate::tmdata::WindowedDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            patience: 5,
            min_delta: 1e-5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be >= 1");
        }
        if !(self.min_delta >= 0.0 && self.min_delta.is_finite()) {
            return bad("min_delta must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean mini-batch loss seen during each epoch.
    pub train_loss_curve: Vec<f64>,
    /// Loss monitored for early stopping after each epoch: validation MSE, or
    /// training MSE when no validation set is given.
    pub val_loss_curve: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Patience bookkeeping.
///
/// The best epoch is the true minimum of the monitored loss. Patience only
/// resets when the loss beats the last reset point by more than `min_delta`,
/// so a slow drift of tiny improvements still ends training.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    reference: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    /// The loss is a new minimum; callers should snapshot parameters.
    pub new_best: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        EarlyStopping {
            patience,
            min_delta,
            reference: f64::INFINITY,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> Observation {
        let new_best = loss < self.best || self.best_epoch.is_none();
        if new_best {
            self.best = loss;
            self.best_epoch = Some(epoch);
        }
        if loss < self.reference - self.min_delta {
            self.reference = loss;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        Observation {
            new_best,
            stop: self.wait >= self.patience,
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

fn check_dataset(model: &GruForecaster, ds: &WindowedDataset, what: &str) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyInput(format!("{what} dataset has no windows")));
    }
    if ds.flow_count() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "{what} dataset has {} flows, model expects {}",
            ds.flow_count(),
            model.input_dim()
        )));
    }
    Ok(())
}

pub(crate) fn dataset_mse(model: &GruForecaster, ds: &WindowedDataset) -> Result<f64> {
    let inputs: Vec<&[f64]> = (0..ds.len()).map(|w| ds.input(w)).collect();
    let targets: Vec<&[f64]> = (0..ds.len()).map(|w| ds.target(w)).collect();
    model.mse(&inputs, &targets)
}

/// Mini-batch Adam training with per-epoch shuffling and early stopping.
///
/// The returned model carries the parameters of the best monitored epoch.
pub fn train(
    model: GruForecaster,
    train_ds: &WindowedDataset,
    val_ds: Option<&WindowedDataset>,
    cfg: &TrainConfig,
) -> Result<(GruForecaster, TrainReport)> {
    cfg.validate()?;
    check_dataset(&model, train_ds, "training")?;
    if let Some(v) = val_ds {
        check_dataset(&model, v, "validation")?;
        if v.flow_ids() != train_ds.flow_ids() {
            return Err(Error::Dimension("training and validation flow ids differ".into()));
        }
    }

    let mut model = model;
    let mut best = model.clone();
    let mut opt = Adam::new(model.param_count(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.min_delta);
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut grad = vec![0.0; model.param_count()];
    let mut report = TrainReport {
        epochs_run: 0,
        train_loss_curve: Vec::new(),
        val_loss_curve: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&w| train_ds.input(w)).collect();
            let targets: Vec<&[f64]> = chunk.iter().map(|&w| train_ds.target(w)).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = model
                .accumulate_gradients(&inputs, &targets, &mut grad)
                .map_err(|e| match e {
                    Error::Numeric { batch_index } => Error::Numeric {
                        batch_index: b * cfg.batch_size + batch_index,
                    },
                    other => other,
                })?;
            weighted += loss * chunk.len() as f64;
            opt.update(model.params_mut(), &grad);
        }
        let train_loss = weighted / train_ds.len() as f64;
        let monitored = match val_ds {
            Some(v) => dataset_mse(&model, v)?,
            None => dataset_mse(&model, train_ds)?,
        };
        report.train_loss_curve.push(train_loss);
        report.val_loss_curve.push(monitored);
        report.epochs_run = epoch + 1;

        let obs = stopper.observe(epoch, monitored);
        if obs.new_best {
            best.params_mut().copy_from_slice(model.params());
        }
        if obs.stop {
            report.stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }
    report.best_epoch = stopper.best_epoch().unwrap_or(0);
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::init_forecaster;

    #[test]
    fn early_stopping_contract() {
        let mut s = EarlyStopping::new(3, 0.0);
        let losses = [5.0, 4.0, 3.0, 3.5, 3.6, 3.7, 3.8];
        let mut stopped = None;
        for (e, &l) in losses.iter().enumerate() {
            if s.observe(e, l).stop {
                stopped = Some(e);
                break;
            }
        }
        assert_eq!(stopped, Some(5));
        assert_eq!(s.best_epoch(), Some(2));
    }

    #[test]
    fn small_improvements_do_not_reset_patience() {
        let mut s = EarlyStopping::new(2, 0.1);
        assert!(!s.observe(0, 1.0).stop);
        let o = s.observe(1, 0.95);
        assert!(o.new_best && !o.stop);
        let o = s.observe(2, 0.92);
        assert!(o.new_best && o.stop);
        assert_eq!(s.best_epoch(), Some(2));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                patience: 0,
                ..Default::default()
            },
            TrainConfig {
                min_delta: -1.0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    fn constant_dataset(value: f64, target: f64, windows: usize) -> WindowedDataset {
        WindowedDataset::from_parts(vec![value; windows * 3], vec![target; windows], 4, vec![0]).unwrap()
    }

    #[test]
    fn constant_zero_target_converges() {
        let ds = constant_dataset(0.0, 0.0, 40);
        let m = init_forecaster(1, 4, 1).unwrap();
        let (m, report) = train(m, &ds, None, &TrainConfig::default()).unwrap();
        assert!(dataset_mse(&m, &ds).unwrap() <= 1e-6);
        assert!(report.best_epoch < report.epochs_run);
    }

    #[test]
    fn diverging_validation_stops_after_patience() {
        // Training pulls the output up towards 1; validation wants -1, so the
        // monitored loss rises every epoch and epoch 0 stays best.
        let train_ds = constant_dataset(0.0, 1.0, 64);
        let val_ds = constant_dataset(0.0, -1.0, 8);
        let m = init_forecaster(1, 3, 2).unwrap();
        let cfg = TrainConfig::default();
        let (best, report) = train(m.clone(), &train_ds, Some(&val_ds), &cfg).unwrap();
        assert!(report.val_loss_curve.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(report.best_epoch, 0);
        assert_eq!(report.epochs_run, cfg.patience + 1);
        assert!(report.stopped_early);
        assert_eq!(dataset_mse(&best, &val_ds).unwrap(), report.val_loss_curve[0]);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let ds = constant_dataset(0.0, 0.0, 4);
        let m = init_forecaster(2, 3, 0).unwrap();
        assert!(matches!(
            train(m, &ds, None, &TrainConfig::default()),
            Err(Error::Dimension(_))
        ));
        let empty = WindowedDataset::from_parts(vec![], vec![], 4, vec![0]).unwrap();
        let m = init_forecaster(1, 3, 0).unwrap();
        assert!(matches!(
            train(m, &empty, None, &TrainConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let xs: Vec<f64> = (0..60).map(|i| 0.5 + 0.4 * (i as f64 * 0.3).sin()).collect();
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for w in 0..50 {
            inputs.extend_from_slice(&xs[w..w + 5]);
            targets.push(xs[w + 5]);
        }
        let ds = WindowedDataset::from_parts(inputs, targets, 6, vec![0]).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 9,
            ..Default::default()
        };
        let a = train(init_forecaster(1, 4, 3).unwrap(), &ds, None, &cfg).unwrap();
        let b = train(init_forecaster(1, 4, 3).unwrap(), &ds, None, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
