//! Central finite-difference check of the forecaster's analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmpredict_core::forecast::{init_forecaster, GruForecaster};

/// Forecaster with every parameter, biases included, drawn from `±0.8`,
/// plus a batch of random windows and targets.
pub fn random_model(
    seed: u64,
    input_dim: usize,
    hidden_dim: usize,
    history: usize,
    batch: usize,
) -> (GruForecaster, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = init_forecaster(input_dim, hidden_dim, seed).unwrap();
    for p in m.params_mut() {
        *p = rng.random_range(-0.8..0.8);
    }
    let inputs = (0..batch)
        .map(|_| (0..history * input_dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let targets = (0..batch)
        .map(|_| (0..input_dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    (m, inputs, targets)
}

pub fn loss(m: &GruForecaster, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let xs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let ts: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
    m.loss_and_gradients(&xs, &ts).unwrap()
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter, and the number of parameters compared. Pairs where
/// both magnitudes are below `1e-10` count as exact.
#[allow(clippy::needless_range_loop)]
pub fn worst_relative_error(m: &GruForecaster, inputs: &[Vec<f64>], targets: &[Vec<f64>], eps: f64) -> (f64, usize) {
    let (_, grad) = loss(m, inputs, targets);
    let mut worst: f64 = 0.0;
    for i in 0..m.param_count() {
        let mut plus = m.clone();
        plus.params_mut()[i] += eps;
        let mut minus = m.clone();
        minus.params_mut()[i] -= eps;
        let numeric = (loss(&plus, inputs, targets).0 - loss(&minus, inputs, targets).0) / (2.0 * eps);
        let scale = grad[i].abs().max(numeric.abs());
        if scale >= 1e-10 {
            worst = worst.max((grad[i] - numeric).abs() / scale);
        }
    }
    (worst, m.param_count())
}
