//! Gated recurrent forecasters trained per flow group.

mod adam;
mod checkpoint;
mod experiment;
mod gru;
mod train;

pub use adam::Adam;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use experiment::{derive_seed, predict_group, run_experiment, ExperimentConfig, PredictionSet, SplitBoundaries};
pub use gru::{init_forecaster, Gradients, GruForecaster, Tensor};
pub use train::{train, EarlyStopping, Observation, TrainConfig, TrainReport};
