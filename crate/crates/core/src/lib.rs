//! Traffic matrix prediction with flow clustering.
//!
//! Flows of a traffic matrix series are grouped (by source node, or by the
//! Jensen-Shannon divergence between their value histograms), one gated
//! recurrent forecaster is trained per group, and predictions are scored with
//! RMSE/MAE and with the maximum-link-utilization bias of an optimal
//! multi-commodity-flow routing.

pub mod analysis;
pub mod clusters;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod synthetic;
pub mod teeval;
pub mod tmdata;

pub use clusters::{ClusterAssignment, ClusterMethod, Linkage, LinkageMatrix};
pub use error::{Error, Result};
pub use forecast::{GruForecaster, PredictionSet, TrainConfig, TrainReport};
pub use metrics::{ErrorReport, Scope};
pub use teeval::{MluResult, Topology};
pub use tmdata::{FlowId, FlowSeries, NormalizationParams, TmSeries, TrafficMatrix, WindowedDataset};
