//! Routing-level evaluation: optimal maximum link utilization of a demand
//! matrix on a capacitated topology, and the bias of predicted matrices.

mod mlu;
mod topology;

pub use mlu::{
    avg_mlu_bias, bias_series, min_mlu, min_mlu_with, mlu_bias, mlu_bias_with, BiasSummary, CommodityFlow, Formulation,
    MluResult, MluStatus, WindowBias,
};
pub use topology::{Link, Topology};
