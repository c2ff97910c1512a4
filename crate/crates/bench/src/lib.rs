//! Fixtures shared by the benchmarks.

use tmpredict_core::synthetic::{generate, SyntheticConfig};
use tmpredict_core::TmSeries;

/// Synthetic series with `node_count` nodes and `steps` steps.
pub fn series(node_count: usize, steps: usize) -> TmSeries {
    generate(&SyntheticConfig {
        node_count,
        steps,
        ..SyntheticConfig::default()
    })
    .expect("valid synthetic config")
    .series
}
