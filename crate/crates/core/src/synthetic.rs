//! Seeded synthetic traffic with planted distributional regimes.
//!
//! Every flow follows its own pair of sinusoids plus Gaussian noise, which is
//! then bent by a regime-specific transform so the flows of one regime share a
//! value distribution:
//!
//! - `Bell`: `x = s`, mass in the middle of the range
//! - `LowHeavy`: `x = s^3`, mass near the minimum
//! - `HighHeavy`: `x = 1 - (1 - s)^3`, mass near the maximum
//!
//! Each flow is finally scaled by a log-normal magnitude, which min-max
//! normalization removes again.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::teeval::Topology;
use crate::tmdata::{TmSeries, TrafficMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Bell,
    LowHeavy,
    HighHeavy,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Bell, Regime::LowHeavy, Regime::HighHeavy];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Bell => "bell",
            Regime::LowHeavy => "low_heavy",
            Regime::HighHeavy => "high_heavy",
        }
    }

    fn apply(self, s: f64) -> f64 {
        match self {
            Regime::Bell => s,
            Regime::LowHeavy => s.powi(3),
            Regime::HighHeavy => 1.0 - (1.0 - s).powi(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub node_count: usize,
    pub steps: usize,
    pub interval_seconds: u32,
    /// Standard deviation of the noise added to the base signal.
    pub noise: f64,
    /// Median flow magnitude in traffic units.
    pub magnitude: f64,
    /// Log-space spread of the per-flow magnitudes.
    pub magnitude_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            node_count: 6,
            steps: 2000,
            interval_seconds: 300,
            noise: 0.02,
            magnitude: 1e6,
            magnitude_sigma: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub series: TmSeries,
    /// Planted regime of each flow id.
    pub regimes: Vec<Regime>,
}

impl SyntheticData {
    /// Planted clusters as sorted flow-id lists, in [`Regime::ALL`] order.
    pub fn planted_clusters(&self) -> Vec<Vec<usize>> {
        Regime::ALL
            .iter()
            .map(|r| (0..self.regimes.len()).filter(|&i| self.regimes[i] == *r).collect())
            .collect()
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.node_count == 0 || cfg.steps == 0 {
        return Err(Error::InvalidArgument("node_count and steps must be positive".into()));
    }
    let bad = |what: &str| Error::InvalidArgument(format!("invalid synthetic {what}"));
    let noise = Normal::new(0.0, cfg.noise).map_err(|_| bad("noise"))?;
    let magnitude = LogNormal::new(cfg.magnitude.ln(), cfg.magnitude_sigma).map_err(|_| bad("magnitude"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f = cfg.node_count * cfg.node_count;
    // Balanced regime sizes, shuffled over flow ids.
    let mut regimes: Vec<Regime> = (0..f).map(|i| Regime::ALL[i % 3]).collect();
    regimes.shuffle(&mut rng);

    struct Shape {
        slow_period: f64,
        fast_period: f64,
        slow_phase: f64,
        fast_phase: f64,
        scale: f64,
    }
    let shapes: Vec<Shape> = (0..f)
        .map(|_| Shape {
            slow_period: rng.random_range(30.0..90.0),
            fast_period: rng.random_range(6.0..18.0),
            slow_phase: rng.random_range(0.0..TAU),
            fast_phase: rng.random_range(0.0..TAU),
            scale: magnitude.sample(&mut rng),
        })
        .collect();

    let matrices = (0..cfg.steps)
        .map(|t| {
            let t = t as f64;
            let values = shapes
                .iter()
                .zip(&regimes)
                .map(|(sh, regime)| {
                    let s = 0.5
                        + 0.25 * (TAU * t / sh.slow_period + sh.slow_phase).sin()
                        + 0.25 * (TAU * t / sh.fast_period + sh.fast_phase).sin()
                        + noise.sample(&mut rng);
                    sh.scale * (0.1 + regime.apply(s.clamp(0.0, 1.0)))
                })
                .collect();
            TrafficMatrix::from_values(cfg.node_count, values)
        })
        .collect::<Result<Vec<_>>>()?;
    let series = TmSeries::from_matrices(cfg.node_count, cfg.interval_seconds, 0, matrices)?;
    Ok(SyntheticData { series, regimes })
}

/// Ring with chords on `node_count` nodes, both directions, one capacity.
pub fn synthetic_topology(node_count: usize, capacity: f64) -> Result<Topology> {
    let mut edges: Vec<(usize, usize)> = (0..node_count).map(|i| (i, (i + 1) % node_count)).collect();
    if node_count >= 4 {
        edges.extend((0..node_count / 2).map(|i| (i, i + node_count / 2)));
    }
    edges.retain(|(a, b)| a != b);
    edges.sort_unstable_by_key(|&(a, b)| (a.min(b), a.max(b)));
    edges.dedup_by_key(|&mut (a, b)| (a.min(b), a.max(b)));
    Topology::bidirectional(node_count, &edges, capacity)
}
