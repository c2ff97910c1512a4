//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use tmpredict_core::forecast::{ExperimentConfig, TrainConfig};
use tmpredict_core::teeval::Formulation;
use tmpredict_core::{ClusterMethod, Linkage};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutThreshold {
    /// Midpoint of the widest gap between consecutive merge heights.
    Auto,
    Value(f64),
}

/// Published results to print next to measured ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    None,
    Abilene,
    Geant,
}

impl Reference {
    pub fn as_str(self) -> &'static str {
        match self {
            Reference::None => "none",
            Reference::Abilene => "abilene",
            Reference::Geant => "geant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub node_count: usize,
    pub interval_seconds: u32,
    pub train_frac: f64,
    pub val_frac: f64,
    pub window_length: usize,
    pub method: ClusterMethod,
    pub bin_count: usize,
    pub linkage: Linkage,
    pub cut_threshold: CutThreshold,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
    pub topology: Option<PathBuf>,
    pub te_formulation: Formulation,
    pub reference: Reference,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            dataset: None,
            node_count: 12,
            interval_seconds: 300,
            train_frac: 0.8,
            val_frac: 0.1,
            window_length: 11,
            method: ClusterMethod::Histogram,
            bin_count: 50,
            linkage: Linkage::Average,
            cut_threshold: CutThreshold::Auto,
            hidden_dim: 30,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            patience: t.patience,
            min_delta: t.min_delta,
            seed: 0,
            topology: None,
            te_formulation: Formulation::PerDemand,
            reference: Reference::None,
            out: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

fn invalid(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("config line {line}: {msg}"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Validation(format!("invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Parses config text. Relative paths resolve against `base_dir`. Keys
    /// starting with `derived.` are informational and skipped, so a run
    /// manifest loads as a config.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| invalid(line_no, format!("expected `key = value`, got `{line}`")))?;
            if key.starts_with("derived.") {
                continue;
            }
            if !seen.insert(key.to_string()) {
                return Err(invalid(line_no, format!("duplicate key `{key}`")));
            }
            cfg.set(key, value, base_dir).map_err(|e| match e {
                CliError::Validation(m) => invalid(line_no, m),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let core = |e: tmpredict_core::Error| CliError::Validation(e.to_string());
        match key {
            "dataset" => self.dataset = (value != "none").then(|| path(value)),
            "node_count" => self.node_count = num(key, value)?,
            "interval_seconds" => self.interval_seconds = num(key, value)?,
            "train_frac" => self.train_frac = num(key, value)?,
            "val_frac" => self.val_frac = num(key, value)?,
            "window_length" => self.window_length = num(key, value)?,
            "method" => self.method = value.parse().map_err(core)?,
            "bin_count" => self.bin_count = num(key, value)?,
            "linkage" => self.linkage = value.parse().map_err(core)?,
            "cut_threshold" => {
                self.cut_threshold = if value == "auto" {
                    CutThreshold::Auto
                } else {
                    CutThreshold::Value(num(key, value)?)
                }
            }
            "hidden_dim" => self.hidden_dim = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "min_delta" => self.min_delta = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "topology" => self.topology = (value != "none").then(|| path(value)),
            "te_formulation" => self.te_formulation = value.parse().map_err(core)?,
            "reference" => {
                self.reference = match value {
                    "none" => Reference::None,
                    "abilene" => Reference::Abilene,
                    "geant" => Reference::Geant,
                    other => return Err(CliError::Validation(format!("unknown reference `{other}`"))),
                }
            }
            "out" => self.out = path(value),
            "jobs" => self.jobs = num(key, value)?,
            other => return Err(CliError::Validation(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            patience: self.patience,
            min_delta: self.min_delta,
            seed: self.seed,
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            train: self.train_config(),
            hidden_dim: self.hidden_dim,
            window_length: self.window_length,
            train_frac: self.train_frac,
            val_frac: self.val_frac,
            jobs: self.jobs,
        }
    }

    /// Checks ranges and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.node_count == 0 {
            return bad("node_count must be positive".into());
        }
        if self.interval_seconds == 0 {
            return bad("interval_seconds must be positive".into());
        }
        if self.window_length < 2 {
            return bad(format!("window_length {} must be at least 2", self.window_length));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!("train_frac {} must lie in (0, 1)", self.train_frac));
        }
        if !(0.0..1.0).contains(&self.val_frac) {
            return bad(format!("val_frac {} must lie in [0, 1)", self.val_frac));
        }
        if self.bin_count == 0 {
            return bad("bin_count must be positive".into());
        }
        if let CutThreshold::Value(t) = self.cut_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("cut_threshold {t} must be >= 0"));
            }
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be positive".into());
        }
        self.train_config()
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        for (key, p) in [("dataset", &self.dataset), ("topology", &self.topology)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return bad(format!("{key} file {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }

    /// Canonical text of every setting that affects results. `out` and `jobs`
    /// are left out: they never change output bytes.
    pub fn canonical_text(&self) -> String {
        let p = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("dataset", p(&self.dataset));
        kv("node_count", self.node_count.to_string());
        kv("interval_seconds", self.interval_seconds.to_string());
        kv("train_frac", self.train_frac.to_string());
        kv("val_frac", self.val_frac.to_string());
        kv("window_length", self.window_length.to_string());
        kv("method", self.method.to_string());
        kv("bin_count", self.bin_count.to_string());
        kv("linkage", self.linkage.to_string());
        kv(
            "cut_threshold",
            match self.cut_threshold {
                CutThreshold::Auto => "auto".into(),
                CutThreshold::Value(v) => v.to_string(),
            },
        );
        kv("hidden_dim", self.hidden_dim.to_string());
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("patience", self.patience.to_string());
        kv("min_delta", self.min_delta.to_string());
        kv("seed", self.seed.to_string());
        kv("topology", p(&self.topology));
        kv("te_formulation", self.te_formulation.as_str().into());
        kv("reference", self.reference.as_str().into());
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    /// Directory holding the outputs of the configured method.
    pub fn method_dir(&self) -> PathBuf {
        self.method_dir_for(self.method)
    }

    pub fn method_dir_for(&self, method: ClusterMethod) -> PathBuf {
        self.out.join("methods").join(method.as_str())
    }

    pub fn dataset_copy(&self) -> PathBuf {
        self.out.join("dataset.csv")
    }
}
