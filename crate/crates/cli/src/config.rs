//! Run configuration file (TOML). Every field is optional; missing values
//! fall back to the classical and hybrid training defaults.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qtl_core::datapipe::{DEFAULT_DROPPED, SYNTH_SEED};
use qtl_core::harness::TrainConfig;
use qtl_core::surgery::QtlPreset;
use qtl_core::vqc::{OutputActivation, VqcConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub model: ModelSection,
    pub qtl: QtlSection,
    pub train: TrainOverrides,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    #[default]
    Synthetic,
    NeuDet,
    Cache,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub source: Source,
    /// Corpus root for `neu-det`, cache file for `cache`.
    pub path: Option<PathBuf>,
    pub n_per_class: usize,
    pub image_size: usize,
    pub seed: u64,
    pub dropped: Vec<String>,
    pub target_size: usize,
    pub min_patch: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            source: Source::Synthetic,
            path: None,
            n_per_class: 100,
            image_size: 32,
            seed: SYNTH_SEED,
            dropped: DEFAULT_DROPPED.iter().map(|s| s.to_string()).collect(),
            target_size: 200,
            min_patch: 32,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub preset: Option<String>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct QtlSection {
    pub preset: String,
    pub qubits: usize,
    pub layers: usize,
    pub ranges: Option<Vec<usize>>,
    pub hadamard: bool,
    pub input_scale: f64,
    pub relu_output: bool,
    pub folds: usize,
    pub train: TrainOverrides,
}

impl Default for QtlSection {
    fn default() -> Self {
        Self {
            preset: "QTL-M-3".into(),
            qubits: 5,
            layers: 3,
            ranges: None,
            hadamard: true,
            input_scale: FRAC_PI_2,
            relu_output: false,
            folds: 6,
            train: TrainOverrides::default(),
        }
    }
}

impl QtlSection {
    pub fn preset(&self) -> Result<QtlPreset> {
        self.preset.parse::<QtlPreset>().map_err(|e| UsageError(e.to_string()).into())
    }

    pub fn vqc(&self) -> Result<VqcConfig> {
        let mut c = VqcConfig::new(self.qubits, self.layers).map_err(|e| UsageError(e.to_string()))?;
        if let Some(r) = &self.ranges {
            c.ranges = r.clone();
        }
        c.hadamard_prefix = self.hadamard;
        c.input_scale = self.input_scale;
        c.output_activation = if self.relu_output { OutputActivation::Relu } else { OutputActivation::None };
        c.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(c)
    }
}

/// Partial training settings layered over a base configuration.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOverrides {
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub test_fraction: Option<f64>,
    pub normalize_loss: Option<bool>,
    pub cache_prefix: Option<bool>,
}

impl TrainOverrides {
    pub fn apply(&self, mut base: TrainConfig) -> TrainConfig {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { base.$f = v; })* };
        }
        set!(batch_size, epochs, learning_rate, seed, restarts, test_fraction, normalize_loss, cache_prefix);
        base
    }

    /// Fields set in `other` win.
    pub fn merged(&self, other: &TrainOverrides) -> TrainOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { TrainOverrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(batch_size, epochs, learning_rate, seed, restarts, test_fraction, normalize_loss, cache_prefix)
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub fn load(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
        .with_context(|| format!("loading {}", path.display()))?;
    Ok(cfg)
}
