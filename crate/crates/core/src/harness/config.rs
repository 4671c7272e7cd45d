use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Share of samples held out for testing in classical pretraining.
    pub test_fraction: f64,
    /// Adds the rescaled test-loss column to exported convergence records.
    pub normalize_loss: bool,
    /// Reuse frozen-prefix activations across epochs in hybrid training.
    pub cache_prefix: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::classical()
    }
}

impl TrainConfig {
    /// Batch 64, 120 epochs, lr 0.001, 5 restarts, 20% hold-out.
    pub fn classical() -> Self {
        Self {
            batch_size: 64,
            epochs: 120,
            learning_rate: 0.001,
            seed: 0,
            restarts: 5,
            test_fraction: 0.2,
            normalize_loss: true,
            cache_prefix: true,
        }
    }

    /// Batch 64, 40 epochs, lr 0.0008, single run per fold.
    pub fn hybrid() -> Self {
        Self {
            epochs: 40,
            learning_rate: 0.0008,
            restarts: 1,
            ..Self::classical()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.restarts == 0 {
            return Err(Error::Config("batch_size and restarts must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test fraction {} outside (0, 1)", self.test_fraction)));
        }
        Ok(())
    }

    /// Fails when a batch would be larger than the training set.
    pub fn check_train_size(&self, n_train: usize) -> Result<()> {
        if self.batch_size > n_train {
            return Err(Error::Config(format!(
                "batch size {} exceeds the {n_train} training samples",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// First eight bytes (little-endian) of the SHA-256 of a value's JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> u64 {
    let json = serde_json::to_vec(value).expect("configuration serializes to JSON");
    let digest = Sha256::digest(&json);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
