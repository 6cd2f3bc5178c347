//! Minimal neural-network core: dense f64 tensors, a dense layer, inverted
//! dropout, an LSTM/BiLSTM with hand-derived backpropagation, Adam, and a
//! finite-difference gradient checker.
//!
//! Everything runs in 64-bit floats on unpadded variable-length sequences;
//! there is no implicit parallelism, so results are bit-reproducible for a
//! fixed seed.

pub mod adam;
pub mod dense;
mod dropout;
pub mod gradcheck;
pub mod lstm;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use dense::Dense;
pub use dropout::{dropout, dropout_mask};
pub use gradcheck::grad_check;
pub use lstm::{
    bilstm_backward, bilstm_backward_sparse, bilstm_forward, bilstm_forward_sparse,
    lstm_backward, lstm_backward_sparse, lstm_forward, lstm_forward_sparse, BiLstm, BiLstmCache,
    LstmCache, LstmParams,
};
pub use tensor::{SparseRows, Tensor};

use serde::{Deserialize, Serialize};

use crate::error::{config as config_err, Result};

/// Training hyper-parameters shared by all learned models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Inverted-dropout rate on encoder states during training.
    pub dropout: f64,
    /// Hidden units per LSTM direction.
    pub hidden: usize,
    pub seed: u64,
    /// Fraction of training data held out when no validation set is given.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            patience: 3,
            dropout: 0.25,
            hidden: 200,
            seed: 7,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(config_err(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(config_err("batch size must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(config_err("max epochs must be at least 1"));
        }
        if self.patience == 0 {
            return Err(config_err("patience must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(config_err(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if self.hidden == 0 {
            return Err(config_err("hidden size must be at least 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(config_err(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }

    /// Small-network variant used by examples and fast tests.
    pub fn desk_scale() -> Self {
        TrainConfig { hidden: 48, max_epochs: 12, ..TrainConfig::default() }
    }
}
