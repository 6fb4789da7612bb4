//! Classifiers: the hybrid conv+recurrent model and the five baselines
//! behind one train/predict interface, with persistence.

mod classical;
mod conv;
mod dense;
mod lstm;
mod network;
mod ops;
mod optim;
mod persist;
mod train;

pub use conv::{Conv1dLayer, ConvLayerSpec, Padding};
pub use lstm::{lstm_sequence, lstm_step, LstmLayer, LstmParams, LstmState};
pub use network::{hybrid_forward, DenseHead, HybridNet};
pub use ops::{conv1d_ngram, max_pool, relu, softmax_stable};
pub use persist::{load_model, save_model, MODEL_SCHEMA_VERSION};
pub use train::{predict, train, ModelKind, Prediction, TrainableConfig, TrainedModel,
    TrainingMetadata};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and optimizer hyperparameters for the deep models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridModelConfig {
    /// Filter counts of the stacked 1-D convolutions.
    pub conv_stack: Vec<usize>,
    /// Words per n-gram window.
    pub kernel_width: usize,
    pub lstm_hidden: usize,
    pub dense_hidden: usize,
    pub n_classes: usize,
    pub learning_rate: f64,
    /// Learning rate applied to encoder parameters when an encoder with
    /// trainable parameters is attached (recorded for reproducibility;
    /// the frozen-extractor pipeline never uses it).
    pub encoder_learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HybridModelConfig {
    fn default() -> Self {
        Self {
            conv_stack: vec![512, 256, 128],
            kernel_width: 3,
            lstm_hidden: 500,
            dense_hidden: 128,
            n_classes: 2,
            learning_rate: 1e-3,
            encoder_learning_rate: 2e-5,
            batch_size: 32,
            epochs: 3,
            seed: 0,
        }
    }
}

impl HybridModelConfig {
    /// Desk-scale widths for tests and quick runs.
    pub fn toy(seed: u64) -> Self {
        Self {
            conv_stack: vec![32, 16, 8],
            lstm_hidden: 32,
            dense_hidden: 16,
            ..Self::default()
        }
        .with_seed(seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_stack.is_empty() {
            return Err(Error::InvalidConfig {
                message: "conv_stack must not be empty".into(),
            });
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidConfig {
                message: "n_classes must be at least 2".into(),
            });
        }
        if self.kernel_width == 0 || self.lstm_hidden == 0 || self.dense_hidden == 0 {
            return Err(Error::InvalidConfig {
                message: "layer sizes must be positive".into(),
            });
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig {
                message: "batch_size and epochs must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Hyperparameters for the classical baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicalConfig {
    /// Laplace smoothing for multinomial NB.
    pub nb_alpha: f64,
    pub lr_learning_rate: f64,
    pub lr_epochs: usize,
    pub lr_l2: f64,
    pub svm_learning_rate: f64,
    pub svm_epochs: usize,
    pub svm_l2: f64,
    pub svm_kernel: SvmKernel,
    /// RBF kernel width (gamma); only used with `SvmKernel::Rbf`.
    pub svm_gamma: f64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            nb_alpha: 1.0,
            lr_learning_rate: 0.5,
            lr_epochs: 100,
            lr_l2: 1e-4,
            svm_learning_rate: 0.1,
            svm_epochs: 100,
            svm_l2: 1e-3,
            svm_kernel: SvmKernel::Linear,
            svm_gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmKernel {
    Linear,
    Rbf,
}
