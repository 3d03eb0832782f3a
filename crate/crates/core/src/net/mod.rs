//! The multimodal classifier: a recurrent branch over the trial sequence
//! fused with dense branches for personality, stimulus, and environment,
//! trained from scratch with exact analytic gradients.

mod dense;
mod grid;
mod lstm;
mod model;
mod train;

pub use dense::{dense_backward, dense_forward, relu, Activation};
pub use grid::{grid_search, GridSpec, ResultsRow};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads, LstmParams};
pub use model::{
    backward, fused_forward, loss_weighted_ce, predict_probs, softmax, DenseParams, ForwardCache,
    FusedModel, Mode,
};
pub use train::{predict, train, Checkpoint, EpochRecord};

use serde::{Deserialize, Serialize};

/// Architecture switches. The `include_*` booleans are the feature-set
/// ablation knobs: the eye-tracking branch is always on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub lstm_hidden: usize,
    pub personality_width: usize,
    pub stimulus_width: usize,
    pub environment_width: usize,
    pub fusion_width: usize,
    pub dropout_rate: f64,
    pub include_personality: bool,
    pub include_stimulus: bool,
    pub include_environment: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lstm_hidden: 32,
            personality_width: 8,
            stimulus_width: 8,
            environment_width: 4,
            fusion_width: 32,
            dropout_rate: 0.2,
            include_personality: true,
            include_stimulus: true,
            include_environment: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        for (name, v) in [
            ("lstm_hidden", self.lstm_hidden),
            ("personality_width", self.personality_width),
            ("stimulus_width", self.stimulus_width),
            ("environment_width", self.environment_width),
            ("fusion_width", self.fusion_width),
        ] {
            if v == 0 {
                return Err(crate::error::Error::OutOfRange {
                    what: name,
                    value: 0.0,
                    expected: "> 0",
                });
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(crate::error::Error::OutOfRange {
                what: "dropout_rate",
                value: self.dropout_rate,
                expected: "in [0, 1)",
            });
        }
        Ok(())
    }

    /// Width of the concatenated branch outputs entering fusion.
    pub fn concat_width(&self) -> usize {
        let mut w = self.lstm_hidden;
        if self.include_personality {
            w += self.personality_width;
        }
        if self.include_stimulus {
            w += self.stimulus_width;
        }
        if self.include_environment {
            w += self.environment_width;
        }
        w
    }
}

/// Optimization settings for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Std of the Gaussian noise injected into personality and
    /// environment inputs in train mode.
    pub noise_sigma: f64,
    pub seed: u64,
    pub target_label: crate::features::TargetLabel,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            weight_decay: 1e-4,
            max_epochs: 200,
            patience: 10,
            batch_size: 32,
            noise_sigma: 0.02,
            seed: 0,
            target_label: crate::features::TargetLabel::PerceivedValence,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(crate::error::Error::OutOfRange {
                what: "learning_rate",
                value: self.learning_rate,
                expected: "> 0",
            });
        }
        if self.patience == 0 {
            return Err(crate::error::Error::OutOfRange {
                what: "patience",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(())
    }
}
