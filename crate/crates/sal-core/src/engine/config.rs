use serde::{Deserialize, Serialize};

use crate::nn::{Activation, OptimizerKind};
use crate::{Error, Result};

/// Validation metric watched by early stopping. Floor 1 is the monitored
/// model; it is both the deployed network and the plain baseline's twin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monitor {
    #[serde(rename = "val_acc")]
    ValAccuracy,
    #[serde(rename = "val_loss")]
    ValLoss,
}

/// Everything a single run needs besides the data.
///
/// `t` is the direct-training epoch count per phase, `r` the guidance epoch
/// count, `s_max` the outer-step budget. `patience` counts steps for the
/// hierarchical method and epochs for the plain baseline.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrainConfig {
    pub base_depth: usize,
    pub base_width: usize,
    pub floors: usize,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub batch_size: usize,
    pub t: usize,
    pub r: usize,
    pub s_max: usize,
    pub patience: usize,
    pub seed: u64,
    pub monitor: Monitor,
    /// Hard epoch cap for the plain baseline; `None` applies a generous
    /// default proportional to the hierarchical epoch budget.
    pub max_epochs: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_depth: 8,
            base_width: 256,
            floors: 3,
            activation: Activation::Relu,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            batch_size: 64,
            t: 5,
            r: 10,
            s_max: 50,
            patience: 10,
            seed: 0,
            monitor: Monitor::ValAccuracy,
            max_epochs: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 || self.r < 1 {
            return Err(Error::Config("t and r must be >= 1".into()));
        }
        if self.s_max < 1 {
            return Err(Error::Config("s_max must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.floors < 1 {
            return Err(Error::Config("floors must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config("lr must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Epoch cap for plain runs: explicit, or 10 outer-budgets' worth of
    /// epoch-equivalents.
    pub fn plain_epoch_cap(&self) -> usize {
        self.max_epochs.unwrap_or_else(|| {
            10 * self.s_max * (self.t * self.floors + self.r * (self.floors.saturating_sub(1)))
        })
    }
}
