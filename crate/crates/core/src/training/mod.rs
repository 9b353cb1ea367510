//! Loss, Adam, the early-stopping training loop, grid search and the
//! finite-difference gradient checker.

mod adam;
mod gradcheck;
mod grid;
mod loss;
mod trainer;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use gradcheck::{gradient_check, GradCheckOptions, GradCheckReport};
pub use grid::{grid_search, GridOutcome, GridTrial};
pub use loss::{mean_squared_error, mse_loss};
pub use trainer::{evaluate_mse, fit, EpochRecord, TrainLog, Trainer};

use crate::error::{Error, Result};

/// RNG stream ids split from `TrainConfig::seed`.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const SHUFFLE: u64 = 1;
    pub const DROPOUT: u64 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub hidden_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub dropout_p: f64,
    pub hidden_size: usize,
    pub seed: u64,
    pub grid: Vec<GridPoint>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 200,
            batch_size: 32,
            patience: 10,
            dropout_p: 0.2,
            hidden_size: 32,
            seed: 42,
            grid: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Parameter(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0 < self.beta1 && self.beta1 < 1.0 && 0.0 < self.beta2 && self.beta2 < 1.0) {
            return fail(format!("betas must lie in (0, 1), got {} and {}", self.beta1, self.beta2));
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.patience == 0 || self.batch_size == 0 {
            return fail("patience and batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return fail(format!("dropout_p must lie in [0, 1), got {}", self.dropout_p));
        }
        if self.hidden_size == 0 {
            return fail("hidden_size must be at least 1".into());
        }
        Ok(())
    }

    /// This configuration with one grid point's values substituted.
    pub fn at(&self, point: &GridPoint) -> TrainConfig {
        TrainConfig {
            learning_rate: point.learning_rate,
            hidden_size: point.hidden_size,
            grid: Vec::new(),
            ..self.clone()
        }
    }

    /// The configured grid, or the single point given by the base values.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        if self.grid.is_empty() {
            vec![GridPoint {
                learning_rate: self.learning_rate,
                hidden_size: self.hidden_size,
            }]
        } else {
            self.grid.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        for cfg in [
            TrainConfig { beta1: 1.0, ..Default::default() },
            TrainConfig { patience: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { learning_rate: -1.0, ..Default::default() },
            TrainConfig { dropout_p: 1.0, ..Default::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::Parameter(_))), "{cfg:?}");
        }
    }

    #[test]
    fn grid_point_substitution() {
        let base = TrainConfig {
            grid: vec![GridPoint { learning_rate: 0.5, hidden_size: 4 }],
            ..Default::default()
        };
        let cfg = base.at(&base.grid[0]);
        assert_eq!((cfg.learning_rate, cfg.hidden_size), (0.5, 4));
        assert!(cfg.grid.is_empty());
        assert_eq!(TrainConfig::default().grid_points().len(), 1);
    }
}
