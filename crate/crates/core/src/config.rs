//! Training hyperparameters and per-epoch traces.

use std::time::Duration;

use crate::error::{Error, Result};

/// Shared denominator/margin clamp used wherever a trainer divides by a
/// quantity that may approach zero.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Floor applied to probabilities before taking logs.
pub const PMF_FLOOR: f64 = 1e-300;

/// All optimization hyperparameters. One struct drives every trainer;
/// fields a given trainer does not use are ignored by it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate φ.
    pub lr: f64,
    /// Pareto exponent α (pairwise ranking only).
    pub alpha: f64,
    /// Prior standard deviation for user factors.
    pub sigma_u: f64,
    /// Prior standard deviation for item factors.
    pub sigma_v: f64,
    pub epochs: usize,
    /// Latent dimension d.
    pub dim: usize,
    /// Denominator/margin clamp ε.
    pub eps: f64,
    /// Users sampled per epoch (sampled trainers only).
    pub user_sample: usize,
    /// Items sampled per visited user (sampled trainers only).
    pub item_sample: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            alpha: 1.0,
            sigma_u: 1.0,
            sigma_v: 1.0,
            epochs: 30,
            dim: 8,
            eps: DEFAULT_EPS,
            user_sample: 64,
            item_sample: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Checks positivity constraints. `epochs` may be zero (a zero-epoch
    /// run returns the initialized model untouched).
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.lr, "lr"),
            (self.alpha, "alpha"),
            (self.sigma_u, "sigma_u"),
            (self.sigma_v, "sigma_v"),
            (self.eps, "eps"),
        ];
        for (value, name) in positive {
            if value.is_nan() || value <= 0.0 || !value.is_finite() {
                return Err(Error::invalid(format!(
                    "{} must be positive and finite",
                    name
                )));
            }
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        if self.user_sample == 0 || self.item_sample == 0 {
            return Err(Error::invalid("sample sizes must be >= 1"));
        }
        Ok(())
    }
}

/// Per-epoch loss values and wall-clock. One loss per completed epoch;
/// wall-clock is informational and excluded from persisted artifacts.
#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    losses: Vec<f64>,
    wall: Vec<Duration>,
}

impl TrainTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_epoch(&mut self, loss: f64, wall: Duration) {
        self.losses.push(loss);
        self.wall.push(wall);
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn wall(&self) -> &[Duration] {
        &self.wall
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_epochs_allowed() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_fields() {
        for patch in [
            TrainConfig {
                lr: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                alpha: -1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                sigma_u: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                eps: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                dim: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                user_sample: 0,
                ..TrainConfig::default()
            },
        ] {
            assert!(patch.validate().is_err());
        }
    }
}
