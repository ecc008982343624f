use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::kpi::RewardWeights;
use crate::neural::{Architecture, LossWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    #[default]
    Scalable,
    OnePass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient descent.
    #[default]
    Sgd,
    Adam,
}

/// A2C hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: ArchKind,
    /// Hidden width per UE; the hidden layers have `hidden_per_ue · V` units.
    pub hidden_per_ue: usize,
    /// Interactions per environment per update.
    pub n_steps: usize,
    pub gamma: f64,
    pub entropy_weight: f64,
    pub value_weight: f64,
    pub max_updates: u64,
    pub learning_rate: f64,
    /// Learning-rate multiplier applied once `lr_decay_after` updates are done.
    pub lr_decay: f64,
    pub lr_decay_after: u64,
    pub optimizer: OptimizerKind,
    /// Per-network gradient norm cap; 0 disables clipping.
    pub grad_clip: f64,
    pub num_envs: usize,
    pub reward: RewardWeights,
    /// Evaluate against PF every this many updates (0 disables).
    pub eval_every: u64,
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: ArchKind::Scalable,
            hidden_per_ue: 128,
            n_steps: 20,
            gamma: 0.9,
            entropy_weight: 0.03,
            value_weight: 0.5,
            max_updates: 10_000,
            learning_rate: 1e-3,
            lr_decay: 0.1,
            lr_decay_after: 5_000,
            optimizer: OptimizerKind::Sgd,
            grad_clip: 5.0,
            num_envs: 8,
            reward: RewardWeights::default(),
            eval_every: 50,
            eval_episodes: 4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |f: &str, r: &str| Err(ConfigError::new(format!("training.{f}"), r));
        if self.hidden_per_ue < 1 {
            return bad("hidden_per_ue", "must be at least 1");
        }
        if self.n_steps < 1 {
            return bad("n_steps", "must be at least 1");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1)");
        }
        if !(self.entropy_weight.is_finite() && self.entropy_weight >= 0.0) {
            return bad("entropy_weight", "must be finite and >= 0");
        }
        if !(self.value_weight.is_finite() && self.value_weight >= 0.0) {
            return bad("value_weight", "must be finite and >= 0");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate", "must be positive");
        }
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0) {
            return bad("lr_decay", "must be positive");
        }
        if !(self.grad_clip.is_finite() && self.grad_clip >= 0.0) {
            return bad("grad_clip", "must be finite and >= 0");
        }
        if self.num_envs < 1 {
            return bad("num_envs", "must be at least 1");
        }
        self.reward
            .validate()
            .map_err(|e| ConfigError::new(format!("training.{}", e.field), e.reason))
    }

    pub fn architecture(&self, num_ues: usize) -> Architecture {
        match self.architecture {
            ArchKind::Scalable => Architecture::Scalable,
            ArchKind::OnePass => Architecture::OnePass { num_ues },
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            entropy: self.entropy_weight,
            value: self.value_weight,
        }
    }

    pub fn learning_rate_at(&self, update: u64) -> f64 {
        if update >= self.lr_decay_after {
            self.learning_rate * self.lr_decay
        } else {
            self.learning_rate
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(c.learning_rate_at(4_999), 1e-3);
        assert!((c.learning_rate_at(5_000) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn gamma_one_rejected() {
        let c = TrainConfig {
            gamma: 1.0,
            ..TrainConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "training.gamma");
    }
}
