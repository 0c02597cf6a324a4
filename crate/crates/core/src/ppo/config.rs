use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::policy::{EntityPolicyConfig, MlpPolicyConfig, PolicyFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub total_steps: u64,
    pub num_envs: usize,
    pub rollout_len: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Family default when unset.
    pub learning_rate: Option<f64>,
    /// Multiplier applied to rewards before they enter the buffer.
    pub reward_scale: f64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub checkpoint_interval: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            total_steps: 1_000_000,
            num_envs: 16,
            rollout_len: 128,
            epochs: 4,
            minibatches: 4,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            learning_rate: None,
            reward_scale: 1.0,
            eval_interval: 10_000,
            eval_episodes: 1,
            checkpoint_interval: 250_000,
        }
    }
}

impl PpoConfig {
    pub fn learning_rate_for(&self, family: PolicyFamily) -> f64 {
        self.learning_rate.unwrap_or(match family {
            PolicyFamily::Entity => 0.005,
            PolicyFamily::Mlp => 0.0003,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.num_envs * self.rollout_len
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_envs == 0 || self.rollout_len == 0 || self.epochs == 0 || self.minibatches == 0 {
            return bad("num_envs, rollout_len, epochs and minibatches must be positive");
        }
        if self.batch_size() % self.minibatches != 0 {
            return bad("rollout_len * num_envs must be divisible by minibatches");
        }
        let coefs = [
            self.gamma,
            self.gae_lambda,
            self.clip,
            self.value_coef,
            self.entropy_coef,
            self.max_grad_norm,
            self.reward_scale,
        ];
        if coefs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("coefficients must be finite and non-negative");
        }
        if self.learning_rate.is_some_and(|lr| !(lr > 0.0)) {
            return bad("learning_rate must be positive");
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 {
            return bad("eval_interval and eval_episodes must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub family: PolicyFamily,
    #[serde(default)]
    pub entity: EntityPolicyConfig,
    #[serde(default)]
    pub mlp: MlpPolicyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// Everything needed to reproduce one training run.
///
/// The run seed is the master seed for every random stream; it overrides
/// `env.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        if self.policy.family == PolicyFamily::Entity {
            self.policy.entity.validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Reads TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            Self::from_toml(&text)
        }
    }

    /// Seeded copy of the environment section.
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            seed: self.seed,
            ..self.env.clone()
        }
    }
}
