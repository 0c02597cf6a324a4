use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{summarize, Summary};
use crate::env::{EnvConfig, NetworkEnv, RegimeMode};
use crate::error::{Error, Result};
use crate::grad::Real;
use crate::policy::AnyPolicy;
use crate::ppo::{load_policy, play_episodes};
use crate::rng::{stream, Purpose};

/// Episodes evaluated side by side in one policy batch.
const EVAL_BATCH: usize = 100;

/// Per-episode rewards plus their summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nodes: usize,
    pub seed: u64,
    pub rewards: Vec<f64>,
    pub summary: Summary,
}

impl EvalReport {
    pub fn from_rewards(nodes: usize, seed: u64, rewards: Vec<f64>) -> Result<Self> {
        let summary = summarize(&rewards)?;
        Ok(Self {
            nodes,
            seed,
            rewards,
            summary,
        })
    }

    /// Whether the stored summary equals one recomputed from the rewards.
    pub fn is_consistent(&self) -> bool {
        summarize(&self.rewards).is_ok_and(|s| s == self.summary)
    }

    /// Writes `episode,reward` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| super::csv_error(path, e))?;
        w.write_record(["episode", "reward"]).map_err(|e| super::csv_error(path, e))?;
        for (i, r) in self.rewards.iter().enumerate() {
            w.write_record([i.to_string(), r.to_string()]).map_err(|e| super::csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Runs `episodes` episodes on fresh random `nodes`-node networks with
/// sampled actions. Episode `i` always sees the same network for a given
/// seed, whatever policy is evaluated.
pub fn evaluate_policy<T: Real>(policy: &AnyPolicy<T>, nodes: usize, episodes: usize, seed: u64) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::invalid("episodes must be positive"));
    }
    if !policy.supports_nodes(nodes) {
        return Err(Error::UnsupportedEvaluation(format!(
            "{} policy cannot act on {nodes}-node networks",
            policy.family().as_str()
        )));
    }
    let cfg = EnvConfig::new(RegimeMode::Random, nodes, seed);
    let mut rewards = Vec::with_capacity(episodes);
    for (chunk, start) in (0..episodes).step_by(EVAL_BATCH).enumerate() {
        let end = (start + EVAL_BATCH).min(episodes);
        let mut envs = (start..end)
            .map(|i| NetworkEnv::new(cfg.clone(), i as u64))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = stream(seed, Purpose::Evaluation, 1, chunk as u64);
        let r = match policy {
            AnyPolicy::Entity(p) => play_episodes(p, &mut envs, &mut rng)?,
            AnyPolicy::Mlp(p) => play_episodes(p, &mut envs, &mut rng)?,
        };
        rewards.extend(r);
    }
    EvalReport::from_rewards(nodes, seed, rewards)
}

/// Loads a checkpoint and evaluates it on random `nodes`-node networks.
pub fn evaluate(checkpoint: &Path, nodes: usize, episodes: usize, seed: u64) -> Result<EvalReport> {
    let (policy, _) = load_policy::<f32>(checkpoint)?;
    evaluate_policy(&policy, nodes, episodes, seed)
}
