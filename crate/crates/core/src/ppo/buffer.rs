use super::gae::compute_gae;
use crate::env::{NetworkEnv, VecEnv};
use crate::error::{Error, Result};
use crate::grad::Real;
use crate::policy::ActorCritic;
use crate::rng::Rng;

/// Transitions from `rollout_len` steps of `num_envs` environments, stored
/// step-major: entry `t * num_envs + e` is step `t` of environment `e`.
#[derive(Debug, Clone)]
pub struct RolloutBuffer<O, A> {
    pub num_envs: usize,
    pub rollout_len: usize,
    pub observations: Vec<O>,
    pub actions: Vec<A>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value estimates of the observations following the last step.
    pub bootstrap_values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl<O, A> RolloutBuffer<O, A> {
    fn with_capacity(num_envs: usize, rollout_len: usize) -> Self {
        let cap = num_envs * rollout_len;
        Self {
            num_envs,
            rollout_len,
            observations: Vec::with_capacity(cap),
            actions: Vec::with_capacity(cap),
            log_probs: Vec::with_capacity(cap),
            values: Vec::with_capacity(cap),
            rewards: Vec::with_capacity(cap),
            dones: Vec::with_capacity(cap),
            bootstrap_values: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn has_advantages(&self) -> bool {
        !self.actions.is_empty() && self.advantages.len() == self.len()
    }

    pub fn compute_gae(&mut self, gamma: f64, lambda: f64) {
        let (adv, ret) = compute_gae(
            &self.rewards,
            &self.values,
            &self.dones,
            &self.bootstrap_values,
            self.num_envs,
            gamma,
            lambda,
        );
        self.advantages = adv;
        self.returns = ret;
    }
}

/// Owns the training environments and the observations carried between
/// rollouts.
#[derive(Debug, Clone)]
pub struct RolloutCollector<O> {
    envs: VecEnv,
    current: Vec<O>,
    env_steps: u64,
    running_returns: Vec<f64>,
    finished: Vec<f64>,
}

impl<O: Clone> RolloutCollector<O> {
    pub fn new<T: Real, P: ActorCritic<T, Obs = O>>(envs: Vec<NetworkEnv>, policy: &P) -> Result<Self> {
        if envs.is_empty() {
            return Err(Error::invalid("at least one environment required"));
        }
        let envs = VecEnv::new(envs);
        let current = envs.observe(|e| policy.observe(e));
        let n = envs.len();
        Ok(Self {
            envs,
            current,
            env_steps: 0,
            running_returns: vec![0.0; n],
            finished: Vec::new(),
        })
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn envs(&self) -> &VecEnv {
        &self.envs
    }

    /// Undiscounted returns of training episodes finished since the last call.
    pub fn drain_episode_returns(&mut self) -> Vec<f64> {
        std::mem::take(&mut self.finished)
    }

    /// Steps every environment `rollout_len` times with sampled actions.
    /// Stored rewards are multiplied by `reward_scale`.
    pub fn collect<T: Real, P: ActorCritic<T, Obs = O>>(
        &mut self,
        policy: &P,
        rollout_len: usize,
        reward_scale: f64,
        rng: &mut Rng,
    ) -> Result<RolloutBuffer<O, P::Action>> {
        let n = self.envs.len();
        let mut buf = RolloutBuffer::with_capacity(n, rollout_len);
        for _ in 0..rollout_len {
            let refs: Vec<&O> = self.current.iter().collect();
            let decisions = policy.act(&refs, rng)?;
            let blue = decisions
                .iter()
                .zip(&self.current)
                .map(|(d, o)| policy.to_blue(d.action, o))
                .collect::<Result<Vec<_>>>()?;
            let transitions = self.envs.step_with(&blue, |e| policy.observe(e))?;
            for (e, (d, tr)) in decisions.iter().zip(transitions).enumerate() {
                buf.actions.push(d.action);
                buf.log_probs.push(d.log_prob);
                buf.values.push(d.value);
                buf.rewards.push(tr.reward * reward_scale);
                buf.dones.push(tr.done);
                let prev = std::mem::replace(&mut self.current[e], tr.observation);
                buf.observations.push(prev);
                self.running_returns[e] += tr.reward;
                if tr.done {
                    self.finished.push(self.running_returns[e]);
                    self.running_returns[e] = 0.0;
                }
            }
        }
        let refs: Vec<&O> = self.current.iter().collect();
        buf.bootstrap_values = policy.values(&refs)?;
        self.env_steps += (n * rollout_len) as u64;
        Ok(buf)
    }
}
