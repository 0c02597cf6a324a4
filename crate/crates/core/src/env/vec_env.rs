use super::{EntityObservation, NetworkEnv};
use crate::error::{Error, Result};
use crate::sim::BlueAction;

/// Outcome of one vectorised step for one instance.
///
/// When `done` is set the observation already belongs to the next episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<O> {
    pub observation: O,
    pub reward: f64,
    pub done: bool,
    /// Compromised count at the end of the step, before any auto-reset.
    pub compromised: usize,
}

/// A batch of independent environments with auto-reset.
#[derive(Debug, Clone)]
pub struct VecEnv {
    envs: Vec<NetworkEnv>,
}

impl VecEnv {
    pub fn new(envs: Vec<NetworkEnv>) -> Self {
        Self { envs }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[NetworkEnv] {
        &self.envs
    }

    pub fn observe<O>(&self, view: impl Fn(&NetworkEnv) -> O) -> Vec<O> {
        self.envs.iter().map(view).collect()
    }

    pub fn step_with<O>(
        &mut self,
        actions: &[BlueAction],
        view: impl Fn(&NetworkEnv) -> O,
    ) -> Result<Vec<Transition<O>>> {
        if actions.len() != self.envs.len() {
            return Err(Error::invalid(format!(
                "{} actions for {} environments",
                actions.len(),
                self.envs.len()
            )));
        }
        let mut out = Vec::with_capacity(actions.len());
        for (env, &action) in self.envs.iter_mut().zip(actions) {
            let r = env.step(action)?;
            let compromised = env.state().compromised_count();
            if r.done {
                env.reset()?;
            }
            out.push(Transition {
                observation: view(env),
                reward: r.reward,
                done: r.done,
                compromised,
            });
        }
        Ok(out)
    }

    /// Steps every instance and returns entity observations. After an
    /// auto-reset the observation carries the terminal reward and `done = true`.
    pub fn step(&mut self, actions: &[BlueAction]) -> Result<Vec<Transition<EntityObservation>>> {
        let mut out = self.step_with(actions, NetworkEnv::entity_observation)?;
        for t in &mut out {
            t.observation.reward = t.reward;
            t.observation.done = t.done;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, RegimeMode};
    use crate::sim::BlueActionKind;

    fn act(target: usize) -> BlueAction {
        BlueAction {
            kind: BlueActionKind::RestoreNode,
            target,
        }
    }

    #[test]
    fn identical_envs_identical_transitions() {
        let cfg = EnvConfig::new(RegimeMode::Random, 10, 42);
        let env = NetworkEnv::new(cfg, 0).unwrap();
        let mut v = VecEnv::new(vec![env; 4]);
        for step in 0..150 {
            let out = v.step(&[act(step % 10); 4]).unwrap();
            assert!(out.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn mixed_sizes_are_ragged() {
        let a = NetworkEnv::new(EnvConfig::new(RegimeMode::Random, 10, 1), 0).unwrap();
        let b = NetworkEnv::new(EnvConfig::new(RegimeMode::Random, 20, 1), 1).unwrap();
        let mut v = VecEnv::new(vec![a, b]);
        let out = v.step(&[act(0), act(0)]).unwrap();
        assert_eq!(out[0].observation.node_count(), 10);
        assert_eq!(out[1].observation.node_count(), 20);
    }

    #[test]
    fn auto_reset_at_episode_end() {
        let env = NetworkEnv::new(EnvConfig::new(RegimeMode::Random, 10, 7), 0).unwrap();
        let mut v = VecEnv::new(vec![env]);
        for i in 1..=100 {
            let out = v.step(&[act(0)]).unwrap();
            assert_eq!(out[0].done, i == 100);
        }
        assert_eq!(v.envs()[0].episode(), 1);
        assert_eq!(v.envs()[0].state().step, 0);
        assert_eq!(v.envs()[0].state().compromised_count(), 0);
    }

    #[test]
    fn length_mismatch() {
        let env = NetworkEnv::new(EnvConfig::new(RegimeMode::Random, 10, 7), 0).unwrap();
        let mut v = VecEnv::new(vec![env.clone(), env]);
        assert!(matches!(v.step(&[act(0)]), Err(Error::InvalidArgument(_))));
    }
}
