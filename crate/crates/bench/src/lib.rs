//! Fixtures shared by the benchmarks under `benches/`.

use netdef::env::{EntityObservation, EnvConfig, NetworkEnv, RegimeMode};
use netdef::policy::{ActorCritic, EntityPolicy, EntityPolicyConfig};
use netdef::ppo::{RolloutBuffer, RolloutCollector};
use netdef::rng::{stream, Purpose};

pub fn entity_policy(config: EntityPolicyConfig) -> EntityPolicy<f32> {
    EntityPolicy::new(config, &mut stream(0, Purpose::PolicyInit, 0, 0)).unwrap()
}

pub fn envs(nodes: usize, count: usize) -> Vec<NetworkEnv> {
    let cfg = EnvConfig::new(RegimeMode::Random, nodes, 0);
    (0..count as u64).map(|i| NetworkEnv::new(cfg.clone(), i).unwrap()).collect()
}

/// Observations from `count` environments mid-episode.
pub fn observations(nodes: usize, count: usize) -> Vec<EntityObservation> {
    let policy = entity_policy(EntityPolicyConfig::default());
    let mut c = RolloutCollector::new(envs(nodes, count), &policy).unwrap();
    let buf = c.collect(&policy, 30, 1.0, &mut stream(0, Purpose::ActionSampling, 0, 0)).unwrap();
    buf.observations[buf.len() - count..].to_vec()
}

/// A collected rollout with advantages filled in.
pub fn rollout(
    policy: &EntityPolicy<f32>,
    nodes: usize,
    num_envs: usize,
    len: usize,
) -> RolloutBuffer<EntityObservation, <EntityPolicy<f32> as ActorCritic<f32>>::Action> {
    let mut c = RolloutCollector::new(envs(nodes, num_envs), policy).unwrap();
    let mut buf = c.collect(policy, len, 1.0, &mut stream(0, Purpose::ActionSampling, 0, 0)).unwrap();
    buf.compute_gae(0.99, 0.95);
    buf
}
