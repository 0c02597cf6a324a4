//! Policy families sharing the tensor engine: the entity Transformer and
//! the flat MLP baseline.

mod any;
mod dist;
mod entity;
mod mlp;

pub use any::{AnyPolicy, PolicyFamily, PolicyManifest};
pub use dist::{categorical_entropy, log_softmax, sample_categorical};
pub use entity::{CompositeAction, EntityOutput, EntityPolicy, EntityPolicyConfig};
pub use mlp::{MlpOutput, MlpPolicy, MlpPolicyConfig};

use crate::env::NetworkEnv;
use crate::error::Result;
use crate::grad::{Graph, ParamStore, Real, Var};
use crate::rng::Rng;
use crate::sim::BlueAction;

/// One sampled decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision<A> {
    pub action: A,
    pub log_prob: f64,
    pub value: f64,
}

/// Differentiable per-sample outputs for a batch of `(observation, action)` pairs,
/// each a `(batch, 1)` column.
#[derive(Debug, Clone, Copy)]
pub struct Evaluated {
    pub log_probs: Var,
    pub values: Var,
    pub entropies: Var,
}

/// What the PPO trainer needs from a policy.
pub trait ActorCritic<T: Real> {
    type Obs: Clone;
    type Action: Copy + std::fmt::Debug + PartialEq;

    fn observe(&self, env: &NetworkEnv) -> Self::Obs;

    fn act(&self, batch: &[&Self::Obs], rng: &mut Rng) -> Result<Vec<Decision<Self::Action>>>;

    fn to_blue(&self, action: Self::Action, obs: &Self::Obs) -> Result<BlueAction>;

    fn evaluate(&self, g: &mut Graph<T>, batch: &[&Self::Obs], actions: &[Self::Action]) -> Result<Evaluated>;

    fn values(&self, batch: &[&Self::Obs]) -> Result<Vec<f64>>;

    fn params(&self) -> &ParamStore<T>;

    fn params_mut(&mut self) -> &mut ParamStore<T>;

    /// Folds a finished rollout into any input statistics the policy keeps.
    fn observe_rollout(&mut self, _batch: &[&Self::Obs]) {}
}
