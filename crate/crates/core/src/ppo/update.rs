use rand::seq::SliceRandom;

use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use crate::error::{Error, Result};
use crate::grad::{Adam, Graph, Real, Tensor, Var};
use crate::policy::{ActorCritic, Evaluated};
use crate::rng::Rng;

/// Averages over every minibatch of one update phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateMetrics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Global gradient norm after clipping.
    pub grad_norm: f64,
    pub grad_norm_before_clip: f64,
}

/// Scalar terms of the PPO objective, built on a graph.
#[derive(Debug, Clone, Copy)]
pub struct PpoLoss {
    pub total: Var,
    pub policy: Var,
    pub value: Var,
    pub entropy: Var,
    pub ratio: Var,
}

/// Normalises to zero mean and unit variance.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    adv.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

/// Clipped surrogate + value MSE − entropy bonus. `advantages` are used as
/// given; normalise them first.
pub fn ppo_loss<T: Real>(
    g: &mut Graph<T>,
    ev: &Evaluated,
    old_log_probs: &[f64],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
) -> Result<PpoLoss> {
    let col = |g: &mut Graph<T>, v: &[f64]| g.constant(Tensor::column(v.iter().map(|&x| T::of(x)).collect()));
    let old = col(g, old_log_probs);
    let adv = col(g, advantages);
    let ret = col(g, returns);
    let diff = g.sub(ev.log_probs, old)?;
    let ratio = g.exp(diff);
    let unclipped = g.mul(ratio, adv)?;
    let clipped_ratio = g.clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    let clipped = g.mul(clipped_ratio, adv)?;
    let surrogate = g.minimum(unclipped, clipped)?;
    let mean_surrogate = g.mean(surrogate);
    let policy = g.scale(mean_surrogate, -1.0);
    let verr = g.sub(ev.values, ret)?;
    let sq = g.square(verr);
    let value = g.mean(sq);
    let entropy = g.mean(ev.entropies);
    let weighted_value = g.scale(value, config.value_coef);
    let weighted_entropy = g.scale(entropy, config.entropy_coef);
    let with_value = g.add(policy, weighted_value)?;
    let total = g.sub(with_value, weighted_entropy)?;
    Ok(PpoLoss {
        total,
        policy,
        value,
        entropy,
        ratio,
    })
}

/// Runs `epochs` passes of shuffled minibatch updates over the buffer.
pub fn ppo_update<T: Real, P: ActorCritic<T>>(
    policy: &mut P,
    optimizer: &mut Adam<T>,
    buffer: &RolloutBuffer<P::Obs, P::Action>,
    config: &PpoConfig,
    learning_rate: f64,
    rng: &mut Rng,
) -> Result<UpdateMetrics> {
    if !buffer.has_advantages() {
        return Err(Error::InvalidState("compute_gae must run before ppo_update".into()));
    }
    let n = buffer.len();
    if n % config.minibatches != 0 {
        return Err(Error::Config("buffer size must be divisible by minibatches".into()));
    }
    let mb = n / config.minibatches;
    let mut order: Vec<usize> = (0..n).collect();
    let mut m = UpdateMetrics::default();
    let mut count = 0.0;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let obs: Vec<&P::Obs> = chunk.iter().map(|&i| &buffer.observations[i]).collect();
            let actions: Vec<P::Action> = chunk.iter().map(|&i| buffer.actions[i]).collect();
            let old: Vec<f64> = chunk.iter().map(|&i| buffer.log_probs[i]).collect();
            let adv: Vec<f64> = chunk.iter().map(|&i| buffer.advantages[i]).collect();
            let ret: Vec<f64> = chunk.iter().map(|&i| buffer.returns[i]).collect();
            let adv = normalize_advantages(&adv);

            let mut g = Graph::new();
            let ev = policy.evaluate(&mut g, &obs, &actions)?;
            let loss = ppo_loss(&mut g, &ev, &old, &adv, &ret, config)?;
            let total = g.value(loss.total).item()?.f64();
            if !total.is_finite() {
                return Err(Error::NumericalFault(format!("non-finite PPO loss {total}")));
            }
            let clipped = g
                .value(loss.ratio)
                .data()
                .iter()
                .filter(|r| (r.f64() - 1.0).abs() > config.clip)
                .count();

            let store = policy.params_mut();
            store.zero_grad();
            g.backward(loss.total, store)?;
            if !store.grads_finite() {
                return Err(Error::NumericalFault("non-finite gradient".into()));
            }
            let (before, after) = store.clip_grad_norm(config.max_grad_norm);
            optimizer.step(store, learning_rate);

            m.policy_loss += g.value(loss.policy).item()?.f64();
            m.value_loss += g.value(loss.value).item()?.f64();
            m.entropy += g.value(loss.entropy).item()?.f64();
            m.clip_fraction += clipped as f64 / chunk.len() as f64;
            m.grad_norm += after;
            m.grad_norm_before_clip += before;
            count += 1.0;
        }
    }
    m.policy_loss /= count;
    m.value_loss /= count;
    m.entropy /= count;
    m.clip_fraction /= count;
    m.grad_norm /= count;
    m.grad_norm_before_clip /= count;
    Ok(m)
}
