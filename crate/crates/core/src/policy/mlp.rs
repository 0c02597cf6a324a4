//! Flat MLP baseline with separate policy and value trunks.
//!
//! The input width is fixed to `2n` for the node count the network was
//! built for; logits cover the `2n` type-major flat actions.

use std::rc::Rc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dist::{log_softmax, sample_categorical};
use super::{ActorCritic, Decision, Evaluated};
use crate::env::{decode_flat_action, NetworkEnv};
use crate::error::{Error, Result};
use crate::grad::{Graph, ParamId, ParamStore, Real, Segments, Tensor, Var};
use crate::rng::Rng;
use crate::sim::BlueAction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpPolicyConfig {
    pub hidden: usize,
}

impl Default for MlpPolicyConfig {
    fn default() -> Self {
        Self { hidden: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpOutput {
    pub logits: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
pub struct MlpPolicy<T: Real> {
    config: MlpPolicyConfig,
    node_count: usize,
    store: ParamStore<T>,
    policy_trunk: [Dense; 3],
    value_trunk: [Dense; 3],
}

impl<T: Real> MlpPolicy<T> {
    pub fn new(config: MlpPolicyConfig, node_count: usize, rng: &mut Rng) -> Result<Self> {
        if node_count == 0 || config.hidden == 0 {
            return Err(Error::Config("mlp needs positive node count and width".into()));
        }
        let mut store = ParamStore::new();
        let (inp, hid) = (2 * node_count, config.hidden);
        let mut dense = |name: &str, fan_in: usize, fan_out: usize| -> Result<Dense> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| T::of(rng.random_range(-bound..bound)))
                .collect();
            Ok(Dense {
                w: store.add(&format!("{name}.weight"), Tensor::matrix(fan_in, fan_out, w)?, true)?,
                b: store.add(&format!("{name}.bias"), Tensor::zeros(&[1, fan_out]), true)?,
            })
        };
        let policy_trunk = [
            dense("policy.0", inp, hid)?,
            dense("policy.1", hid, hid)?,
            dense("policy.out", hid, inp)?,
        ];
        let value_trunk = [
            dense("value.0", inp, hid)?,
            dense("value.1", hid, hid)?,
            dense("value.out", hid, 1)?,
        ];
        Ok(Self {
            config,
            node_count,
            store,
            policy_trunk,
            value_trunk,
        })
    }

    pub fn from_params(config: MlpPolicyConfig, node_count: usize, params: &ParamStore<T>) -> Result<Self> {
        let mut rng = crate::rng::stream(0, crate::rng::Purpose::PolicyInit, 0, 0);
        let mut p = Self::new(config, node_count, &mut rng)?;
        p.store.load_values(params)?;
        Ok(p)
    }

    pub fn config(&self) -> &MlpPolicyConfig {
        &self.config
    }

    /// The node count the input layer was built for.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    fn trunk(&self, g: &mut Graph<T>, x: Var, layers: &[Dense; 3]) -> Result<Var> {
        let mut h = x;
        for (i, d) in layers.iter().enumerate() {
            let (w, b) = (g.param(&self.store, d.w), g.param(&self.store, d.b));
            h = g.affine(h, w, b)?;
            if i < 2 {
                h = g.tanh(h);
            }
        }
        Ok(h)
    }

    fn forward_graph(&self, g: &mut Graph<T>, batch: &[&[f64]]) -> Result<(Var, Var)> {
        let width = 2 * self.node_count;
        let mut data = Vec::with_capacity(batch.len() * width);
        for obs in batch {
            if obs.len() != width {
                return Err(Error::invalid(format!(
                    "observation length {} but the network expects {width}",
                    obs.len()
                )));
            }
            data.extend(obs.iter().map(|&v| T::of(v)));
        }
        let x = g.constant(Tensor::matrix(batch.len(), width, data)?);
        let logits = self.trunk(g, x, &self.policy_trunk)?;
        let value = self.trunk(g, x, &self.value_trunk)?;
        Ok((logits, value))
    }

    pub fn forward(&self, batch: &[&[f64]]) -> Result<Vec<MlpOutput>> {
        let mut g = Graph::new();
        let (logits, value) = self.forward_graph(&mut g, batch)?;
        let w = 2 * self.node_count;
        let (l, v) = (g.value(logits).data(), g.value(value).data());
        Ok((0..batch.len())
            .map(|b| MlpOutput {
                logits: l[b * w..(b + 1) * w].iter().map(|x| x.f64()).collect(),
                value: v[b].f64(),
            })
            .collect())
    }
}

impl<T: Real> ActorCritic<T> for MlpPolicy<T> {
    type Obs = Vec<f64>;
    type Action = usize;

    fn observe(&self, env: &NetworkEnv) -> Vec<f64> {
        env.flat_observation()
    }

    fn act(&self, batch: &[&Vec<f64>], rng: &mut Rng) -> Result<Vec<Decision<usize>>> {
        let obs: Vec<&[f64]> = batch.iter().map(|o| o.as_slice()).collect();
        self.forward(&obs)?
            .into_iter()
            .map(|out| {
                if out.logits.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalFault("non-finite policy logits".into()));
                }
                let lp = log_softmax(&out.logits);
                let a = sample_categorical(&lp, rng)?;
                Ok(Decision {
                    action: a,
                    log_prob: lp[a],
                    value: out.value,
                })
            })
            .collect()
    }

    fn to_blue(&self, action: usize, _obs: &Vec<f64>) -> Result<BlueAction> {
        decode_flat_action(action, self.node_count)
    }

    fn evaluate(&self, g: &mut Graph<T>, batch: &[&Vec<f64>], actions: &[usize]) -> Result<Evaluated> {
        if actions.len() != batch.len() {
            return Err(Error::invalid("one action per observation required"));
        }
        let w = 2 * self.node_count;
        if let Some(&bad) = actions.iter().find(|&&a| a >= w) {
            return Err(Error::invalid(format!("flat action {bad} out of range")));
        }
        let obs: Vec<&[f64]> = batch.iter().map(|o| o.as_slice()).collect();
        let (logits, values) = self.forward_graph(g, &obs)?;
        let seg = Rc::new(Segments::uniform(batch.len(), w));
        let lp = g.segment_log_softmax(logits, seg.clone())?;
        let idx = actions.iter().enumerate().map(|(b, &a)| b * w + a).collect();
        let log_probs = g.pick(lp, Rc::new(idx))?;
        let p = g.exp(lp);
        let plp = g.mul(p, lp)?;
        let neg = g.segment_sum(plp, seg)?;
        let entropies = g.scale(neg, -1.0);
        Ok(Evaluated {
            log_probs,
            values,
            entropies,
        })
    }

    fn values(&self, batch: &[&Vec<f64>]) -> Result<Vec<f64>> {
        let obs: Vec<&[f64]> = batch.iter().map(|o| o.as_slice()).collect();
        Ok(self.forward(&obs)?.into_iter().map(|o| o.value).collect())
    }

    fn params(&self) -> &ParamStore<T> {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }
}
