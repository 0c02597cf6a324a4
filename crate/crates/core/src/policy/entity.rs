//! Transformer policy over a variable set of node entities.
//!
//! Per instance the token sequence is `[global, defender, node_0, ...]`.
//! Nodes pass through a shared embedding head; the two special tokens are
//! learnable vectors inserted after embedding. A stack of pre-norm blocks
//! mixes tokens within each instance only (block-diagonal attention over the
//! ragged batch). The action-type and value heads read the global token; the
//! node head scores each node by a scaled query–key product between the
//! defender token and that node.

use std::rc::Rc;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dist::sample_categorical;
use super::{ActorCritic, Decision, Evaluated};
use crate::env::{compose_entity_action, EntityObservation, NetworkEnv};
use crate::error::{Error, Result};
use crate::grad::{AttentionMask, Graph, ParamId, ParamStore, Real, Segments, Tensor, Var};
use crate::rng::Rng;
use crate::sim::BlueAction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntityPolicyConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    /// Width of the select-entity query/key space; `d_model` when unset.
    pub d_qk: Option<usize>,
    pub node_features: usize,
}

impl Default for EntityPolicyConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 2,
            n_layers: 2,
            d_ff: 128,
            d_qk: None,
            node_features: 2,
        }
    }
}

impl EntityPolicyConfig {
    pub fn qk_width(&self) -> usize {
        self.d_qk.unwrap_or(self.d_model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(Error::Config("d_model must be a positive multiple of n_heads".into()));
        }
        if self.n_layers == 0 || self.d_ff == 0 || self.qk_width() == 0 || self.node_features == 0 {
            return Err(Error::Config("layer counts and widths must be positive".into()));
        }
        Ok(())
    }
}

/// `(action_type, node)` chosen by the two independent heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeAction {
    pub action_type: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityOutput {
    pub type_logits: Vec<f64>,
    pub node_logits: Vec<f64>,
    pub value: f64,
}

impl EntityOutput {
    /// Samples both heads; the log-probability is the sum over heads.
    pub fn sample(&self, rng: &mut Rng) -> Result<(CompositeAction, f64, f64)> {
        if self.type_logits.iter().chain(&self.node_logits).any(|v| !v.is_finite()) {
            return Err(Error::NumericalFault("non-finite policy logits".into()));
        }
        let lt = super::log_softmax(&self.type_logits);
        let ln = super::log_softmax(&self.node_logits);
        let t = sample_categorical(&lt, rng)?;
        let n = sample_categorical(&ln, rng)?;
        Ok((
            CompositeAction {
                action_type: t,
                node: n,
            },
            lt[t] + ln[n],
            self.value,
        ))
    }
}

#[derive(Debug, Clone)]
struct Affine {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone)]
struct Block {
    ln_attn: Norm,
    q: Affine,
    k: Affine,
    v: Affine,
    out: Affine,
    ln_ff: Norm,
    ff_in: Affine,
    ff_out: Affine,
}

#[derive(Debug, Clone)]
struct Layout {
    input_mean: ParamId,
    input_var: ParamId,
    input_count: ParamId,
    embed: Affine,
    embed_norm: Norm,
    global_token: ParamId,
    defender_token: ParamId,
    blocks: Vec<Block>,
    final_norm: Norm,
    type_head: Affine,
    value_head: Affine,
    select_query: ParamId,
    select_key: ParamId,
}

/// Graph handles produced by one batched forward pass.
pub(crate) struct Heads {
    pub type_logits: Var,
    pub node_logits: Var,
    pub value: Var,
    pub nodes: Rc<Segments>,
}

#[derive(Debug, Clone)]
pub struct EntityPolicy<T: Real> {
    config: EntityPolicyConfig,
    store: ParamStore<T>,
    layout: Layout,
}

const INPUT_EPS: f64 = 1e-8;
const INPUT_CLIP: f64 = 5.0;

struct Init<'a, T: Real> {
    store: &'a mut ParamStore<T>,
    rng: &'a mut Rng,
}

impl<T: Real> Init<'_, T> {
    fn affine(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Result<Affine> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w: Vec<T> = (0..fan_in * fan_out)
            .map(|_| T::of(self.rng.random_range(-bound..bound)))
            .collect();
        Ok(Affine {
            w: self.store.add(&format!("{name}.weight"), Tensor::matrix(fan_in, fan_out, w)?, true)?,
            b: self.store.add(&format!("{name}.bias"), Tensor::zeros(&[1, fan_out]), true)?,
        })
    }

    fn matrix(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Result<ParamId> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w: Vec<T> = (0..fan_in * fan_out)
            .map(|_| T::of(self.rng.random_range(-bound..bound)))
            .collect();
        self.store.add(name, Tensor::matrix(fan_in, fan_out, w)?, true)
    }

    fn norm(&mut self, name: &str, width: usize) -> Result<Norm> {
        Ok(Norm {
            gain: self.store.add(&format!("{name}.gain"), Tensor::full(&[1, width], T::one()), true)?,
            bias: self.store.add(&format!("{name}.bias"), Tensor::zeros(&[1, width]), true)?,
        })
    }

    fn token(&mut self, name: &str, width: usize) -> Result<ParamId> {
        let normal = Normal::new(0.0, 0.02).expect("valid scale");
        let v: Vec<T> = (0..width).map(|_| T::of(normal.sample(self.rng))).collect();
        self.store.add(name, Tensor::matrix(1, width, v)?, true)
    }
}

impl<T: Real> EntityPolicy<T> {
    pub fn new(config: EntityPolicyConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let d = config.d_model;
        let f = config.node_features;
        let input_mean = store.add("input_norm.mean", Tensor::zeros(&[1, f]), false)?;
        let input_var = store.add("input_norm.var", Tensor::full(&[1, f], T::one()), false)?;
        let input_count = store.add("input_norm.count", Tensor::zeros(&[1, 1]), false)?;
        let mut init = Init {
            store: &mut store,
            rng,
        };
        let embed = init.affine("embed.node", f, d)?;
        let embed_norm = init.norm("embed.node_norm", d)?;
        let global_token = init.token("token.global", d)?;
        let defender_token = init.token("token.defender", d)?;
        let mut blocks = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            blocks.push(Block {
                ln_attn: init.norm(&format!("block{l}.ln_attn"), d)?,
                q: init.affine(&format!("block{l}.attn.q"), d, d)?,
                k: init.affine(&format!("block{l}.attn.k"), d, d)?,
                v: init.affine(&format!("block{l}.attn.v"), d, d)?,
                out: init.affine(&format!("block{l}.attn.out"), d, d)?,
                ln_ff: init.norm(&format!("block{l}.ln_ff"), d)?,
                ff_in: init.affine(&format!("block{l}.ff.in"), d, config.d_ff)?,
                ff_out: init.affine(&format!("block{l}.ff.out"), config.d_ff, d)?,
            });
        }
        let final_norm = init.norm("final_norm", d)?;
        let type_head = init.affine("head.action_type", d, 2)?;
        let value_head = init.affine("head.value", d, 1)?;
        let select_query = init.matrix("head.select.query", d, config.qk_width())?;
        let select_key = init.matrix("head.select.key", d, config.qk_width())?;
        Ok(Self {
            config,
            store,
            layout: Layout {
                input_mean,
                input_var,
                input_count,
                embed,
                embed_norm,
                global_token,
                defender_token,
                blocks,
                final_norm,
                type_head,
                value_head,
                select_query,
                select_key,
            },
        })
    }

    /// Rebuilds a policy around loaded parameters.
    pub fn from_params(config: EntityPolicyConfig, params: &ParamStore<T>) -> Result<Self> {
        let mut rng = crate::rng::stream(0, crate::rng::Purpose::PolicyInit, 0, 0);
        let mut policy = Self::new(config, &mut rng)?;
        policy.store.load_values(params)?;
        Ok(policy)
    }

    pub fn config(&self) -> &EntityPolicyConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    /// Merges a batch of node feature rows into the running input statistics.
    pub fn update_input_stats<'a>(&mut self, rows: impl IntoIterator<Item = &'a [f64]>) {
        let f = self.config.node_features;
        let mut n = 0.0;
        let mut sum = vec![0.0; f];
        let mut sumsq = vec![0.0; f];
        for row in rows {
            n += 1.0;
            for c in 0..f {
                sum[c] += row[c];
                sumsq[c] += row[c] * row[c];
            }
        }
        if n == 0.0 {
            return;
        }
        let l = &self.layout;
        let count = self.store.get(l.input_count).value.data()[0].f64();
        let mean: Vec<f64> = self.store.get(l.input_mean).value.to_f64_vec();
        let var: Vec<f64> = self.store.get(l.input_var).value.to_f64_vec();
        let total = count + n;
        let mut new_mean = vec![0.0; f];
        let mut new_var = vec![0.0; f];
        for c in 0..f {
            let bm = sum[c] / n;
            let bv = (sumsq[c] / n - bm * bm).max(0.0);
            let delta = bm - mean[c];
            new_mean[c] = mean[c] + delta * n / total;
            let m2 = var[c] * count + bv * n + delta * delta * count * n / total;
            new_var[c] = m2 / total;
        }
        let (mean_id, var_id, count_id) = (l.input_mean, l.input_var, l.input_count);
        self.store.get_mut(mean_id).value = Tensor::from_f64(&[1, f], &new_mean).expect("width");
        self.store.get_mut(var_id).value = Tensor::from_f64(&[1, f], &new_var).expect("width");
        self.store.get_mut(count_id).value = Tensor::scalar(T::of(total));
    }

    fn normalised_features(&self, batch: &[&[Vec<f64>]]) -> Result<Tensor<T>> {
        let f = self.config.node_features;
        let mean = self.store.get(self.layout.input_mean).value.to_f64_vec();
        let var = self.store.get(self.layout.input_var).value.to_f64_vec();
        let inv: Vec<f64> = var.iter().map(|v| 1.0 / (v + INPUT_EPS).sqrt()).collect();
        let total: usize = batch.iter().map(|b| b.len()).sum();
        let mut data = Vec::with_capacity(total * f);
        for inst in batch {
            for row in inst.iter() {
                if row.len() != f {
                    return Err(Error::invalid(format!("node feature width {} != {f}", row.len())));
                }
                for c in 0..f {
                    let z = ((row[c] - mean[c]) * inv[c]).clamp(-INPUT_CLIP, INPUT_CLIP);
                    data.push(T::of(z));
                }
            }
        }
        Tensor::matrix(total, f, data)
    }

    fn affine(&self, g: &mut Graph<T>, x: Var, a: &Affine) -> Result<Var> {
        let (w, b) = (g.param(&self.store, a.w), g.param(&self.store, a.b));
        g.affine(x, w, b)
    }

    fn norm(&self, g: &mut Graph<T>, x: Var, n: &Norm) -> Result<Var> {
        let (gain, bias) = (g.param(&self.store, n.gain), g.param(&self.store, n.bias));
        g.layer_norm(x, gain, bias)
    }

    pub(crate) fn forward_graph(&self, g: &mut Graph<T>, batch: &[&[Vec<f64>]]) -> Result<Heads> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        if let Some(i) = batch.iter().position(|b| b.is_empty()) {
            return Err(Error::invalid(format!("instance {i} has no nodes")));
        }
        let l = &self.layout;
        let x = g.constant(self.normalised_features(batch)?);
        let e = self.affine(g, x, &l.embed)?;
        let e = self.norm(g, e, &l.embed_norm)?;
        let e = g.relu(e);

        let nodes = Rc::new(Segments::from_lengths(batch.iter().map(|b| b.len())));
        let tokens = Segments::from_lengths(batch.iter().map(|b| b.len() + 2));
        let mut picks = Vec::with_capacity(tokens.total());
        let mut global_rows = Vec::with_capacity(batch.len());
        let mut defender_rows = Vec::with_capacity(batch.len());
        let mut node_rows = Vec::with_capacity(nodes.total());
        let mut owner = Vec::with_capacity(nodes.total());
        for (b, r) in nodes.ranges().enumerate() {
            let start = tokens.range(b).start;
            global_rows.push((0, start));
            defender_rows.push((0, start + 1));
            picks.push((0, 0));
            picks.push((1, 0));
            for (k, i) in r.enumerate() {
                picks.push((2, i));
                node_rows.push((0, start + 2 + k));
                owner.push(b);
            }
        }
        let global = g.param(&self.store, l.global_token);
        let defender = g.param(&self.store, l.defender_token);
        let mut h = g.gather_rows(&[global, defender, e], Rc::new(picks))?;
        let mask = Rc::new(AttentionMask::block_diagonal(tokens)?);

        for block in &l.blocks {
            let a = self.norm(g, h, &block.ln_attn)?;
            let q = self.affine(g, a, &block.q)?;
            let k = self.affine(g, a, &block.k)?;
            let v = self.affine(g, a, &block.v)?;
            let att = g.attention(q, k, v, mask.clone(), self.config.n_heads)?;
            let o = self.affine(g, att, &block.out)?;
            h = g.add(h, o)?;
            let f = self.norm(g, h, &block.ln_ff)?;
            let f = self.affine(g, f, &block.ff_in)?;
            let f = g.relu(f);
            let f = self.affine(g, f, &block.ff_out)?;
            h = g.add(h, f)?;
        }
        let h = self.norm(g, h, &l.final_norm)?;

        let glob = g.gather_rows(&[h], Rc::new(global_rows))?;
        let def = g.gather_rows(&[h], Rc::new(defender_rows))?;
        let node_out = g.gather_rows(&[h], Rc::new(node_rows))?;
        let type_logits = self.affine(g, glob, &l.type_head)?;
        let value = self.affine(g, glob, &l.value_head)?;
        let wq = g.param(&self.store, l.select_query);
        let wk = g.param(&self.store, l.select_key);
        let query = g.matmul(def, wq)?;
        let keys = g.matmul(node_out, wk)?;
        let scores = g.segment_row_dot(query, keys, Rc::new(owner))?;
        let node_logits = g.scale(scores, 1.0 / (self.config.qk_width() as f64).sqrt());
        Ok(Heads {
            type_logits,
            node_logits,
            value,
            nodes,
        })
    }

    /// Runs the network on a ragged batch of node feature lists.
    pub fn forward(&self, batch: &[&[Vec<f64>]]) -> Result<Vec<EntityOutput>> {
        let mut g = Graph::new();
        let heads = self.forward_graph(&mut g, batch)?;
        let tl = g.value(heads.type_logits).data();
        let nl = g.value(heads.node_logits).data();
        let v = g.value(heads.value).data();
        Ok(heads
            .nodes
            .ranges()
            .enumerate()
            .map(|(b, r)| EntityOutput {
                type_logits: tl[2 * b..2 * b + 2].iter().map(|x| x.f64()).collect(),
                node_logits: nl[r].iter().map(|x| x.f64()).collect(),
                value: v[b].f64(),
            })
            .collect())
    }

    /// Differentiable log-probabilities, values and entropies for given actions.
    pub fn evaluate_actions(
        &self,
        g: &mut Graph<T>,
        batch: &[&[Vec<f64>]],
        actions: &[CompositeAction],
    ) -> Result<Evaluated> {
        if actions.len() != batch.len() {
            return Err(Error::invalid("one action per instance required"));
        }
        let heads = self.forward_graph(g, batch)?;
        let b = batch.len();
        let type_seg = Rc::new(Segments::uniform(b, 2));
        let mut type_idx = Vec::with_capacity(b);
        let mut node_idx = Vec::with_capacity(b);
        for (i, a) in actions.iter().enumerate() {
            if a.action_type >= 2 {
                return Err(Error::invalid(format!("action type {} out of range", a.action_type)));
            }
            let r = heads.nodes.range(i);
            if a.node >= r.len() {
                return Err(Error::invalid(format!(
                    "node {} outside instance {i} with {} nodes",
                    a.node,
                    r.len()
                )));
            }
            type_idx.push(2 * i + a.action_type);
            node_idx.push(r.start + a.node);
        }
        let lt = g.segment_log_softmax(heads.type_logits, type_seg.clone())?;
        let ln = g.segment_log_softmax(heads.node_logits, heads.nodes.clone())?;
        let pt = g.pick(lt, Rc::new(type_idx))?;
        let pn = g.pick(ln, Rc::new(node_idx))?;
        let log_probs = g.add(pt, pn)?;

        let et = neg_entropy_terms(g, lt)?;
        let et = g.segment_sum(et, type_seg)?;
        let en = neg_entropy_terms(g, ln)?;
        let en = g.segment_sum(en, heads.nodes.clone())?;
        let neg = g.add(et, en)?;
        let entropies = g.scale(neg, -1.0);
        Ok(Evaluated {
            log_probs,
            values: heads.value,
            entropies,
        })
    }
}

/// `p · log p` elementwise from log-probabilities.
fn neg_entropy_terms<T: Real>(g: &mut Graph<T>, log_p: Var) -> Result<Var> {
    let p = g.exp(log_p);
    g.mul(p, log_p)
}

impl<T: Real> ActorCritic<T> for EntityPolicy<T> {
    type Obs = EntityObservation;
    type Action = CompositeAction;

    fn observe(&self, env: &NetworkEnv) -> EntityObservation {
        env.entity_observation()
    }

    fn act(&self, batch: &[&EntityObservation], rng: &mut Rng) -> Result<Vec<Decision<CompositeAction>>> {
        let nodes: Vec<&[Vec<f64>]> = batch.iter().map(|o| o.nodes()).collect();
        self.forward(&nodes)?
            .iter()
            .map(|out| {
                let (action, log_prob, value) = out.sample(rng)?;
                Ok(Decision {
                    action,
                    log_prob,
                    value,
                })
            })
            .collect()
    }

    fn to_blue(&self, action: CompositeAction, obs: &EntityObservation) -> Result<BlueAction> {
        compose_entity_action(action.action_type, action.node, obs.node_count())
    }

    fn evaluate(&self, g: &mut Graph<T>, batch: &[&EntityObservation], actions: &[CompositeAction]) -> Result<Evaluated> {
        let nodes: Vec<&[Vec<f64>]> = batch.iter().map(|o| o.nodes()).collect();
        self.evaluate_actions(g, &nodes, actions)
    }

    fn values(&self, batch: &[&EntityObservation]) -> Result<Vec<f64>> {
        let nodes: Vec<&[Vec<f64>]> = batch.iter().map(|o| o.nodes()).collect();
        Ok(self.forward(&nodes)?.into_iter().map(|o| o.value).collect())
    }

    fn params(&self) -> &ParamStore<T> {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    fn observe_rollout(&mut self, batch: &[&EntityObservation]) {
        self.update_input_stats(batch.iter().flat_map(|o| o.nodes().iter().map(Vec::as_slice)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn policy() -> EntityPolicy<f32> {
        EntityPolicy::new(EntityPolicyConfig::default(), &mut stream(1, Purpose::PolicyInit, 0, 0)).unwrap()
    }

    fn features(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = stream(seed, Purpose::Vulnerability, 0, 0);
        (0..n)
            .map(|_| vec![r.random_range(0.01..1.0), if r.random_bool(0.3) { 1.0 } else { 0.0 }])
            .collect()
    }

    #[test]
    fn parameter_names_unique_and_tokens_trainable() {
        let p = policy();
        let names: std::collections::HashSet<_> = p.params().iter().map(|x| x.name.clone()).collect();
        assert_eq!(names.len(), p.params().len());
        assert!(p.params().by_name("token.defender").unwrap().trainable);
        assert!(p.params().by_name("token.global").unwrap().trainable);
        assert!(!p.params().by_name("input_norm.mean").unwrap().trainable);
    }

    #[test]
    fn ragged_batch_without_padding() {
        let p = policy();
        let (a, b) = (features(10, 1), features(40, 2));
        let out = p.forward(&[&a, &b]).unwrap();
        assert_eq!(out[0].node_logits.len(), 10);
        assert_eq!(out[1].node_logits.len(), 40);
        assert!(out.iter().all(|o| o.type_logits.len() == 2 && o.value.is_finite()));
    }

    #[test]
    fn empty_instance_rejected() {
        let p = policy();
        let a = features(3, 1);
        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(p.forward(&[&a, &empty]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn duplicate_nodes_get_identical_logits() {
        let p = policy();
        let mut f = features(6, 3);
        f[4] = f[1].clone();
        let out = p.forward(&[&f]).unwrap();
        assert_eq!(out[0].node_logits[1], out[0].node_logits[4]);
    }

    #[test]
    fn instances_are_isolated() {
        let p = policy();
        let (a, b) = (features(10, 1), features(7, 2));
        let base = p.forward(&[&a, &b]).unwrap();
        let b2 = features(12, 9);
        let moved = p.forward(&[&a, &b2]).unwrap();
        assert_eq!(base[0], moved[0]);
    }

    #[test]
    fn saturated_type_head_picks_reduce() {
        let out = EntityOutput {
            type_logits: vec![20.0, -20.0],
            node_logits: vec![0.0; 3],
            value: 0.0,
        };
        let mut r = stream(0, Purpose::ActionSampling, 0, 0);
        for _ in 0..1000 {
            assert_eq!(out.sample(&mut r).unwrap().0.action_type, 0);
        }
        let bad = EntityOutput {
            node_logits: vec![f64::NAN, 0.0],
            ..out
        };
        assert!(matches!(bad.sample(&mut r), Err(Error::NumericalFault(_))));
    }

    #[test]
    fn uniform_node_head_frequencies() {
        let out = EntityOutput {
            type_logits: vec![0.0, 0.0],
            node_logits: vec![0.0; 10],
            value: 0.0,
        };
        let mut r = stream(4, Purpose::ActionSampling, 0, 0);
        let mut counts = [0usize; 10];
        let draws = 100_000;
        for _ in 0..draws {
            counts[out.sample(&mut r).unwrap().0.node] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.1).abs() <= 0.01);
        }
    }

    #[test]
    fn evaluate_matches_sampling_log_prob() {
        let p = policy();
        let obs: Vec<EntityObservation> = [5, 9, 3]
            .iter()
            .enumerate()
            .map(|(i, &n)| EntityObservation::from_node_features(features(n, i as u64)))
            .collect();
        let refs: Vec<&EntityObservation> = obs.iter().collect();
        let mut r = stream(2, Purpose::ActionSampling, 0, 0);
        let decisions = p.act(&refs, &mut r).unwrap();
        let actions: Vec<_> = decisions.iter().map(|d| d.action).collect();
        let mut g = Graph::new();
        let ev = p.evaluate(&mut g, &refs, &actions).unwrap();
        for (d, lp) in decisions.iter().zip(g.value(ev.log_probs).data()) {
            assert!((d.log_prob - lp.f64()).abs() <= 1e-6);
            assert!(d.log_prob <= 0.0 && d.log_prob.is_finite());
        }
        let bad = [CompositeAction { action_type: 0, node: 3 }; 3];
        assert!(p.evaluate(&mut Graph::new(), &refs, &bad).is_err());
    }

    #[test]
    fn entropy_of_uniform_heads() {
        // Zero the head weights so both heads are uniform.
        let mut p = policy();
        for name in ["head.action_type.weight", "head.select.query"] {
            let id = p.params().id(name).unwrap();
            p.params_mut().get_mut(id).value.fill(0.0);
        }
        let f = features(10, 5);
        let mut g = Graph::new();
        let ev = p
            .evaluate_actions(&mut g, &[&f], &[CompositeAction { action_type: 1, node: 2 }])
            .unwrap();
        let h = g.value(ev.entropies).data()[0].f64();
        assert!((h - (2f64.ln() + 10f64.ln())).abs() < 1e-5);
    }

    #[test]
    fn input_stats_merge() {
        let mut p = policy();
        let rows = [vec![0.2, 0.0], vec![0.4, 1.0], vec![0.6, 0.0], vec![0.8, 1.0]];
        p.update_input_stats(rows[..2].iter().map(Vec::as_slice));
        p.update_input_stats(rows[2..].iter().map(Vec::as_slice));
        let mean = p.params().by_name("input_norm.mean").unwrap().value.to_f64_vec();
        let var = p.params().by_name("input_norm.var").unwrap().value.to_f64_vec();
        assert!((mean[0] - 0.5).abs() < 1e-6 && (mean[1] - 0.5).abs() < 1e-6);
        assert!((var[0] - 0.05).abs() < 1e-6 && (var[1] - 0.25).abs() < 1e-6);
    }
}
