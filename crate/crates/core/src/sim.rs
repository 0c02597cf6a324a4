//! Attacker/defender game on a network topology.
//!
//! A scripted red agent spreads from entry nodes through adjacency using
//! probabilistic basic attacks and a periodic zero-day; the blue agent acts
//! on one node per step. Reward is the fraction of uncompromised nodes.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub red_skill: f64,
    /// Standard deviation of the attack threshold draw.
    pub attack_noise_scale: f64,
    pub zero_day_interval: u32,
    pub vuln_reduction: f64,
    pub vuln_floor: f64,
    pub episode_length: u32,
    pub vuln_init_range: [f64; 2],
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            red_skill: 0.5,
            attack_noise_scale: 100.0,
            zero_day_interval: 3,
            vuln_reduction: 0.2,
            vuln_floor: 0.01,
            episode_length: 100,
            vuln_init_range: [0.2, 0.8],
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.vuln_init_range;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.red_skill) {
            return bad("red_skill must lie in [0,1]");
        }
        if !(self.attack_noise_scale > 0.0 && self.attack_noise_scale.is_finite()) {
            return bad("attack_noise_scale must be positive");
        }
        if self.zero_day_interval == 0 {
            return bad("zero_day_interval must be positive");
        }
        if !(self.vuln_reduction > 0.0 && self.vuln_reduction < 1.0) {
            return bad("vuln_reduction must lie in (0,1)");
        }
        if !(self.vuln_floor < lo && lo <= hi && hi <= 1.0) {
            return bad("need vuln_floor < vuln_init_range.lo <= hi <= 1");
        }
        if self.episode_length == 0 {
            return bad("episode_length must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub vulnerability: f64,
    pub original_vulnerability: f64,
    pub compromised: bool,
    pub is_entry: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlueActionKind {
    ReduceVulnerability,
    RestoreNode,
}

impl BlueActionKind {
    pub const ALL: [BlueActionKind; 2] = [BlueActionKind::ReduceVulnerability, BlueActionKind::RestoreNode];

    pub fn label(self) -> &'static str {
        match self {
            BlueActionKind::ReduceVulnerability => "ReduceVulnerability",
            BlueActionKind::RestoreNode => "RestoreNode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlueAction {
    pub kind: BlueActionKind,
    pub target: usize,
}

/// What the red agent did on its turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RedOutcome {
    pub target: Option<usize>,
    pub zero_day: bool,
    pub compromised: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub red: RedOutcome,
}

#[derive(Debug, Clone)]
pub struct GameState {
    topology: Topology,
    neighbors: Vec<Vec<usize>>,
    pub nodes: Vec<NodeState>,
    pub step: u32,
    pub zero_day_counter: u32,
}

/// `100 s² / (s + (1 - v))`, defined as 0 when the denominator vanishes.
pub fn attack_strength(skill: f64, vulnerability: f64) -> f64 {
    let denom = skill + (1.0 - vulnerability);
    if denom <= 0.0 {
        return 0.0;
    }
    100.0 * skill * skill / denom
}

impl GameState {
    /// Fresh episode with vulnerabilities drawn uniformly from the init range.
    pub fn reset<R: Rng + ?Sized>(topology: Topology, config: &GameConfig, rng: &mut R) -> Self {
        let [lo, hi] = config.vuln_init_range;
        let vulns: Vec<f64> = (0..topology.node_count())
            .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        Self::with_vulnerabilities(topology, &vulns)
            .expect("vulnerability vector sized from topology")
    }

    /// Fresh episode with the given original vulnerabilities.
    pub fn with_vulnerabilities(topology: Topology, originals: &[f64]) -> Result<Self> {
        if originals.len() != topology.node_count() {
            return Err(Error::invalid("vulnerability vector length mismatch"));
        }
        let nodes = originals
            .iter()
            .enumerate()
            .map(|(i, &v)| NodeState {
                vulnerability: v,
                original_vulnerability: v,
                compromised: false,
                is_entry: topology.entry_nodes().contains(&i),
            })
            .collect();
        Ok(Self {
            neighbors: topology.neighbors(),
            topology,
            nodes,
            step: 0,
            zero_day_counter: 0,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn compromised_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.compromised).count()
    }

    pub fn original_vulnerabilities(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.original_vulnerability).collect()
    }

    pub fn is_done(&self, config: &GameConfig) -> bool {
        self.step >= config.episode_length
    }

    /// Uncompromised entry nodes plus uncompromised neighbours of compromised nodes,
    /// in ascending id order.
    pub fn attack_surface(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| {
                let n = &self.nodes[i];
                !n.compromised
                    && (n.is_entry || self.neighbors[i].iter().any(|&j| self.nodes[j].compromised))
            })
            .collect()
    }

    /// Proportion of nodes not compromised.
    pub fn reward(&self) -> f64 {
        let n = self.nodes.len();
        (n - self.compromised_count()) as f64 / n as f64
    }

    pub fn basic_attack<R: Rng + ?Sized>(
        &mut self,
        target: usize,
        config: &GameConfig,
        rng: &mut R,
    ) -> Result<bool> {
        let node = self
            .nodes
            .get(target)
            .ok_or_else(|| Error::invalid(format!("target {target} out of range")))?;
        if node.compromised {
            return Err(Error::invalid(format!("node {target} already compromised")));
        }
        let a = attack_strength(config.red_skill, node.vulnerability);
        let noise = Normal::new(0.0, config.attack_noise_scale)
            .map_err(|e| Error::Config(e.to_string()))?;
        let t: f64 = noise.sample(rng);
        let success = a > t;
        if success {
            self.nodes[target].compromised = true;
        }
        Ok(success)
    }

    pub fn red_turn<R: Rng + ?Sized>(&mut self, config: &GameConfig, rng: &mut R) -> RedOutcome {
        self.zero_day_counter += 1;
        let surface = self.attack_surface();
        if surface.is_empty() {
            return RedOutcome {
                target: None,
                zero_day: false,
                compromised: false,
            };
        }
        let target = surface[rng.random_range(0..surface.len())];
        if self.zero_day_counter >= config.zero_day_interval {
            self.zero_day_counter = 0;
            self.nodes[target].compromised = true;
            return RedOutcome {
                target: Some(target),
                zero_day: true,
                compromised: true,
            };
        }
        let compromised = self
            .basic_attack(target, config, rng)
            .expect("surface nodes are uncompromised");
        RedOutcome {
            target: Some(target),
            zero_day: false,
            compromised,
        }
    }

    pub fn apply_blue_action(&mut self, action: BlueAction, config: &GameConfig) -> Result<()> {
        let n = self.nodes.len();
        let node = self
            .nodes
            .get_mut(action.target)
            .ok_or_else(|| Error::invalid(format!("target {} out of range for {n} nodes", action.target)))?;
        match action.kind {
            BlueActionKind::ReduceVulnerability => {
                node.vulnerability = (node.vulnerability - config.vuln_reduction).max(config.vuln_floor);
            }
            BlueActionKind::RestoreNode => {
                node.compromised = false;
                node.vulnerability = node.original_vulnerability;
            }
        }
        Ok(())
    }

    /// Blue acts, then red, then the reward is read off the resulting state.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        action: BlueAction,
        config: &GameConfig,
        rng: &mut R,
    ) -> Result<StepResult> {
        if self.is_done(config) {
            return Err(Error::InvalidState("episode already finished".into()));
        }
        self.apply_blue_action(action, config)?;
        let red = self.red_turn(config, rng);
        let reward = self.reward();
        self.step += 1;
        Ok(StepResult {
            reward,
            done: self.is_done(config),
            red,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use approx::assert_relative_eq;

    fn rng(seed: u64) -> crate::rng::Rng {
        stream(seed, Purpose::RedAgent, 0, 0)
    }

    fn path3() -> Topology {
        Topology::from_edges(3, [(0, 1), (1, 2)], [0]).unwrap()
    }

    fn uniform_state(topology: Topology, v: f64) -> GameState {
        let n = topology.node_count();
        GameState::with_vulnerabilities(topology, &vec![v; n]).unwrap()
    }

    #[test]
    fn attack_strength_values() {
        assert_relative_eq!(attack_strength(1.0, 1.0), 100.0);
        assert_eq!(attack_strength(0.0, 0.5), 0.0);
        assert_relative_eq!(attack_strength(0.5, 0.5), 25.0);
        assert_relative_eq!(attack_strength(0.5, 0.0), 100.0 * 0.25 / 1.5);
        assert_eq!(attack_strength(0.0, 1.0), 0.0);
    }

    #[test]
    fn reset_starts_clean() {
        let cfg = GameConfig::default();
        let s = GameState::reset(path3(), &cfg, &mut rng(0));
        assert_eq!(s.compromised_count(), 0);
        assert_eq!(s.reward(), 1.0);
        assert_eq!(s.step, 0);
        assert_eq!(s.zero_day_counter, 0);
        assert!(s.nodes[0].is_entry && !s.nodes[1].is_entry);
        for n in &s.nodes {
            assert!((0.2..=0.8).contains(&n.vulnerability));
            assert_eq!(n.vulnerability, n.original_vulnerability);
        }
    }

    #[test]
    fn degenerate_init_range() {
        let cfg = GameConfig {
            vuln_init_range: [0.5, 0.5],
            ..Default::default()
        };
        let s = GameState::reset(path3(), &cfg, &mut rng(0));
        assert!(s.nodes.iter().all(|n| n.vulnerability == 0.5));
    }

    #[test]
    fn reset_vulnerability_mean() {
        let cfg = GameConfig::default();
        let mut r = rng(11);
        let mut sum = 0.0;
        let mut count = 0;
        for _ in 0..10_000 {
            let s = GameState::reset(path3(), &cfg, &mut r);
            sum += s.nodes.iter().map(|n| n.vulnerability).sum::<f64>();
            count += s.node_count();
        }
        assert!((sum / count as f64 - 0.5).abs() <= 0.01);
    }

    #[test]
    fn surface_rules() {
        let mut s = uniform_state(path3(), 0.5);
        assert_eq!(s.attack_surface(), vec![0]);
        s.nodes[0].compromised = true;
        assert_eq!(s.attack_surface(), vec![1]);
        for n in &mut s.nodes {
            n.compromised = true;
        }
        assert!(s.attack_surface().is_empty());
    }

    #[test]
    fn basic_attack_on_compromised_rejected() {
        let mut s = uniform_state(path3(), 0.5);
        s.nodes[0].compromised = true;
        let cfg = GameConfig::default();
        assert!(matches!(s.basic_attack(0, &cfg, &mut rng(0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_day_fires_on_third_turn() {
        let cfg = GameConfig {
            red_skill: 0.0,
            ..Default::default()
        };
        let mut s = uniform_state(path3(), 0.5);
        s.zero_day_counter = 2;
        let out = s.red_turn(&cfg, &mut rng(0));
        assert!(out.zero_day && out.compromised);
        assert_eq!(out.target, Some(0));
        assert_eq!(s.zero_day_counter, 0);
        assert!(s.nodes[0].compromised);
    }

    #[test]
    fn idle_red_still_counts() {
        let cfg = GameConfig::default();
        let mut s = uniform_state(path3(), 0.5);
        for n in &mut s.nodes {
            n.compromised = true;
        }
        let out = s.red_turn(&cfg, &mut rng(0));
        assert_eq!(out.target, None);
        assert_eq!(s.zero_day_counter, 1);
        assert_eq!(s.compromised_count(), 3);
    }

    #[test]
    fn blue_actions() {
        let cfg = GameConfig::default();
        let mut s = uniform_state(path3(), 0.5);
        let reduce = |t| BlueAction {
            kind: BlueActionKind::ReduceVulnerability,
            target: t,
        };
        s.apply_blue_action(reduce(0), &cfg).unwrap();
        assert_relative_eq!(s.nodes[0].vulnerability, 0.3, epsilon = 1e-12);
        s.nodes[1].vulnerability = 0.05;
        s.apply_blue_action(reduce(1), &cfg).unwrap();
        assert_eq!(s.nodes[1].vulnerability, 0.01);

        s.nodes[2].original_vulnerability = 0.7;
        s.nodes[2].vulnerability = 0.01;
        s.nodes[2].compromised = true;
        s.apply_blue_action(
            BlueAction {
                kind: BlueActionKind::RestoreNode,
                target: 2,
            },
            &cfg,
        )
        .unwrap();
        assert!(!s.nodes[2].compromised);
        assert_eq!(s.nodes[2].vulnerability, 0.7);
        assert!(s.apply_blue_action(reduce(3), &cfg).is_err());
    }

    #[test]
    fn reward_formula() {
        let t = Topology::empty(20).unwrap();
        let mut s = uniform_state(t, 0.5);
        for n in s.nodes.iter_mut().take(5) {
            n.compromised = true;
        }
        assert_eq!(s.reward(), 0.75);
    }

    #[test]
    fn restore_then_failed_attack_gives_full_reward() {
        let cfg = GameConfig {
            red_skill: 0.0,
            ..Default::default()
        };
        let restore = BlueAction {
            kind: BlueActionKind::RestoreNode,
            target: 0,
        };
        // With zero skill a basic attack fails exactly when the threshold draw
        // is non-negative; find a seed for which that happens.
        let seed = (0..64)
            .find(|&seed| {
                let mut s = uniform_state(path3(), 0.5);
                s.nodes[0].compromised = true;
                s.step(restore, &cfg, &mut rng(seed)).unwrap().reward == 1.0
            })
            .expect("some seed yields a failed attack");
        let mut s = uniform_state(path3(), 0.5);
        s.nodes[0].compromised = true;
        let r = s.step(restore, &cfg, &mut rng(seed)).unwrap();
        assert_eq!(r.red.target, Some(0));
        assert!(!r.red.compromised);
        assert_eq!(r.reward, 1.0);
    }

    #[test]
    fn episode_length_and_done() {
        let cfg = GameConfig::default();
        let topo = Topology::from_edges(4, [(0, 1), (1, 2), (2, 3)], [1]).unwrap();
        let mut s = GameState::reset(topo, &cfg, &mut rng(1));
        let mut r = rng(2);
        let action = BlueAction {
            kind: BlueActionKind::ReduceVulnerability,
            target: 0,
        };
        let mut total = 0.0;
        for i in 1..=100 {
            let out = s.step(action, &cfg, &mut r).unwrap();
            assert!((0.0..=1.0).contains(&out.reward));
            assert_eq!(out.done, i == 100);
            total += out.reward;
        }
        assert!(total <= 100.0);
        assert!(matches!(s.step(action, &cfg, &mut r), Err(Error::InvalidState(_))));
    }

    #[test]
    fn config_validation() {
        assert!(GameConfig::default().validate().is_ok());
        let bad = GameConfig {
            vuln_floor: 0.3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
