//! Environment interfaces over the game: an entity view, a flat
//! fixed-width view for the MLP baseline, and a vectorised wrapper.

mod entity;
mod flat;
mod trajectory;
mod vec_env;

pub use entity::{compose_entity_action, entity_observe, ActionSpaceSpec, EntityObservation, NODE_ENTITY};
pub use flat::{decode_flat_action, encode_flat_action, flat_observe};
pub use trajectory::{TrajectoryLogger, TrajectoryRecord};
pub use vec_env::{Transition, VecEnv};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{self, Topology};
use crate::rng::{self, Purpose, Rng};
use crate::sim::{BlueAction, GameConfig, GameState, StepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeMode {
    /// One topology (and vulnerability profile) fixed for the whole run.
    Static,
    /// A fresh topology every episode.
    Random,
}

impl RegimeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeMode::Static => "static",
            RegimeMode::Random => "random",
        }
    }
}

impl std::str::FromStr for RegimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(RegimeMode::Static),
            "random" => Ok(RegimeMode::Random),
            other => Err(Error::Config(format!("unknown regime {other:?}"))),
        }
    }
}

/// Environment construction document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub mode: RegimeMode,
    pub nodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_edge_prob")]
    pub edge_prob: f64,
    #[serde(default = "default_entry_count")]
    pub entry_count: usize,
    #[serde(default)]
    pub game: GameConfig,
}

fn default_edge_prob() -> f64 {
    0.1
}

fn default_entry_count() -> usize {
    1
}

impl EnvConfig {
    pub fn new(mode: RegimeMode, nodes: usize, seed: u64) -> Self {
        Self {
            mode,
            nodes,
            seed,
            edge_prob: default_edge_prob(),
            entry_count: default_entry_count(),
            game: GameConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::Config("nodes must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::Config("edge_prob must lie in [0,1]".into()));
        }
        if self.entry_count == 0 || self.entry_count > self.nodes {
            return Err(Error::Config("entry_count must be in 1..=nodes".into()));
        }
        self.game.validate()
    }
}

/// One game instance plus the regime rules deciding what each reset produces.
///
/// All randomness is drawn from sub-streams keyed by `(seed, instance,
/// episode)`. In the static regime the topology and vulnerabilities depend on
/// the seed alone, so every instance built from one seed shares one network.
#[derive(Debug, Clone)]
pub struct NetworkEnv {
    config: EnvConfig,
    instance: u64,
    episode: u64,
    state: GameState,
    red_rng: Rng,
    static_net: Option<(Topology, Vec<f64>)>,
    last_reward: f64,
    last_done: bool,
}

impl NetworkEnv {
    pub fn new(config: EnvConfig, instance: u64) -> Result<Self> {
        config.validate()?;
        let static_net = match config.mode {
            RegimeMode::Static => {
                let mut r = rng::stream(config.seed, Purpose::Topology, 0, 0);
                let topo = netgen::generate_er_graph(config.nodes, config.edge_prob, &mut r)?;
                let mut r = rng::stream(config.seed, Purpose::Vulnerability, 0, 0);
                let vulns = GameState::reset(topo.clone(), &config.game, &mut r).original_vulnerabilities();
                Some((topo, vulns))
            }
            RegimeMode::Random => None,
        };
        let (state, red_rng) = Self::build_episode(&config, static_net.as_ref(), instance, 0)?;
        Ok(Self {
            config,
            instance,
            episode: 0,
            state,
            red_rng,
            static_net,
            last_reward: 0.0,
            last_done: false,
        })
    }

    fn build_episode(
        config: &EnvConfig,
        static_net: Option<&(Topology, Vec<f64>)>,
        instance: u64,
        episode: u64,
    ) -> Result<(GameState, Rng)> {
        let seed = config.seed;
        let mut entry_rng = rng::stream(seed, Purpose::EntryNode, instance, episode);
        let state = match static_net {
            Some((topo, vulns)) => {
                let topo = netgen::select_entry_nodes(topo.clone(), config.entry_count, &mut entry_rng)?;
                GameState::with_vulnerabilities(topo, vulns)?
            }
            None => {
                let mut topo_rng = rng::stream(seed, Purpose::Topology, instance, episode + 1);
                let topo = netgen::generate_er_graph(config.nodes, config.edge_prob, &mut topo_rng)?;
                let topo = netgen::select_entry_nodes(topo, config.entry_count, &mut entry_rng)?;
                let mut vuln_rng = rng::stream(seed, Purpose::Vulnerability, instance, episode + 1);
                GameState::reset(topo, &config.game, &mut vuln_rng)
            }
        };
        Ok((state, rng::stream(seed, Purpose::RedAgent, instance, episode)))
    }

    /// Starts the next episode.
    pub fn reset(&mut self) -> Result<()> {
        self.episode += 1;
        let (state, red_rng) =
            Self::build_episode(&self.config, self.static_net.as_ref(), self.instance, self.episode)?;
        self.state = state;
        self.red_rng = red_rng;
        self.last_reward = 0.0;
        self.last_done = false;
        Ok(())
    }

    pub fn step(&mut self, action: BlueAction) -> Result<StepResult> {
        let out = self.state.step(action, &self.config.game, &mut self.red_rng)?;
        self.last_reward = out.reward;
        self.last_done = out.done;
        Ok(out)
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn node_count(&self) -> usize {
        self.state.node_count()
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn entity_observation(&self) -> EntityObservation {
        entity_observe(&self.state, self.last_reward, self.last_done)
    }

    pub fn flat_observation(&self) -> Vec<f64> {
        flat_observe(&self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_regime_reuses_network() {
        let cfg = EnvConfig::new(RegimeMode::Static, 10, 3);
        let mut env = NetworkEnv::new(cfg.clone(), 0).unwrap();
        let first: Vec<_> = env.state().topology().edges().collect();
        let vulns = env.state().original_vulnerabilities();
        let mut entries = std::collections::BTreeSet::new();
        for _ in 0..30 {
            env.reset().unwrap();
            assert_eq!(env.state().topology().edges().collect::<Vec<_>>(), first);
            assert_eq!(env.state().original_vulnerabilities(), vulns);
            entries.insert(*env.state().topology().entry_nodes().iter().next().unwrap());
        }
        assert!(entries.len() > 1, "entry node should vary across resets");
        // another instance from the same seed shares the network
        let other = NetworkEnv::new(cfg, 5).unwrap();
        assert_eq!(other.state().topology().edges().collect::<Vec<_>>(), first);
    }

    #[test]
    fn random_regime_regenerates() {
        let mut env = NetworkEnv::new(EnvConfig::new(RegimeMode::Random, 10, 3), 0).unwrap();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..20 {
            let edges: Vec<_> = env.state().topology().edges().collect();
            assert!(env.state().topology().is_connected());
            seen.insert(edges);
            env.reset().unwrap();
        }
        assert!(seen.len() >= 19);
    }

    #[test]
    fn reset_observation_has_zero_reward() {
        let env = NetworkEnv::new(EnvConfig::new(RegimeMode::Random, 10, 0), 0).unwrap();
        let obs = env.entity_observation();
        assert_eq!(obs.reward, 0.0);
        assert!(!obs.done);
    }

    #[test]
    fn config_parses_from_toml() {
        let cfg: EnvConfig = toml::from_str(
            r#"
            mode = "static"
            nodes = 20
            seed = 4
            [game]
            red_skill = 0.7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.mode, RegimeMode::Static);
        assert_eq!(cfg.game.red_skill, 0.7);
        assert_eq!(cfg.game.episode_length, 100);
        assert_eq!(cfg.edge_prob, 0.1);
    }
}
