//! Entity-based reinforcement learning for autonomous network defence.
//!
//! The crate contains the attacker/defender network game ([`sim`]) on random
//! topologies ([`netgen`]), entity and flat environment views ([`env`]), a
//! small reverse-mode tensor engine ([`grad`]), a Transformer policy over
//! variable node sets plus an MLP baseline ([`policy`]), a PPO trainer
//! ([`ppo`]) and the experiment harness ([`harness`]).

pub mod env;
pub mod error;
pub mod grad;
pub mod harness;
pub mod netgen;
pub mod policy;
pub mod ppo;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use netgen::Topology;
pub use sim::{BlueAction, BlueActionKind, GameConfig, GameState};
