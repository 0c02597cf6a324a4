//! Clipped-surrogate PPO with GAE over either policy family.

mod buffer;
mod config;
mod gae;
mod rollout_eval;
mod train;
mod update;

pub use buffer::{RolloutBuffer, RolloutCollector};
pub use config::{PolicyConfig, PpoConfig, Precision, RunConfig};
pub use gae::compute_gae;
pub use rollout_eval::play_episodes;
pub use train::{
    checkpoint_path, load_policy, read_log, train, LogRow, TrainOutcome, CHECKPOINT_DIR, CONFIG_FILE,
    EVAL_INSTANCE_BASE, FINAL_CHECKPOINT, LOG_FILE,
};
pub use update::{normalize_advantages, ppo_loss, ppo_update, PpoLoss, UpdateMetrics};
