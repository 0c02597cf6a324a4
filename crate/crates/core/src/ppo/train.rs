use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::buffer::RolloutCollector;
use super::config::{Precision, RunConfig};
use super::rollout_eval::play_episodes;
use super::update::{ppo_update, UpdateMetrics};
use crate::env::NetworkEnv;
use crate::error::{Error, Result};
use crate::grad::{Adam, Real};
use crate::policy::{ActorCritic, AnyPolicy, PolicyFamily};
use crate::rng::{stream, Purpose};

pub const CONFIG_FILE: &str = "config.toml";
pub const LOG_FILE: &str = "log.csv";
pub const FINAL_CHECKPOINT: &str = "final.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Instance numbers of held-out evaluation environments start here, far
/// from the training instances.
pub const EVAL_INSTANCE_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub env_steps: u64,
    pub episodic_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub final_checkpoint: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub log_path: PathBuf,
    pub rows: Vec<LogRow>,
    pub env_steps: u64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub fn checkpoint_path(run_dir: &Path, env_steps: u64) -> PathBuf {
    run_dir.join(CHECKPOINT_DIR).join(format!("step_{env_steps:010}.json"))
}

/// Trains one policy and writes the config snapshot, the CSV log, periodic
/// checkpoints and a final checkpoint into `run_dir`.
pub fn train(config: &RunConfig, run_dir: &Path) -> Result<TrainOutcome> {
    config.validate()?;
    fs::create_dir_all(run_dir.join(CHECKPOINT_DIR)).map_err(|e| Error::io(run_dir, e))?;
    let cfg_path = run_dir.join(CONFIG_FILE);
    fs::write(&cfg_path, config.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;
    match config.precision {
        Precision::F32 => train_typed::<f32>(config, run_dir),
        Precision::F64 => train_typed::<f64>(config, run_dir),
    }
}

fn train_typed<T: Real>(config: &RunConfig, run_dir: &Path) -> Result<TrainOutcome> {
    let nodes = config.env.nodes;
    let mut init = stream(config.seed, Purpose::PolicyInit, 0, 0);
    let policy = AnyPolicy::<T>::build(config.policy.family, &config.policy.entity, &config.policy.mlp, nodes, &mut init)?;
    match policy {
        AnyPolicy::Entity(p) => train_loop(config, run_dir, p, |p, path, steps| {
            AnyPolicy::Entity(p.clone()).save(path, nodes, steps)
        }),
        AnyPolicy::Mlp(p) => train_loop(config, run_dir, p, |p, path, steps| {
            AnyPolicy::Mlp(p.clone()).save(path, nodes, steps)
        }),
    }
}

fn train_loop<T: Real, P: ActorCritic<T>>(
    config: &RunConfig,
    run_dir: &Path,
    mut policy: P,
    save: impl Fn(&P, &Path, u64) -> Result<()>,
) -> Result<TrainOutcome> {
    let ppo = &config.ppo;
    let env_cfg = config.env_config();
    let lr = ppo.learning_rate_for(config.policy.family);
    let seed = config.seed;

    let envs = (0..ppo.num_envs as u64)
        .map(|i| NetworkEnv::new(env_cfg.clone(), i))
        .collect::<Result<Vec<_>>>()?;
    let mut eval_envs = (0..ppo.eval_episodes as u64)
        .map(|i| NetworkEnv::new(env_cfg.clone(), EVAL_INSTANCE_BASE + i))
        .collect::<Result<Vec<_>>>()?;
    let mut collector = RolloutCollector::new(envs, &policy)?;
    let mut adam = Adam::new(policy.params());
    let mut act_rng = stream(seed, Purpose::ActionSampling, 0, 0);
    let mut mb_rng = stream(seed, Purpose::Minibatch, 0, 0);
    let mut eval_rng = stream(seed, Purpose::Evaluation, 0, 0);

    let log_path = run_dir.join(LOG_FILE);
    let mut log = csv::Writer::from_path(&log_path).map_err(|e| csv_err(&log_path, e))?;
    let mut rows = Vec::new();
    let mut checkpoints = Vec::new();
    let mut next_eval = ppo.eval_interval;
    let mut next_ckpt = ppo.checkpoint_interval;
    let start = Instant::now();

    while collector.env_steps() < ppo.total_steps {
        let mut buffer = collector.collect(&policy, ppo.rollout_len, ppo.reward_scale, &mut act_rng)?;
        buffer.compute_gae(ppo.gamma, ppo.gae_lambda);
        let metrics: UpdateMetrics = ppo_update(&mut policy, &mut adam, &buffer, ppo, lr, &mut mb_rng)?;
        let refs: Vec<&P::Obs> = buffer.observations.iter().collect();
        policy.observe_rollout(&refs);
        collector.drain_episode_returns();
        let steps = collector.env_steps();

        while next_eval <= steps {
            let rewards = play_episodes(&policy, &mut eval_envs, &mut eval_rng)?;
            let row = LogRow {
                env_steps: next_eval,
                episodic_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
                policy_loss: metrics.policy_loss,
                value_loss: metrics.value_loss,
                entropy: metrics.entropy,
                clip_fraction: metrics.clip_fraction,
                grad_norm: metrics.grad_norm,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            log.serialize(row).map_err(|e| csv_err(&log_path, e))?;
            log.flush().map_err(|e| Error::io(&log_path, e))?;
            log::info!(
                "{}: steps {} reward {:.2} entropy {:.3} value_loss {:.4}",
                run_dir.display(),
                row.env_steps,
                row.episodic_reward,
                row.entropy,
                row.value_loss
            );
            rows.push(row);
            next_eval += ppo.eval_interval;
        }
        while ppo.checkpoint_interval > 0 && next_ckpt <= steps {
            let path = checkpoint_path(run_dir, next_ckpt);
            save(&policy, &path, steps)?;
            checkpoints.push(path);
            next_ckpt += ppo.checkpoint_interval;
        }
    }

    let final_checkpoint = run_dir.join(FINAL_CHECKPOINT);
    save(&policy, &final_checkpoint, collector.env_steps())?;
    Ok(TrainOutcome {
        run_dir: run_dir.to_path_buf(),
        final_checkpoint,
        checkpoints,
        log_path,
        rows,
        env_steps: collector.env_steps(),
    })
}

/// Loads a checkpoint in the precision it was saved in, widened or narrowed
/// to `T`.
pub fn load_policy<T: Real>(path: &Path) -> Result<(AnyPolicy<T>, crate::policy::PolicyManifest)> {
    let manifest = crate::grad::checkpoint::read_manifest(path)?;
    if manifest.precision == T::PRECISION {
        return AnyPolicy::load(path);
    }
    let (store, m) = match manifest.precision.as_str() {
        "f32" => {
            let (p, m) = AnyPolicy::<f32>::load(path)?;
            (p.params().cast::<T>(), m)
        }
        "f64" => {
            let (p, m) = AnyPolicy::<f64>::load(path)?;
            (p.params().cast::<T>(), m)
        }
        other => return Err(Error::Format(format!("unknown precision {other}"))),
    };
    let policy = match m.family {
        PolicyFamily::Entity => AnyPolicy::Entity(crate::policy::EntityPolicy::from_params(
            m.entity.clone().unwrap_or_default(),
            &store,
        )?),
        PolicyFamily::Mlp => AnyPolicy::Mlp(crate::policy::MlpPolicy::from_params(
            m.mlp.clone().unwrap_or_default(),
            m.construction_nodes.unwrap_or(m.train_nodes),
            &store,
        )?),
    };
    Ok((policy, m))
}
