use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::env::RegimeMode;
use crate::error::{Error, Result};
use crate::policy::PolicyFamily;
use crate::ppo::{train, RunConfig};

pub const MATRIX_FILE: &str = "matrix.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentMatrix {
    pub policies: Vec<PolicyFamily>,
    pub regimes: Vec<RegimeMode>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentMatrix {
    /// The full matrix: 2 policies × 2 regimes × 3 sizes × 3 seeds.
    fn default() -> Self {
        Self {
            policies: vec![PolicyFamily::Entity, PolicyFamily::Mlp],
            regimes: vec![RegimeMode::Static, RegimeMode::Random],
            sizes: vec![10, 20, 40],
            seeds: vec![0, 1, 2],
        }
    }
}

/// One training run of the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSpec {
    pub family: PolicyFamily,
    pub regime: RegimeMode,
    pub nodes: usize,
    pub seed: u64,
}

impl RunSpec {
    /// `<policy>_<regime>_<nodes>_seed<k>`
    pub fn name(&self) -> String {
        format!("{}_{}_{}_seed{}", self.family.as_str(), self.regime.as_str(), self.nodes, self.seed)
    }

    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('_');
        let family = parts.next()?.parse().ok()?;
        let regime = parts.next()?.parse().ok()?;
        let nodes = parts.next()?.parse().ok()?;
        let seed = parts.next()?.strip_prefix("seed")?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        Some(Self {
            family,
            regime,
            nodes,
            seed,
        })
    }

    /// `base` with this run's policy, regime, size and seed.
    pub fn config(&self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        cfg.seed = self.seed;
        cfg.policy.family = self.family;
        cfg.env.mode = self.regime;
        cfg.env.nodes = self.nodes;
        cfg
    }
}

impl ExperimentMatrix {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() || self.regimes.is_empty() || self.sizes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("every matrix dimension must be nonempty".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &family in &self.policies {
            for &regime in &self.regimes {
                for &nodes in &self.sizes {
                    for &seed in &self.seeds {
                        out.push(RunSpec {
                            family,
                            regime,
                            nodes,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }

    /// Runs whose checkpoints take part in cross-size evaluation: entity
    /// policies trained on random networks.
    pub fn cross_size_runs(&self) -> Vec<RunSpec> {
        self.cells()
            .into_iter()
            .filter(|c| c.family == PolicyFamily::Entity && c.regime == RegimeMode::Random)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub dir: PathBuf,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixOutcome {
    pub records: Vec<RunRecord>,
}

impl MatrixOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }
}

/// Trains every cell into `out/<name>/`, up to `parallelism` at a time.
/// A failed run is recorded in `out/matrix.json` and the rest continue.
pub fn run_matrix(matrix: &ExperimentMatrix, base: &RunConfig, out: &Path, parallelism: usize) -> Result<MatrixOutcome> {
    matrix.validate()?;
    base.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cells = matrix.cells();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|s| {
        for _ in 0..parallelism.clamp(1, cells.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = cells.get(i) else { break };
                let name = cell.name();
                let dir = out.join(&name);
                log::info!("starting {name}");
                let error = train(&cell.config(base), &dir).err().map(|e| {
                    log::error!("{name} failed: {e}");
                    e.to_string()
                });
                results.lock().unwrap()[i] = Some(RunRecord { name, dir, error });
            });
        }
    });
    let records = results.into_inner().unwrap().into_iter().flatten().collect();
    let outcome = MatrixOutcome { records };
    let path = out.join(MATRIX_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&outcome)?).map_err(|e| Error::io(&path, e))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::policy::{EntityPolicyConfig, MlpPolicyConfig};
    use crate::ppo::{PolicyConfig, PpoConfig, Precision};

    #[test]
    fn default_matrix_has_36_runs() {
        let m = ExperimentMatrix::default();
        assert_eq!(m.cells().len(), 36);
        assert_eq!(m.cross_size_runs().len(), 9);
        assert!(m.cross_size_runs().iter().all(|c| c.family == PolicyFamily::Entity));
    }

    #[test]
    fn names_round_trip() {
        for c in ExperimentMatrix::default().cells() {
            assert_eq!(RunSpec::parse(&c.name()), Some(c));
        }
        let c = RunSpec {
            family: PolicyFamily::Mlp,
            regime: RegimeMode::Static,
            nodes: 20,
            seed: 1,
        };
        assert_eq!(c.name(), "mlp_static_20_seed1");
        assert_eq!(RunSpec::parse("entity_random_10"), None);
    }

    #[test]
    fn empty_dimension_rejected() {
        let m = ExperimentMatrix {
            seeds: vec![],
            ..Default::default()
        };
        assert!(m.validate().is_err());
    }

    fn base() -> RunConfig {
        RunConfig {
            seed: 0,
            precision: Precision::F64,
            env: EnvConfig::new(RegimeMode::Random, 5, 0),
            policy: PolicyConfig {
                family: PolicyFamily::Entity,
                entity: EntityPolicyConfig {
                    d_model: 8,
                    n_heads: 1,
                    n_layers: 1,
                    d_ff: 8,
                    ..Default::default()
                },
                mlp: MlpPolicyConfig { hidden: 8 },
            },
            ppo: PpoConfig {
                total_steps: 200,
                num_envs: 2,
                rollout_len: 50,
                epochs: 1,
                minibatches: 2,
                eval_interval: 100,
                checkpoint_interval: 0,
                ..Default::default()
            },
        }
    }

    #[test]
    fn single_cell_and_failures_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let m = ExperimentMatrix {
            policies: vec![PolicyFamily::Entity, PolicyFamily::Mlp],
            regimes: vec![RegimeMode::Random],
            sizes: vec![5, 0],
            seeds: vec![1],
        };
        let out = run_matrix(&m, &base(), dir.path(), 2).unwrap();
        assert_eq!(out.records.len(), 4);
        let failed: Vec<_> = out.failures().map(|r| r.name.as_str()).collect();
        assert_eq!(failed, vec!["entity_random_0_seed1", "mlp_random_0_seed1"]);
        let run = dir.path().join("entity_random_5_seed1");
        for f in ["config.toml", "log.csv", "final.json", "final.bin"] {
            assert!(run.join(f).exists(), "{f}");
        }
        assert!(dir.path().join(MATRIX_FILE).exists());
    }

    #[test]
    fn reruns_reproduce_logs() {
        let m = ExperimentMatrix {
            policies: vec![PolicyFamily::Mlp],
            regimes: vec![RegimeMode::Static],
            sizes: vec![5],
            seeds: vec![0],
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_matrix(&m, &base(), a.path(), 1).unwrap();
        run_matrix(&m, &base(), b.path(), 1).unwrap();
        let strip = |p: &Path| -> Vec<_> {
            crate::ppo::read_log(&p.join("mlp_static_5_seed0/log.csv"))
                .unwrap()
                .into_iter()
                .map(|r| (r.env_steps, r.episodic_reward.to_bits(), r.policy_loss.to_bits()))
                .collect()
        };
        assert_eq!(strip(a.path()), strip(b.path()));
    }
}
