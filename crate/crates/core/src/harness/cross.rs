use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::{evaluate_policy, EvalReport};
use crate::error::{Error, Result};
use crate::policy::PolicyFamily;
use crate::ppo::load_policy;

pub const CROSS_SUMMARY_FILE: &str = "cross_size.csv";
pub const CROSS_EPISODES_FILE: &str = "cross_size_episodes.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCell {
    pub train_nodes: usize,
    pub eval_nodes: usize,
    pub checkpoint: PathBuf,
    pub report: EvalReport,
}

impl CrossCell {
    pub fn name(&self) -> String {
        cell_name(self.train_nodes, self.eval_nodes)
    }
}

pub fn cell_name(train: usize, eval: usize) -> String {
    format!("eval_rand_{train}_on_{eval}")
}

/// Rows are training sizes in checkpoint order, columns are eval sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSizeGrid {
    pub cells: Vec<CrossCell>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    name: String,
    train_nodes: usize,
    eval_nodes: usize,
    count: usize,
    mean: f64,
    std: f64,
    min: f64,
    #[serde(rename = "25%")]
    q25: f64,
    #[serde(rename = "50%")]
    median: f64,
    #[serde(rename = "75%")]
    q75: f64,
    max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EpisodeRow {
    name: String,
    train_nodes: usize,
    eval_nodes: usize,
    episode: usize,
    reward: f64,
}

impl CrossSizeGrid {
    pub fn cell(&self, train: usize, eval: usize) -> Option<&CrossCell> {
        self.cells.iter().find(|c| c.train_nodes == train && c.eval_nodes == eval)
    }

    /// Writes the summary table and the per-episode rewards into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(CROSS_SUMMARY_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| super::csv_error(&path, e))?;
        for c in &self.cells {
            let s = &c.report.summary;
            w.serialize(SummaryRow {
                name: c.name(),
                train_nodes: c.train_nodes,
                eval_nodes: c.eval_nodes,
                count: s.count,
                mean: s.mean,
                std: s.std,
                min: s.min,
                q25: s.q25,
                median: s.median,
                q75: s.q75,
                max: s.max,
            })
            .map_err(|e| super::csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(CROSS_EPISODES_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| super::csv_error(&path, e))?;
        for c in &self.cells {
            for (episode, &reward) in c.report.rewards.iter().enumerate() {
                w.serialize(EpisodeRow {
                    name: c.name(),
                    train_nodes: c.train_nodes,
                    eval_nodes: c.eval_nodes,
                    episode,
                    reward,
                })
                .map_err(|e| super::csv_error(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Per-episode rewards grouped by `(train_nodes, eval_nodes)`, in file order.
pub fn read_cross_size_episodes(path: &Path) -> Result<Vec<((usize, usize), Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| super::csv_error(path, e))?;
    let mut out: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    for row in r.deserialize::<EpisodeRow>() {
        let row = row.map_err(|e| super::csv_error(path, e))?;
        let key = (row.train_nodes, row.eval_nodes);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row.reward),
            None => out.push((key, vec![row.reward])),
        }
    }
    Ok(out)
}

/// Evaluates every entity checkpoint on every size in `sizes`.
pub fn cross_size_matrix(checkpoints: &[PathBuf], sizes: &[usize], episodes: usize, seed: u64) -> Result<CrossSizeGrid> {
    if checkpoints.is_empty() || sizes.is_empty() {
        return Err(Error::invalid("need at least one checkpoint and one size"));
    }
    let mut cells = Vec::new();
    for path in checkpoints {
        let (policy, manifest) = load_policy::<f32>(path)?;
        if manifest.family != PolicyFamily::Entity {
            return Err(Error::UnsupportedEvaluation(format!(
                "{} is an {} checkpoint; cross-size evaluation needs entity policies",
                path.display(),
                manifest.family.as_str()
            )));
        }
        for &k in sizes {
            log::info!("evaluating {} on {k} nodes", path.display());
            cells.push(CrossCell {
                train_nodes: manifest.train_nodes,
                eval_nodes: k,
                checkpoint: path.clone(),
                report: evaluate_policy(&policy, k, episodes, seed)?,
            });
        }
    }
    Ok(CrossSizeGrid { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{AnyPolicy, EntityPolicyConfig, MlpPolicyConfig};
    use crate::rng::{stream, Purpose};

    fn save(dir: &Path, family: PolicyFamily, train_nodes: usize) -> PathBuf {
        let cfg = EntityPolicyConfig {
            d_model: 8,
            n_heads: 1,
            n_layers: 1,
            d_ff: 8,
            ..Default::default()
        };
        let p = AnyPolicy::<f32>::build(family, &cfg, &MlpPolicyConfig { hidden: 4 }, train_nodes, &mut stream(1, Purpose::PolicyInit, 0, 0)).unwrap();
        let path = dir.join(format!("{}_{train_nodes}.json", family.as_str()));
        p.save(&path, train_nodes, 0).unwrap();
        path
    }

    #[test]
    fn full_grid_written_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let cps: Vec<_> = [10, 20, 40].iter().map(|&n| save(dir.path(), PolicyFamily::Entity, n)).collect();
        let grid = cross_size_matrix(&cps, &[10, 20, 40], 3, 0).unwrap();
        assert_eq!(grid.cells.len(), 9);
        assert_eq!(grid.cell(20, 40).unwrap().name(), "eval_rand_20_on_40");
        grid.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join(CROSS_SUMMARY_FILE)).unwrap();
        assert!(text.starts_with("name,train_nodes,eval_nodes,count,mean,std,min,25%,50%,75%,max\neval_rand_10_on_10,"));
        let eps = read_cross_size_episodes(&dir.path().join(CROSS_EPISODES_FILE)).unwrap();
        assert_eq!(eps.len(), 9);
        for ((t, e), rewards) in eps {
            assert_eq!(rewards, grid.cell(t, e).unwrap().report.rewards);
        }
    }

    #[test]
    fn mlp_refused() {
        let dir = tempfile::tempdir().unwrap();
        let cp = save(dir.path(), PolicyFamily::Mlp, 10);
        assert!(matches!(cross_size_matrix(&[cp], &[10], 1, 0), Err(Error::UnsupportedEvaluation(_))));
    }
}
