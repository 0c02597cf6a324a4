use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netdef::harness::{self, ExperimentMatrix, RunSpec};
use netdef::ppo::{self, RunConfig};
use netdef::rng::{stream, Purpose};
use netdef::{netgen, Error, Result};

#[derive(Parser)]
#[command(name = "netdef", version, about = "Entity-based network defence training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy from a run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory; defaults to runs/<policy>_<regime>_<nodes>_seed<k>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on random networks of one size.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-episode rewards as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-shot cross-size evaluation of entity checkpoints.
    Xeval {
        #[arg(long, value_delimiter = ',', required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "xeval")]
        out: PathBuf,
    },
    /// Training curves and box plots from run artifacts.
    Plot {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every cell of an experiment matrix.
    Matrix {
        /// Base run config; policy, regime, size and seed are overridden per cell.
        #[arg(long)]
        config: PathBuf,
        /// Matrix as TOML; defaults to the full 36-run matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Generate a connected Erdős–Rényi network with entry nodes.
    GenNet {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        edge_prob: f64,
        #[arg(long, default_value_t = 1)]
        entry_count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_name(cfg: &RunConfig) -> String {
    RunSpec {
        family: cfg.policy.family,
        regime: cfg.env.mode,
        nodes: cfg.env.nodes,
        seed: cfg.seed,
    }
    .name()
}

fn load_matrix(path: &Path) -> Result<ExperimentMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentMatrix::from_toml(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.unwrap_or_else(|| Path::new("runs").join(run_name(&cfg)));
            let outcome = ppo::train(&cfg, &dir)?;
            let last = outcome.rows.last().map(|r| r.episodic_reward);
            log::info!("finished {} steps, last evaluation {last:?}", outcome.env_steps);
            println!("{}", outcome.final_checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            nodes,
            episodes,
            seed,
            out,
        } => {
            let report = harness::evaluate(&checkpoint, nodes, episodes, seed)?;
            if let Some(path) = out {
                report.write_csv(&path)?;
            }
            println!("{}", serde_json::to_string_pretty(&report.summary)?);
        }
        Command::Xeval {
            checkpoints,
            sizes,
            episodes,
            seed,
            out,
        } => {
            let grid = harness::cross_size_matrix(&checkpoints, &sizes, episodes, seed)?;
            grid.write(&out)?;
            println!("{:<22} {:>10} {:>10} {:>10}", "name", "mean", "std", "min");
            for c in &grid.cells {
                let s = &c.report.summary;
                println!("{:<22} {:>10.4} {:>10.4} {:>10.4}", c.name(), s.mean, s.std, s.min);
            }
        }
        Command::Plot { runs, out } => {
            let report = harness::emit_plots(&runs, &out)?;
            for m in &report.missing {
                eprintln!("missing: {m}");
            }
            for w in &report.written {
                println!("{}", w.display());
            }
        }
        Command::Matrix {
            config,
            matrix,
            out,
            parallelism,
        } => {
            let base = RunConfig::load(&config)?;
            let matrix = match matrix {
                Some(p) => load_matrix(&p)?,
                None => ExperimentMatrix::default(),
            };
            let outcome = harness::run_matrix(&matrix, &base, &out, parallelism)?;
            let failed: Vec<_> = outcome.failures().collect();
            for f in &failed {
                eprintln!("{} failed: {}", f.name, f.error.as_deref().unwrap_or(""));
            }
            println!("{} runs, {} failed", outcome.records.len(), failed.len());
        }
        Command::GenNet {
            nodes,
            edge_prob,
            entry_count,
            seed,
            out,
        } => {
            let topo = netgen::generate_er_graph(nodes, edge_prob, &mut stream(seed, Purpose::Topology, 0, 0))?;
            let topo = netgen::select_entry_nodes(topo, entry_count, &mut stream(seed, Purpose::EntryNode, 0, 0))?;
            topo.save(&out)?;
            println!("{} nodes, {} edges, entry {:?}", topo.node_count(), topo.edge_count(), topo.entry_nodes());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
