use std::path::Path;
use std::process::{Command, Output};

fn netdef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netdef"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn tiny_config(dir: &Path, family: &str) -> String {
    let path = dir.join(format!("{family}.toml"));
    std::fs::write(
        &path,
        format!(
            r#"
seed = 1
[env]
mode = "random"
nodes = 5
[policy]
family = "{family}"
[policy.entity]
d_model = 8
n_heads = 1
n_layers = 1
d_ff = 8
[ppo]
total_steps = 200
num_envs = 2
rollout_len = 50
epochs = 1
minibatches = 2
eval_interval = 100
checkpoint_interval = 0
"#
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn train_eval_xeval_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let runs = d.join("runs");
    for family in ["entity", "mlp"] {
        let cfg = tiny_config(d, family);
        let out = runs.join(format!("{family}_random_5_seed3"));
        let o = netdef(&["train", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("final.json").exists());
        assert!(std::fs::read_to_string(out.join("config.toml")).unwrap().contains("seed = 3"));
    }
    let entity = runs.join("entity_random_5_seed3/final.json");
    let mlp = runs.join("mlp_random_5_seed3/final.json");

    let csv = d.join("eval.csv");
    let o = netdef(&["eval", "--checkpoint", entity.to_str().unwrap(), "--nodes", "7", "--episodes", "3", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"mean\""));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);

    let o = netdef(&["eval", "--checkpoint", mlp.to_str().unwrap(), "--nodes", "7", "--episodes", "3"]);
    assert_eq!(o.status.code(), Some(4));

    let xeval = runs.join("xeval");
    let o = netdef(&[
        "xeval",
        "--checkpoints",
        entity.to_str().unwrap(),
        "--sizes",
        "5,10",
        "--episodes",
        "2",
        "--out",
        xeval.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("eval_rand_5_on_10"));

    let plots = d.join("plots");
    let o = netdef(&["plot", "--runs", runs.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["training_5.svg", "training_5.png", "boxplot_eval_10.svg", "boxplot_eval_5.png"] {
        assert!(plots.join(f).exists(), "{f}");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[env]\nmode = \"sideways\"\nnodes = 5\n[policy]\nfamily = \"entity\"\n").unwrap();
    assert_eq!(netdef(&["train", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(netdef(&["train"]).status.code(), Some(2));
}

#[test]
fn gen_net_writes_topology() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("net.json");
    let o = netdef(&["gen-net", "--nodes", "12", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let topo = netdef::Topology::load(&out).unwrap();
    assert_eq!(topo.node_count(), 12);
    assert!(topo.is_connected());
    assert_eq!(topo.entry_nodes().len(), 1);
}
