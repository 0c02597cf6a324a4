//! Game-level properties checked against independent oracles.

use netdef::netgen::{generate_er_graph, select_entry_nodes, Topology};
use netdef::rng::{stream, Purpose};
use netdef::sim::{BlueAction, BlueActionKind, GameConfig, GameState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn network(n: usize, seed: u64) -> Topology {
    let t = generate_er_graph(n, 0.1, &mut stream(seed, Purpose::Topology, 0, 0)).unwrap();
    select_entry_nodes(t, 1, &mut stream(seed, Purpose::EntryNode, 0, 0)).unwrap()
}

/// Straightforward re-statement of the red dynamics for a zero-skill
/// attacker, where every basic attack succeeds with probability ½.
fn oracle_episode(adj: &[Vec<usize>], entry: &[usize], rng: &mut ChaCha8Rng) -> (usize, f64) {
    let n = adj.len();
    let mut comp = vec![false; n];
    let mut counter = 0;
    let mut total = 0.0;
    for _ in 0..100 {
        counter += 1;
        let surface: Vec<usize> = (0..n)
            .filter(|&i| !comp[i] && (entry.contains(&i) || adj[i].iter().any(|&j| comp[j])))
            .collect();
        if !surface.is_empty() {
            let t = surface[rng.random_range(0..surface.len())];
            if counter >= 3 {
                counter = 0;
                comp[t] = true;
            } else if rng.random_bool(0.5) {
                comp[t] = true;
            }
        }
        total += comp.iter().filter(|&&c| !c).count() as f64 / n as f64;
    }
    (comp.iter().filter(|&&c| c).count(), total)
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn zero_skill_red_matches_step_by_step_oracle() {
    let topo = network(20, 11);
    let adj = topo.neighbors();
    let entry: Vec<usize> = topo.entry_nodes().iter().copied().collect();
    let cfg = GameConfig {
        red_skill: 0.0,
        ..Default::default()
    };
    // floored node 0 after the first few steps: blue is effectively idle
    let idle = BlueAction {
        kind: BlueActionKind::ReduceVulnerability,
        target: 0,
    };
    let episodes = 3000;
    let (mut sim_c, mut sim_r, mut or_c, mut or_r) = (vec![], vec![], vec![], vec![]);
    let mut orng = ChaCha8Rng::seed_from_u64(99);
    for ep in 0..episodes {
        let mut rng = stream(5, Purpose::RedAgent, 0, ep);
        let mut s = GameState::reset(topo.clone(), &cfg, &mut rng);
        let mut total = 0.0;
        for _ in 0..100 {
            total += s.step(idle, &cfg, &mut rng).unwrap().reward;
        }
        sim_c.push(s.compromised_count() as f64);
        sim_r.push(total);
        let (c, r) = oracle_episode(&adj, &entry, &mut orng);
        or_c.push(c as f64);
        or_r.push(r);
    }
    for (a, b) in [(&sim_c, &or_c), (&sim_r, &or_r)] {
        let ((ma, sa), (mb, sb)) = (mean_and_se(a), mean_and_se(b));
        let tol = 4.0 * (sa * sa + sb * sb).sqrt();
        assert!((ma - mb).abs() <= tol, "simulator {ma} vs oracle {mb} (tol {tol})");
    }
}

#[test]
fn zero_day_once_per_interval() {
    let n = 400;
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    let topo = Topology::from_edges(n, edges, [0]).unwrap();
    let cfg = GameConfig::default();
    let mut rng = stream(0, Purpose::RedAgent, 0, 0);
    let mut s = GameState::reset(topo, &cfg, &mut rng);
    let fired: Vec<usize> = (0..300).filter(|_| s.red_turn(&cfg, &mut rng).zero_day).collect();
    assert_eq!(fired.len(), 100);
    assert!(fired.iter().enumerate().all(|(k, &t)| t == 3 * k + 2));
}

/// Restoring compromised nodes beats an idle defender on shared red seeds.
#[test]
fn restoring_dominates_idle_defender() {
    let cfg = GameConfig::default();
    let mut diffs = Vec::new();
    for ep in 0..400 {
        let topo = network(10, 1000 + ep);
        let play = |restore: bool| {
            let mut rng = stream(ep, Purpose::RedAgent, 0, 0);
            let mut s = GameState::reset(topo.clone(), &cfg, &mut rng);
            let mut total = 0.0;
            for _ in 0..100 {
                let target = s.nodes.iter().position(|n| n.compromised);
                let action = match (restore, target) {
                    (true, Some(t)) => BlueAction {
                        kind: BlueActionKind::RestoreNode,
                        target: t,
                    },
                    _ => BlueAction {
                        kind: BlueActionKind::ReduceVulnerability,
                        target: 0,
                    },
                };
                total += s.step(action, &cfg, &mut rng).unwrap().reward;
            }
            total
        };
        diffs.push(play(true) - play(false));
    }
    let (m, se) = mean_and_se(&diffs);
    assert!(m > 4.0 * se && m > 10.0, "mean paired gain {m} (se {se})");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vulnerability_bounds_and_compromise_deltas(
        seed in any::<u64>(),
        actions in prop::collection::vec((any::<bool>(), 0usize..10), 100),
    ) {
        let cfg = GameConfig::default();
        let mut rng = stream(seed, Purpose::RedAgent, 0, 0);
        let mut s = GameState::reset(network(10, seed), &cfg, &mut rng);
        for (restore, target) in actions {
            let kind = if restore { BlueActionKind::RestoreNode } else { BlueActionKind::ReduceVulnerability };
            let c0 = s.compromised_count();
            s.apply_blue_action(BlueAction { kind, target }, &cfg).unwrap();
            let c1 = s.compromised_count();
            prop_assert!(c1 <= c0 && c0 - c1 <= usize::from(restore));
            let red = s.red_turn(&cfg, &mut rng);
            let c2 = s.compromised_count();
            prop_assert!(c2 >= c1 && c2 - c1 == usize::from(red.compromised));
            for n in &s.nodes {
                prop_assert!(n.vulnerability >= cfg.vuln_floor && n.vulnerability <= 1.0);
            }
        }
    }
}
