use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use netdef::grad::{Adam, Graph};
use netdef::policy::{ActorCritic, EntityPolicyConfig};
use netdef::ppo::{compute_gae, normalize_advantages, ppo_loss, ppo_update, PpoConfig};
use netdef::rng::{stream, Purpose};
use netdef::sim::{BlueAction, BlueActionKind};
use netdef_bench::{entity_policy, envs, observations, rollout};

fn sim_step(c: &mut Criterion) {
    let mut env = envs(40, 1).remove(0);
    let action = BlueAction {
        kind: BlueActionKind::RestoreNode,
        target: 0,
    };
    c.bench_function("sim_step_40_nodes", |b| {
        b.iter(|| {
            if env.step(action).unwrap().done {
                env.reset().unwrap();
            }
        })
    });
}

fn gae(c: &mut Criterion) {
    let n = 16 * 128;
    let rewards: Vec<f64> = (0..n).map(|i| (i % 7) as f64 / 7.0).collect();
    let values: Vec<f64> = (0..n).map(|i| (i % 5) as f64 / 5.0).collect();
    let dones: Vec<bool> = (0..n).map(|i| i % 1600 == 1599).collect();
    let boot = vec![0.5; 16];
    c.bench_function("gae_16x128", |b| b.iter(|| compute_gae(&rewards, &values, &dones, &boot, 16, 0.99, 0.95)));
}

fn entity_forward(c: &mut Criterion) {
    let policy = entity_policy(EntityPolicyConfig::default());
    for nodes in [10, 40] {
        let obs = observations(nodes, 16);
        let batch: Vec<&[Vec<f64>]> = obs.iter().map(|o| o.nodes()).collect();
        c.bench_function(&format!("entity_forward_16x{nodes}"), |b| b.iter(|| policy.forward(&batch).unwrap()));
    }
}

fn entity_backward(c: &mut Criterion) {
    let policy = entity_policy(EntityPolicyConfig::default());
    let buf = rollout(&policy, 10, 16, 32);
    let cfg = PpoConfig::default();
    let idx: Vec<usize> = (0..512).collect();
    let obs: Vec<_> = idx.iter().map(|&i| &buf.observations[i]).collect();
    let actions: Vec<_> = idx.iter().map(|&i| buf.actions[i]).collect();
    let old: Vec<f64> = idx.iter().map(|&i| buf.log_probs[i]).collect();
    let adv = normalize_advantages(&idx.iter().map(|&i| buf.advantages[i]).collect::<Vec<_>>());
    let ret: Vec<f64> = idx.iter().map(|&i| buf.returns[i]).collect();
    c.bench_function("entity_ppo_loss_backward_512x10", |b| {
        b.iter_batched(
            || policy.clone(),
            |mut p| {
                let mut g = Graph::new();
                let ev = p.evaluate(&mut g, &obs, &actions).unwrap();
                let loss = ppo_loss(&mut g, &ev, &old, &adv, &ret, &cfg).unwrap();
                g.backward(loss.total, p.params_mut()).unwrap();
                p
            },
            BatchSize::LargeInput,
        )
    });
}

fn ppo_iteration(c: &mut Criterion) {
    let policy = entity_policy(EntityPolicyConfig::default());
    let buf = rollout(&policy, 10, 16, 128);
    let cfg = PpoConfig {
        epochs: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("ppo");
    group.sample_size(10);
    group.bench_function("update_epoch_2048x10", |b| {
        b.iter_batched(
            || (policy.clone(), Adam::new(policy.params())),
            |(mut p, mut adam)| {
                let mut rng = stream(0, Purpose::Minibatch, 0, 0);
                ppo_update(&mut p, &mut adam, &buf, &cfg, 0.005, &mut rng).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, sim_step, gae, entity_forward, entity_backward, ppo_iteration);
criterion_main!(benches);
