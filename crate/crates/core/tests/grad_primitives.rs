//! Every primitive's adjoint against central finite differences (64-bit).

use std::rc::Rc;

use netdef::grad::check::finite_difference;
use netdef::grad::{AttentionMask, Graph, ParamStore, Segments, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-6;
const FLOOR: f64 = 1e-8;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Builds a store of random inputs, runs `build` to get an output, reduces it
/// with a fixed random projection so every output element matters, and
/// checks the gradient.
fn check(seed: u64, shapes: &[&[usize]], build: impl Fn(&mut Graph<f64>, &[Var]) -> Var) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let ids: Vec<_> = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| store.add(&format!("x{i}"), random_tensor(&mut rng, s), true).unwrap())
        .collect();
    let proj_seed = rng.random::<u64>();
    let loss_of = |store: &ParamStore<f64>| -> (Graph<f64>, Var) {
        let mut g = Graph::new();
        let vars: Vec<Var> = ids.iter().map(|&id| g.param(store, id)).collect();
        let out = build(&mut g, &vars);
        let shape = g.value(out).shape().to_vec();
        let mut prng = ChaCha8Rng::seed_from_u64(proj_seed);
        let w = g.constant(random_tensor(&mut prng, &shape));
        let prod = g.mul(out, w).unwrap();
        let loss = g.sum(prod);
        (g, loss)
    };
    store.zero_grad();
    let (g, loss) = loss_of(&store);
    g.backward(loss, &mut store).unwrap();
    let report = finite_difference(&mut store, H, |s| {
        let (g, l) = loss_of(s);
        g.value(l).item().unwrap()
    });
    let worst = report.max_relative_error(FLOOR);
    assert!(
        worst <= TOL,
        "max relative error {worst:e} at {:?}",
        report.worst(FLOOR)
    );
}

#[test]
fn matmul_adjoint() {
    check(1, &[&[3, 4], &[4, 5]], |g, v| g.matmul(v[0], v[1]).unwrap());
}

#[test]
fn affine_adjoint() {
    check(2, &[&[3, 4], &[4, 2], &[1, 2]], |g, v| g.affine(v[0], v[1], v[2]).unwrap());
}

#[test]
fn elementwise_adjoints() {
    check(3, &[&[2, 3], &[2, 3]], |g, v| g.add(v[0], v[1]).unwrap());
    check(4, &[&[2, 3], &[2, 3]], |g, v| g.sub(v[0], v[1]).unwrap());
    check(5, &[&[2, 3], &[2, 3]], |g, v| g.mul(v[0], v[1]).unwrap());
    check(6, &[&[2, 3], &[2, 3]], |g, v| g.minimum(v[0], v[1]).unwrap());
    check(7, &[&[2, 3]], |g, v| g.scale(v[0], -1.7));
    check(8, &[&[2, 3]], |g, v| g.relu(v[0]));
    check(9, &[&[2, 3]], |g, v| g.tanh(v[0]));
    check(10, &[&[2, 3]], |g, v| g.exp(v[0]));
    check(11, &[&[2, 3]], |g, v| g.square(v[0]));
    check(12, &[&[3, 3]], |g, v| g.clamp(v[0], -0.5, 0.5));
}

#[test]
fn layer_norm_adjoint() {
    check(13, &[&[4, 6], &[1, 6], &[1, 6]], |g, v| g.layer_norm(v[0], v[1], v[2]).unwrap());
}

#[test]
fn softmax_adjoints() {
    check(14, &[&[3, 4]], |g, v| g.softmax(v[0]).unwrap());
    let seg = Rc::new(Segments::from_lengths([2, 5, 1, 3]));
    check(15, &[&[11, 1]], move |g, v| g.segment_log_softmax(v[0], seg.clone()).unwrap());
}

#[test]
fn attention_adjoint() {
    let mask = Rc::new(AttentionMask::block_diagonal(Segments::from_lengths([3, 5, 1])).unwrap());
    check(16, &[&[9, 4], &[9, 4], &[9, 4]], move |g, v| {
        g.attention(v[0], v[1], v[2], mask.clone(), 2).unwrap()
    });
    let mut allowed = vec![true; 16];
    allowed[1] = false;
    allowed[6] = false;
    allowed[15] = false;
    let dense = Rc::new(AttentionMask::dense(4, allowed).unwrap());
    check(17, &[&[4, 2], &[4, 2], &[4, 2]], move |g, v| {
        g.attention(v[0], v[1], v[2], dense.clone(), 1).unwrap()
    });
}

#[test]
fn gather_pick_dot_sum_adjoints() {
    let picks = Rc::new(vec![(1, 0), (0, 2), (0, 2), (1, 1), (0, 0)]);
    check(18, &[&[3, 4], &[2, 4]], move |g, v| g.gather_rows(&[v[0], v[1]], picks.clone()).unwrap());
    let idx = Rc::new(vec![5, 0, 5, 3]);
    check(19, &[&[2, 3]], move |g, v| g.pick(v[0], idx.clone()).unwrap());
    let owner = Rc::new(vec![0, 0, 1, 1, 1]);
    check(20, &[&[2, 3], &[5, 3]], move |g, v| g.segment_row_dot(v[0], v[1], owner.clone()).unwrap());
    let seg = Rc::new(Segments::from_lengths([2, 3, 1]));
    check(21, &[&[6, 1]], move |g, v| g.segment_sum(v[0], seg.clone()).unwrap());
    check(22, &[&[2, 3]], |g, v| g.sum(v[0]));
    check(23, &[&[2, 3]], |g, v| g.mean(v[0]));
}

#[test]
fn accumulation_is_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut store = ParamStore::new();
    let w = store.add("w", random_tensor(&mut rng, &[3, 3]), true).unwrap();
    let x = random_tensor(&mut rng, &[2, 3]);
    let loss_a = |g: &mut Graph<f64>, s: &ParamStore<f64>| {
        let wv = g.param(s, w);
        let xv = g.constant(x.clone());
        let y = g.matmul(xv, wv).unwrap();
        let t = g.tanh(y);
        g.sum(t)
    };
    let loss_b = |g: &mut Graph<f64>, s: &ParamStore<f64>| {
        let wv = g.param(s, w);
        let sq = g.square(wv);
        g.mean(sq)
    };
    let mut g = Graph::new();
    let a = loss_a(&mut g, &store);
    let b = loss_b(&mut g, &store);
    let total = g.add(a, b).unwrap();
    g.backward(total, &mut store).unwrap();
    let joint = store.get(w).gradient.clone();

    store.zero_grad();
    let mut g = Graph::new();
    let a = loss_a(&mut g, &store);
    g.backward(a, &mut store).unwrap();
    let mut g = Graph::new();
    let b = loss_b(&mut g, &store);
    g.backward(b, &mut store).unwrap();
    for (x, y) in joint.data().iter().zip(store.get(w).gradient.data()) {
        assert!((x - y).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masked_tokens_do_not_leak(seed in any::<u64>(), change in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = Segments::from_lengths([3, 4]);
        let mask = Rc::new(AttentionMask::block_diagonal(blocks).unwrap());
        let q = random_tensor(&mut rng, &[7, 4]);
        let k = random_tensor(&mut rng, &[7, 4]);
        let v = random_tensor(&mut rng, &[7, 4]);
        let run = |q: &Tensor<f64>, k: &Tensor<f64>, v: &Tensor<f64>| {
            let mut g = Graph::new();
            let (qv, kv, vv) = (g.constant(q.clone()), g.constant(k.clone()), g.constant(v.clone()));
            let o = g.attention(qv, kv, vv, mask.clone(), 2).unwrap();
            g.value(o).data()[..12].to_vec()
        };
        let before = run(&q, &k, &v);
        let (mut k2, mut v2, mut q2) = (k.clone(), v.clone(), q.clone());
        for i in 12..28 {
            k2.data_mut()[i] += change;
            v2.data_mut()[i] -= change;
            q2.data_mut()[i] *= change;
        }
        prop_assert_eq!(before, run(&q2, &k2, &v2));
    }
}
