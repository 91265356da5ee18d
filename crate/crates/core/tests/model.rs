use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use west_core::autodiff::{finite_diff_check, AutodiffError};
use west_core::geom::WeightedAdjacency;
use west_core::graph::{renormalize, RenormalizedAdjacency};
use west_core::model::{
    forward, forward_batch, gcn_encode, init_params, lstm_decode, EncoderMode, HeadMode,
    ModelError, WestConfig,
};
use west_core::Tensor;

fn path_graph(n: usize) -> RenormalizedAdjacency {
    let m = Tensor::from_fn(n, n, |i, j| if i.abs_diff(j) <= 1 { 1.0 } else { 0.0 });
    renormalize(&WeightedAdjacency::new(m).unwrap()).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> RenormalizedAdjacency {
    let mut m = Tensor::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                let v = rng.gen_range(0.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    renormalize(&WeightedAdjacency::new(m).unwrap()).unwrap()
}

fn block_config(n: usize, u_in: usize, k: usize) -> WestConfig {
    let mut c = WestConfig::new(n, u_in, 2, k);
    c.encoder_mode = EncoderMode::Block;
    c.gcn_hidden = 16;
    c.lstm_hidden = 8;
    c
}

fn features(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Tensor {
    Tensor::from_fn(n, c, |_, _| rng.gen_range(0.1..1.0))
}

fn zero_rows(z: &Tensor, rows: &[usize]) -> Tensor {
    Tensor::from_fn(z.rows(), z.cols(), |i, j| if rows.contains(&i) { 0.0 } else { z[(i, j)] })
}

fn row_change(a: &Tensor, b: &Tensor, i: usize) -> f64 {
    a.row(i).iter().zip(b.row(i)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn one_layer_sees_only_first_neighbours() {
    let a = path_graph(5);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = block_config(5, 3, 1);
        let params = init_params(&cfg, seed).unwrap();
        let z = features(&mut rng, 5, 3);
        let base = gcn_encode(&z, &a, &params, 1).unwrap();
        for node in 0..5usize {
            let far: Vec<usize> = (0..5usize).filter(|&j| j.abs_diff(node) >= 2).collect();
            let probe = gcn_encode(&zero_rows(&z, &far), &a, &params, 1).unwrap();
            assert!(row_change(&base, &probe, node) < 1e-12);
        }
    }
}

#[test]
fn two_layers_reach_exactly_two_hops() {
    let a = path_graph(5);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = block_config(5, 3, 2);
        let params = init_params(&cfg, seed).unwrap();
        let z = features(&mut rng, 5, 3);
        let base = gcn_encode(&z, &a, &params, 2).unwrap();
        let beyond = gcn_encode(&zero_rows(&z, &[3, 4]), &a, &params, 2).unwrap();
        assert!(row_change(&base, &beyond, 0) < 1e-12);
        let two_hop = gcn_encode(&zero_rows(&z, &[2]), &a, &params, 2).unwrap();
        assert!(row_change(&base, &two_hop, 0) > 1e-6, "seed {seed}");
    }
}

#[test]
fn encoder_is_permutation_equivariant_and_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let n = 6;
    let cfg = block_config(n, 4, 3);
    let params = init_params(&cfg, 41).unwrap();
    for _ in 0..10 {
        let a = random_graph(&mut rng, n);
        let z = Tensor::from_fn(n, 4, |_, _| rng.gen_range(-1.0..1.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let out = gcn_encode(&z, &a, &params, 3).unwrap();
        assert!(out.data().iter().all(|&v| v >= 0.0));
        let pz = Tensor::from_fn(n, 4, |i, j| z[(perm[i], j)]);
        let pout = gcn_encode(&pz, &a.permuted(&perm), &params, 3).unwrap();
        for i in 0..n {
            for j in 0..out.cols() {
                assert!((pout[(i, j)] - out[(perm[i], j)]).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #[test]
    fn lstm_state_stays_open_interval(
        seed in any::<u64>(),
        steps in 1usize..6,
        scale in 0.1..100.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = WestConfig::new(3, steps, 1, 1);
        cfg.gcn_hidden = 4;
        cfg.lstm_hidden = 5;
        let params = init_params(&cfg, seed).unwrap();
        let seq: Vec<Tensor> = (0..steps)
            .map(|_| Tensor::from_fn(3, 4, |_, _| rng.gen_range(-scale..scale)))
            .collect();
        let h = lstm_decode(&seq, &params, &cfg).unwrap();
        prop_assert!(h.data().iter().all(|v| v.abs() < 1.0));
    }
}

fn autodiff_err(e: ModelError) -> AutodiffError {
    match e {
        ModelError::Autodiff(a) => a,
        other => panic!("{other}"),
    }
}

fn gradient_error(cfg: &WestConfig, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_graph(&mut rng, cfg.n_regions);
    let xs: Vec<Tensor> = (0..2).map(|_| features(&mut rng, cfg.n_regions, cfg.u_in)).collect();
    let y = Tensor::from_fn(cfg.n_regions * 2, cfg.u_out, |_, _| rng.gen_range(0.0..1.0));
    let mut params = init_params(cfg, seed).unwrap();
    for p in params.as_mut_slice() {
        if p.name.starts_with("lstm_b") || p.name == "dense_b" {
            p.value = Tensor::from_fn(p.value.rows(), p.value.cols(), |_, _| rng.gen_range(-0.5..0.5));
        }
    }
    let refs: Vec<&Tensor> = xs.iter().collect();
    let report = finite_diff_check(
        |tape, vars| {
            let out = forward_batch(tape, vars, cfg, &a, &refs).map_err(autodiff_err)?;
            let target = tape.constant(y.clone());
            tape.mse_loss(out, target)
        },
        params.as_mut_slice(),
        1e-6,
    )
    .unwrap();
    report.max_rel_error
}

#[test]
fn full_forward_gradients_match_finite_differences() {
    let mut cfg = WestConfig::new(4, 3, 3, 2);
    cfg.gcn_hidden = 8;
    cfg.lstm_hidden = 8;
    let err = gradient_error(&cfg, 7);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradients_hold_in_every_mode() {
    for (encoder, head) in [
        (EncoderMode::Block, HeadMode::PerNode),
        (EncoderMode::PerStep, HeadMode::Global),
        (EncoderMode::Block, HeadMode::Global),
    ] {
        let mut cfg = WestConfig::new(3, 3, 2, 2);
        cfg.gcn_hidden = 4;
        cfg.lstm_hidden = 5;
        cfg.encoder_mode = encoder;
        cfg.head = head;
        let err = gradient_error(&cfg, 8);
        assert!(err < 1e-4, "{encoder:?}/{head:?}: {err}");
    }
}

#[test]
fn forward_is_deterministic_per_seed() {
    let cfg = WestConfig::new(4, 6, 6, 2);
    let a = path_graph(4);
    let x = Tensor::from_fn(4, 6, |i, j| ((i * 7 + j) % 5) as f64 / 5.0);
    let p1 = init_params(&cfg, 3).unwrap();
    let p2 = init_params(&cfg, 3).unwrap();
    let y1 = forward(&x, &a, &p1, &cfg).unwrap();
    let y2 = forward(&x, &a, &p2, &cfg).unwrap();
    assert_eq!(y1.shape(), (4, 6));
    assert!(y1.data().iter().zip(y2.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let y3 = forward(&x, &a, &init_params(&cfg, 4).unwrap(), &cfg).unwrap();
    assert_ne!(y1, y3);
}
