mod common;

use common::dense;
use proptest::prelude::*;
use qtl_core::vqc::{
    entangling_layers, vqc_forward, vqc_gradients, vqc_param_count, VqcConfig, VqcWeights,
};
use qtl_core::qsim::StateVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_features(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn oracle(c: &VqcConfig, w: &VqcWeights, x: &[f64]) -> Vec<f64> {
    dense::vqc_expectations(c.n_qubits, &c.ranges, c.hadamard_prefix, c.input_scale, x, w.as_slice())
}

#[test]
fn forward_matches_dense_chain_small_registers() {
    for seed in 0..12 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=3);
        let layers = rng.random_range(1..=3);
        let mut c = VqcConfig::new(n, layers).unwrap();
        c.hadamard_prefix = rng.random_bool(0.5);
        let w = VqcWeights::random(&c, seed);
        let x = random_features(n, &mut rng);
        let got = vqc_forward(&c, &w, &x).unwrap();
        for (a, b) in got.iter().zip(oracle(&c, &w, &x)) {
            assert!((a - b).abs() < 1e-10, "seed {seed}");
        }
    }
}

#[test]
fn five_qubit_three_layer_seed_42_matches_dense_oracle() {
    let c = VqcConfig::standard();
    let w = VqcWeights::random(&c, 42);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let x = random_features(5, &mut rng);
    let got = vqc_forward(&c, &w, &x).unwrap();
    let want = oracle(&c, &w, &x);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{got:?} vs {want:?}");
    }
}

#[test]
fn two_qubit_ring_after_flip() {
    let mut c = VqcConfig::new(2, 1).unwrap();
    c.hadamard_prefix = false;
    let mut w = VqcWeights::zeros(&c);
    w.set(0, 0, [0.0, std::f64::consts::PI, 0.0]);
    let s = entangling_layers(&c, &w, StateVector::zero(2).unwrap()).unwrap();
    let psi = dense::apply(
        &dense::vqc_unitary(2, &c.ranges, false, c.input_scale, &[0.0, 0.0], w.as_slice()),
        &dense::zero_state(2),
    );
    for (a, b) in s.amplitudes().iter().zip(&psi) {
        assert!((a - b).norm() < 1e-12);
    }
    assert!((psi[0b01].norm_sqr() - 1.0).abs() < 1e-12);
}

/// Central finite differences of `upstream · vqc_forward` w.r.t. every angle and feature.
fn finite_differences(c: &VqcConfig, w: &VqcWeights, x: &[f64], up: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = 1e-5;
    let f = |w: &VqcWeights, x: &[f64]| -> f64 {
        vqc_forward(c, w, x).unwrap().iter().zip(up).map(|(a, b)| a * b).sum()
    };
    let gw = (0..w.len())
        .map(|i| {
            let (mut p, mut m) = (w.clone(), w.clone());
            p.as_mut_slice()[i] += h;
            m.as_mut_slice()[i] -= h;
            (f(&p, x) - f(&m, x)) / (2.0 * h)
        })
        .collect();
    let gx = (0..x.len())
        .map(|i| {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[i] += h;
            m[i] -= h;
            (f(w, &p) - f(w, &m)) / (2.0 * h)
        })
        .collect();
    (gw, gx)
}

#[test]
fn parameter_shift_matches_finite_differences() {
    let c = VqcConfig::standard();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let w = VqcWeights::random(&c, seed);
        let x = random_features(5, &mut rng);
        let up: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = vqc_gradients(&c, &w, &x, &up).unwrap();
        let (gw, gx) = finite_differences(&c, &w, &x, &up);
        for (a, b) in g.weights.iter().zip(&gw).chain(g.features.iter().zip(&gx)) {
            assert!((a - b).abs() < 1e-6, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn shape_mismatches_rejected() {
    let c = VqcConfig::standard();
    let w = VqcWeights::zeros(&VqcConfig::new(4, 3).unwrap());
    assert!(vqc_forward(&c, &w, &[0.0; 5]).is_err());
    let w = VqcWeights::zeros(&c);
    assert!(vqc_gradients(&c, &w, &[0.0; 5], &[1.0; 4]).is_err());
    assert!(VqcWeights::from_vec(3, 5, vec![0.0; 44]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_are_bounded(seed in 0u64..100_000, n in 2usize..6, layers in 1usize..4) {
        let c = VqcConfig::new(n, layers).unwrap();
        let w = VqcWeights::random(&c, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        for z in vqc_forward(&c, &w, &x).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&z));
        }
    }

    #[test]
    fn count_matches_weight_tensor(n in 2usize..=12, layers in 1usize..8) {
        let c = VqcConfig::new(n, layers).unwrap();
        prop_assert_eq!(vqc_param_count(n, layers), VqcWeights::zeros(&c).len());
    }
}
