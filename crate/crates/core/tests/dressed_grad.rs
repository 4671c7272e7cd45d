mod common;

use common::dense;
use proptest::prelude::*;
use qtl_core::autonet::{cross_entropy, cross_entropy_grad, softmax};
use qtl_core::dressed::{dqn_param_count, DressedQuantumNet};
use qtl_core::vqc::VqcConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn features(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn loss(net: &DressedQuantumNet, x: &[f64], label: usize) -> f64 {
    cross_entropy(&net.predict(x).unwrap(), label).unwrap()
}

// Relative error with an absolute floor for near-zero derivatives.
fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-5 * analytic.abs().max(numeric.abs()).max(1e-3)
}

#[test]
fn stages_match_hand_composition() {
    let net = DressedQuantumNet::new(16, VqcConfig::standard(), 2, 11).unwrap();
    let x = features(16, 11);
    let (probs, tape) = net.forward(&x).unwrap();

    let pre: Vec<f64> = (0..5)
        .map(|q| {
            let z: f64 = (0..16).map(|i| net.pre_weights[q * 16 + i] * x[i]).sum::<f64>() + net.pre_bias[q];
            z.tanh()
        })
        .collect();
    let c = &net.vqc;
    let z = dense::vqc_expectations(5, &c.ranges, c.hadamard_prefix, c.input_scale, &pre, net.vqc_weights.as_slice());
    let logits: Vec<f64> = (0..2)
        .map(|k| (0..5).map(|q| net.post_weights[k * 5 + q] * z[q]).sum::<f64>() + net.post_bias[k])
        .collect();
    let want = softmax(&logits);

    for (a, b) in tape.pre_activations().iter().zip(&pre) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in tape.readout().iter().zip(&z) {
        assert!((a - b).abs() < 1e-10);
    }
    for (a, b) in probs.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn pre_activations_strictly_inside_unit_interval() {
    for seed in 0..10 {
        let net = DressedQuantumNet::new(32, VqcConfig::standard(), 2, seed).unwrap();
        let x: Vec<f64> = features(32, seed + 100).iter().map(|v| v * 5.0).collect();
        let (_, tape) = net.forward(&x).unwrap();
        assert!(tape.pre_activations().iter().all(|v| v.abs() < 1.0));
    }
}

fn check_finite_differences(n_ip: usize, seed: u64) {
    let mut net = DressedQuantumNet::new(n_ip, VqcConfig::standard(), 2, seed).unwrap();
    let x = features(n_ip, seed ^ 0xabc);
    let label = (seed % 2) as usize;
    let (p, tape) = net.forward(&x).unwrap();
    let grads = net.backward(&tape, &cross_entropy_grad(&p, label)).unwrap();
    let h = 1e-6;

    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    for (ti, ga) in analytic.iter().enumerate() {
        for j in 0..ga.len() {
            let orig = net.tensors()[ti][j];
            net.tensors_mut()[ti][j] = orig + h;
            let up = loss(&net, &x, label);
            net.tensors_mut()[ti][j] = orig - h;
            let down = loss(&net, &x, label);
            net.tensors_mut()[ti][j] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!(close(ga[j], fd), "n_ip {n_ip} tensor {ti} index {j}: {} vs {fd}", ga[j]);
        }
    }

    let mut xm = x.clone();
    for i in 0..n_ip {
        xm[i] = x[i] + h;
        let up = loss(&net, &xm, label);
        xm[i] = x[i] - h;
        let down = loss(&net, &xm, label);
        xm[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        assert!(close(grads.input[i], fd), "n_ip {n_ip} input {i}: {} vs {fd}", grads.input[i]);
    }
}

#[test]
fn finite_differences_width_64() {
    check_finite_differences(64, 11);
}

#[test]
fn finite_differences_width_128() {
    check_finite_differences(128, 11);
}

#[test]
fn finite_differences_width_2048() {
    check_finite_differences(2048, 11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn constructed_count_matches_formula(
        n_ip in 1usize..300,
        n_q in 2usize..7,
        n_d in 1usize..5,
        n_c in 1usize..6,
        seed in 0u64..1000,
    ) {
        let net = DressedQuantumNet::new(n_ip, VqcConfig::new(n_q, n_d).unwrap(), n_c, seed).unwrap();
        prop_assert_eq!(net.param_count(), dqn_param_count(n_ip, n_q, n_d, n_c));
        let p = net.predict(&vec![0.1; n_ip]).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
