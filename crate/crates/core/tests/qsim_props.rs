mod common;

use common::dense;
use num_complex::Complex64;
use proptest::prelude::*;
use qtl_core::qsim::{Gate1Q, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Op {
    One(usize, &'static str, f64),
    Cnot(usize, usize),
}

fn random_ops(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Op> {
    (0..count)
        .map(|_| {
            if n > 1 && rng.random_bool(0.3) {
                let c = rng.random_range(0..n);
                let mut t = rng.random_range(0..n - 1);
                if t >= c {
                    t += 1;
                }
                Op::Cnot(c, t)
            } else {
                let kind = ["rx", "ry", "rz", "h"][rng.random_range(0..4)];
                Op::One(rng.random_range(0..n), kind, rng.random_range(-6.0..6.0))
            }
        })
        .collect()
}

fn gate(kind: &str, t: f64) -> Gate1Q {
    match kind {
        "rx" => Gate1Q::rx(t),
        "ry" => Gate1Q::ry(t),
        "rz" => Gate1Q::rz(t),
        _ => Gate1Q::hadamard(),
    }
}

fn dense_gate(kind: &str, t: f64) -> dense::Mat {
    match kind {
        "rx" => dense::rx(t),
        "ry" => dense::ry(t),
        "rz" => dense::rz(t),
        _ => dense::h(),
    }
}

fn run(n: usize, ops: &[Op]) -> StateVector {
    let mut s = StateVector::zero(n).unwrap();
    for op in ops {
        match *op {
            Op::One(q, k, t) => s.apply_1q(q, &gate(k, t)).unwrap(),
            Op::Cnot(c, t) => s.apply_cnot(c, t).unwrap(),
        }
    }
    s
}

fn run_dense(n: usize, ops: &[Op]) -> Vec<Complex64> {
    let mut v = dense::zero_state(n);
    for op in ops {
        let m = match *op {
            Op::One(q, k, t) => dense::lift(n, q, &dense_gate(k, t)),
            Op::Cnot(c, t) => dense::cnot(n, c, t),
        };
        v = dense::apply(&m, &v);
    }
    v
}

#[test]
fn norm_preserved_over_random_sequences() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=8);
        let s = run(n, &random_ops(n, 100, &mut rng));
        assert!((s.norm_sqr().sqrt() - 1.0).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn matches_kronecker_oracle() {
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = rng.random_range(1..=3);
        let ops = random_ops(n, 25, &mut rng);
        let fast = run(n, &ops);
        let slow = run_dense(n, &ops);
        for (a, b) in fast.amplitudes().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-10, "seed {seed}: {a} vs {b}");
        }
        for q in 0..n {
            let z = fast.expect_z(q).unwrap();
            assert!((z - dense::expect_z(n, q, &slow)).abs() < 1e-10);
        }
    }
}

#[test]
fn rx_on_second_qubit_matches_dense_product() {
    let mut s = StateVector::zero(2).unwrap();
    s.apply_1q(1, &Gate1Q::rx(0.4)).unwrap();
    let want = dense::apply(&dense::lift(2, 1, &dense::rx(0.4)), &dense::zero_state(2));
    for (a, b) in s.amplitudes().iter().zip(&want) {
        assert!((a - b).norm() < 1e-14);
    }
}

#[test]
fn z_readout_is_qubit_local_for_product_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4;
    let mut s = StateVector::zero(n).unwrap();
    for q in 0..n {
        s.apply_1q(q, &Gate1Q::ry(rng.random_range(-3.0..3.0))).unwrap();
    }
    let before: Vec<f64> = (0..n).map(|q| s.expect_z(q).unwrap()).collect();
    for j in 0..n {
        let mut t = s.clone();
        t.apply_1q(j, &Gate1Q::rx(std::f64::consts::PI)).unwrap();
        for q in (0..n).filter(|&q| q != j) {
            assert!((t.expect_z(q).unwrap() - before[q]).abs() < 1e-12);
        }
        assert!((t.expect_z(j).unwrap() + before[j]).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn expectations_bounded(seed in 0u64..10_000, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = run(n, &random_ops(n, 40, &mut rng));
        for q in 0..n {
            let z = s.expect_z(q).unwrap();
            prop_assert!((-1.0..=1.0).contains(&z));
        }
    }

    #[test]
    fn rot_gates_are_unitary(phi in -10.0f64..10.0, theta in -10.0f64..10.0, omega in -10.0f64..10.0) {
        prop_assert!(Gate1Q::rot(phi, theta, omega).unitarity_error() < 1e-12);
    }
}
