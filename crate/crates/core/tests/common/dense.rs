//! Dense-matrix reference simulator for small registers. Gates are built as full
//! 2^n x 2^n matrices via Kronecker products, independently of `qsim`.
#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Mat = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rx(t: f64) -> Mat {
    let (s, co) = ((t / 2.0).sin(), (t / 2.0).cos());
    vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
}

pub fn ry(t: f64) -> Mat {
    let (s, co) = ((t / 2.0).sin(), (t / 2.0).cos());
    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
}

pub fn rz(t: f64) -> Mat {
    vec![
        vec![C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), C::from_polar(1.0, t / 2.0)],
    ]
}

pub fn h() -> Mat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![vec![c(r, 0.0), c(r, 0.0)], vec![c(r, 0.0), c(-r, 0.0)]]
}

pub fn eye(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for p in 0..rb {
                for q in 0..cb {
                    out[i * rb + p][j * cb + q] = a[i][j] * b[p][q];
                }
            }
        }
    }
    out
}

/// Full-register operator with `g` on `qubit` (qubit 0 leftmost in the product).
pub fn lift(n: usize, qubit: usize, g: &Mat) -> Mat {
    let id = eye(2);
    let mut out = vec![vec![c(1.0, 0.0)]];
    for q in 0..n {
        out = kron(&out, if q == qubit { g } else { &id });
    }
    out
}

/// CNOT as |0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t.
pub fn cnot(n: usize, control: usize, target: usize) -> Mat {
    let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    let x = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
    let a = lift(n, control, &p0);
    let id = eye(2);
    let mut b = vec![vec![c(1.0, 0.0)]];
    for q in 0..n {
        let f = if q == control {
            &p1
        } else if q == target {
            &x
        } else {
            &id
        };
        b = kron(&b, f);
    }
    a.iter()
        .zip(&b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn apply(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn zero_state(n: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

/// ⟨ψ|Z_q|ψ⟩ via the full operator.
pub fn expect_z(n: usize, q: usize, v: &[C]) -> f64 {
    let z = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]];
    let zv = apply(&lift(n, q, &z), v);
    v.iter().zip(&zv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Unitary of the full circuit: optional H wall, RY(scale·x) embedding, then
/// layers of RZ(ω)RY(θ)RZ(φ) per qubit followed by a CNOT ring.
pub fn vqc_unitary(
    n: usize,
    ranges: &[usize],
    hadamard: bool,
    scale: f64,
    features: &[f64],
    angles: &[f64],
) -> Mat {
    let mut u = eye(1 << n);
    let mut push = |g: Mat| u = matmul(&g, &u);
    for q in 0..n {
        if hadamard {
            push(lift(n, q, &h()));
        }
        push(lift(n, q, &ry(scale * features[q])));
    }
    for (l, &r) in ranges.iter().enumerate() {
        for q in 0..n {
            let a = &angles[(l * n + q) * 3..(l * n + q) * 3 + 3];
            push(lift(n, q, &rz(a[0])));
            push(lift(n, q, &ry(a[1])));
            push(lift(n, q, &rz(a[2])));
        }
        for q in 0..n {
            push(cnot(n, q, (q + r) % n));
        }
    }
    u
}

pub fn vqc_expectations(
    n: usize,
    ranges: &[usize],
    hadamard: bool,
    scale: f64,
    features: &[f64],
    angles: &[f64],
) -> Vec<f64> {
    let psi = apply(&vqc_unitary(n, ranges, hadamard, scale, features, angles), &zero_state(n));
    (0..n).map(|q| expect_z(n, q, &psi)).collect()
}
