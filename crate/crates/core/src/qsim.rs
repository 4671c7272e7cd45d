//! Exact statevector simulation for small registers.
//!
//! Qubit 0 is the most-significant bit of the amplitude index, so for a
//! three-qubit register the basis state |q0 q1 q2⟩ = |101⟩ lives at index 5.
//! Gates mutate a [`StateVector`] in place through `&mut self`; callers that
//! need the previous state clone it first.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state with the given amplitude index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!(
                "basis index {index} for {n_qubits} qubits (dimension {dim})"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The vector must have power-of-two length and unit norm (1e-9).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::Shape(format!(
                "amplitude vector length {len} is not 2^n with n >= 1"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!("amplitudes have squared norm {norm}, expected 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize, role: &str) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "{role} qubit {qubit} on a {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Applies `gate` to `qubit`, i.e. I ⊗ … ⊗ U ⊗ … ⊗ I.
    pub fn apply_1q(&mut self, qubit: usize, gate: &Gate1Q) -> Result<()> {
        self.check_qubit(qubit, "target")?;
        let mask = self.mask(qubit);
        let [[a, b], [c, d]] = gate.m;
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (x0, x1) = (self.amps[i], self.amps[j]);
            self.amps[i] = a * x0 + b * x1;
            self.amps[j] = c * x0 + d * x1;
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control, "control")?;
        self.check_qubit(target, "target")?;
        if control == target {
            return Err(Error::Config(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for i in 0..self.amps.len() {
            // visit each swapped pair once, from its target-clear member
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// ⟨ψ|Z_qubit|ψ⟩.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit, "measured")?;
        let mask = self.mask(qubit);
        let value = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum::<f64>();
        Ok(value.clamp(-1.0, 1.0))
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Config(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS} qubits"
        )));
    }
    Ok(())
}

/// A 2×2 unitary, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate1Q {
    pub m: [[Complex64; 2]; 2],
}

impl Gate1Q {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { m: [[h, h], [h, -h]] }
    }

    pub fn rx(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        Self {
            m: [[Complex64::new(c, 0.0), mis], [mis, Complex64::new(c, 0.0)]],
        }
    }

    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self {
            m: [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
        }
    }

    pub fn rz(theta: f64) -> Self {
        Self {
            m: [
                [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
            ],
        }
    }

    /// RZ(omega)·RY(theta)·RZ(phi): phi acts first.
    pub fn rot(phi: f64, theta: f64, omega: f64) -> Self {
        Self::rz(omega).matmul(&Self::ry(theta)).matmul(&Self::rz(phi))
    }

    pub fn matmul(&self, rhs: &Gate1Q) -> Gate1Q {
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.m[r][0] * rhs.m[0][c] + self.m[r][1] * rhs.m[1][c];
            }
        }
        Gate1Q { m }
    }

    pub fn adjoint(&self) -> Gate1Q {
        let m = self.m;
        Gate1Q {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    /// Largest elementwise deviation of U·U† from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.matmul(&self.adjoint());
        let id = Gate1Q::identity();
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.m[r][c] - id.m[r][c]).norm());
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Rot,
}

impl GateKind {
    pub fn n_angles(self) -> usize {
        match self {
            GateKind::H => 0,
            GateKind::Rot => 3,
            _ => 1,
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RX" => Ok(GateKind::Rx),
            "RY" => Ok(GateKind::Ry),
            "RZ" => Ok(GateKind::Rz),
            "H" => Ok(GateKind::H),
            "ROT" => Ok(GateKind::Rot),
            _ => Err(Error::Config(format!(
                "unknown gate kind {s:?} (expected RX, RY, RZ, H or Rot)"
            ))),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::H => "H",
            GateKind::Rot => "Rot",
        };
        f.write_str(name)
    }
}

/// Builds a single-qubit gate from its kind and angle list (radians).
pub fn make_rotation(kind: GateKind, angles: &[f64]) -> Result<Gate1Q> {
    if angles.len() != kind.n_angles() {
        return Err(Error::Config(format!(
            "{kind} takes {} angle(s), got {}",
            kind.n_angles(),
            angles.len()
        )));
    }
    if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
        return Err(Error::NonFinite(format!("{kind} angle {bad}")));
    }
    Ok(match kind {
        GateKind::Rx => Gate1Q::rx(angles[0]),
        GateKind::Ry => Gate1Q::ry(angles[0]),
        GateKind::Rz => Gate1Q::rz(angles[0]),
        GateKind::H => Gate1Q::hadamard(),
        GateKind::Rot => Gate1Q::rot(angles[0], angles[1], angles[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn zero_state_shapes() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        let s = StateVector::zero(5).unwrap();
        assert_eq!(s.amplitudes().len(), 32);
        assert_eq!(s.amplitudes()[0], ONE);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn register_bounds() {
        let err = StateVector::zero(0).unwrap_err().to_string();
        assert!(err.contains("1..=12"), "{err}");
        assert!(StateVector::zero(13).is_err());
        assert!(StateVector::zero(12).is_ok());
    }

    #[test]
    fn rotation_matrices() {
        let id = make_rotation(GateKind::Rot, &[0.0, 0.0, 0.0]).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(close(id.m[r][c], Gate1Q::identity().m[r][c], 1e-15));
            }
        }
        let ry = make_rotation(GateKind::Ry, &[PI]).unwrap();
        let want = [[0.0, -1.0], [1.0, 0.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert!(close(ry.m[r][c], Complex64::new(want[r][c], 0.0), 1e-15));
            }
        }
    }

    #[test]
    fn rot_is_product_of_factors() {
        let (phi, theta, omega) = (0.3, 1.1, -0.7);
        let g = make_rotation(GateKind::Rot, &[phi, theta, omega]).unwrap();
        let manual = Gate1Q::rz(omega).matmul(&Gate1Q::ry(theta)).matmul(&Gate1Q::rz(phi));
        assert_eq!(g, manual);
        assert!(g.unitarity_error() < 1e-12);
    }

    #[test]
    fn rotation_errors() {
        assert!("CZ".parse::<GateKind>().is_err());
        assert_eq!("rot".parse::<GateKind>().unwrap(), GateKind::Rot);
        assert!(matches!(
            make_rotation(GateKind::Rx, &[f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(make_rotation(GateKind::Rot, &[0.1]).is_err());
        assert!(make_rotation(GateKind::H, &[]).is_ok());
    }

    #[test]
    fn single_qubit_application() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_1q(0, &Gate1Q::ry(PI)).unwrap();
        assert!((s.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-15);

        let mut s = StateVector::zero(1).unwrap();
        s.apply_1q(0, &Gate1Q::hadamard()).unwrap();
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(s.amplitudes()[0], h, 1e-15));
        assert!(close(s.amplitudes()[1], h, 1e-15));

        assert!(matches!(s.apply_1q(1, &Gate1Q::hadamard()), Err(Error::Index(_))));
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ is index 2 with qubit 0 as the MSB
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());

        let mut s = StateVector::zero(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());

        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mut s = StateVector::from_amplitudes(vec![h, ZERO, h, ZERO]).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitudes(), &[h, ZERO, ZERO, h]);

        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Config(_))));
        assert!(matches!(s.apply_cnot(0, 2), Err(Error::Index(_))));
    }

    #[test]
    fn z_expectations() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(s.expect_z(0).unwrap(), 1.0);

        let mut s = StateVector::zero(1).unwrap();
        s.apply_1q(0, &Gate1Q::rx(PI)).unwrap();
        assert!((s.expect_z(0).unwrap() + 1.0).abs() < 1e-12);

        let mut s = StateVector::zero(1).unwrap();
        s.apply_1q(0, &Gate1Q::hadamard()).unwrap();
        assert!(s.expect_z(0).unwrap().abs() < 1e-12);
        assert!(s.expect_z(3).is_err());
    }

    #[test]
    fn msb_ordering_is_local() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply_1q(2, &Gate1Q::rx(PI)).unwrap();
        assert_eq!(s.amplitudes()[0b001].norm_sqr().round(), 1.0);
        assert!((s.expect_z(0).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.expect_z(1).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.expect_z(2).unwrap() + 1.0).abs() < 1e-12);
    }
}
