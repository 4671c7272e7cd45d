//! Variational quantum circuit: angle embedding, strongly entangling layers and
//! an all-qubit Z readout, with parameter-shift gradients.
//!
//! Each layer applies `Rot(φ, θ, ω)` to every qubit, then a ring of CNOTs with
//! control `q` and target `(q + range) mod n` for `q = 0..n`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Gate1Q, StateVector, MAX_QUBITS};

const SHIFT: f64 = FRAC_PI_2;

/// Optional nonlinearity on the measured expectations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    #[default]
    None,
    Relu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqcConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    /// CNOT target offset per layer.
    pub ranges: Vec<usize>,
    pub hadamard_prefix: bool,
    pub input_scale: f64,
    pub output_activation: OutputActivation,
}

impl VqcConfig {
    /// Config with the default ranges `(l mod (n-1)) + 1`, a Hadamard wall and π/2 input scale.
    pub fn new(n_qubits: usize, n_layers: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::Config(format!(
                "entangling layers need at least 2 qubits, got {n_qubits}"
            )));
        }
        let config = Self {
            n_qubits,
            n_layers,
            ranges: default_ranges(n_qubits, n_layers),
            hadamard_prefix: true,
            input_scale: FRAC_PI_2,
            output_activation: OutputActivation::None,
        };
        config.validate()?;
        Ok(config)
    }

    /// 5 qubits, 3 strongly entangling layers.
    pub fn standard() -> Self {
        Self::new(5, 3).expect("5x3 is a valid circuit")
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::Config(format!(
                "VQC register size {} outside 2..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Config("VQC needs at least one layer".into()));
        }
        if self.ranges.len() != self.n_layers {
            return Err(Error::Config(format!(
                "{} entangling ranges for {} layers",
                self.ranges.len(),
                self.n_layers
            )));
        }
        if let Some((l, r)) = self
            .ranges
            .iter()
            .enumerate()
            .find(|(_, &r)| r == 0 || r >= self.n_qubits)
        {
            return Err(Error::Config(format!(
                "layer {l} range {r} outside 1..={}",
                self.n_qubits - 1
            )));
        }
        if !self.input_scale.is_finite() {
            return Err(Error::NonFinite(format!("input scale {}", self.input_scale)));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        vqc_param_count(self.n_qubits, self.n_layers)
    }
}

pub fn default_ranges(n_qubits: usize, n_layers: usize) -> Vec<usize> {
    (0..n_layers).map(|l| l % (n_qubits - 1) + 1).collect()
}

/// W_VQC = 3 · qubits · layers.
pub fn vqc_param_count(n_qubits: usize, n_layers: usize) -> usize {
    3 * n_qubits * n_layers
}

/// Rotation angles laid out as `[layer][qubit][φ, θ, ω]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqcWeights {
    n_layers: usize,
    n_qubits: usize,
    angles: Vec<f64>,
}

impl VqcWeights {
    pub fn zeros(config: &VqcConfig) -> Self {
        Self {
            n_layers: config.n_layers,
            n_qubits: config.n_qubits,
            angles: vec![0.0; config.param_count()],
        }
    }

    /// Angles drawn uniformly from [0, 2π).
    pub fn random(config: &VqcConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(config, &mut rng)
    }

    pub fn random_with(config: &VqcConfig, rng: &mut impl Rng) -> Self {
        let angles = (0..config.param_count())
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        Self {
            n_layers: config.n_layers,
            n_qubits: config.n_qubits,
            angles,
        }
    }

    pub fn from_vec(n_layers: usize, n_qubits: usize, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != vqc_param_count(n_qubits, n_layers) {
            return Err(Error::Shape(format!(
                "{} angles for a {n_layers}x{n_qubits}x3 weight tensor",
                angles.len()
            )));
        }
        Ok(Self {
            n_layers,
            n_qubits,
            angles,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_layers, self.n_qubits, 3)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    pub fn index(&self, layer: usize, qubit: usize, k: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + k
    }

    pub fn get(&self, layer: usize, qubit: usize) -> [f64; 3] {
        let i = self.index(layer, qubit, 0);
        [self.angles[i], self.angles[i + 1], self.angles[i + 2]]
    }

    pub fn set(&mut self, layer: usize, qubit: usize, angles: [f64; 3]) {
        let i = self.index(layer, qubit, 0);
        self.angles[i..i + 3].copy_from_slice(&angles);
    }

    fn check(&self, config: &VqcConfig) -> Result<()> {
        if self.n_layers != config.n_layers || self.n_qubits != config.n_qubits {
            return Err(Error::Shape(format!(
                "weights {}x{}x3 do not match circuit {}x{}x3",
                self.n_layers, self.n_qubits, config.n_layers, config.n_qubits
            )));
        }
        Ok(())
    }
}

/// States cached during a forward pass: the embedded state followed by the
/// state after each entangling layer.
#[derive(Clone, Debug)]
pub struct VqcTape {
    features: Vec<f64>,
    states: Vec<StateVector>,
    raw: Vec<f64>,
}

impl VqcTape {
    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Expectations before the optional output activation.
    pub fn raw_expectations(&self) -> &[f64] {
        &self.raw
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VqcGradients {
    pub features: Vec<f64>,
    /// Same layout as [`VqcWeights`].
    pub weights: Vec<f64>,
}

fn check_features(config: &VqcConfig, features: &[f64]) -> Result<()> {
    if features.len() != config.n_qubits {
        return Err(Error::Shape(format!(
            "{} features for {} qubits",
            features.len(),
            config.n_qubits
        )));
    }
    if let Some(bad) = features.iter().find(|f| !f.is_finite()) {
        return Err(Error::NonFinite(format!("embedding feature {bad}")));
    }
    Ok(())
}

fn embed_angles(config: &VqcConfig, angles: impl Iterator<Item = f64>) -> Result<StateVector> {
    let mut state = StateVector::zero(config.n_qubits)?;
    for (q, angle) in angles.enumerate() {
        if config.hadamard_prefix {
            state.apply_1q(q, &Gate1Q::hadamard())?;
        }
        state.apply_1q(q, &Gate1Q::ry(angle))?;
    }
    Ok(state)
}

/// RY(scale · xᵢ) on each qubit, after an optional Hadamard wall.
pub fn embed(config: &VqcConfig, features: &[f64]) -> Result<StateVector> {
    config.validate()?;
    check_features(config, features)?;
    embed_angles(config, features.iter().map(|f| config.input_scale * f))
}

fn apply_layer(
    config: &VqcConfig,
    layer: usize,
    rotations: impl Fn(usize) -> [f64; 3],
    state: &mut StateVector,
) -> Result<()> {
    let n = config.n_qubits;
    for q in 0..n {
        let [phi, theta, omega] = rotations(q);
        state.apply_1q(q, &Gate1Q::rot(phi, theta, omega))?;
    }
    let range = config.ranges[layer];
    for q in 0..n {
        state.apply_cnot(q, (q + range) % n)?;
    }
    Ok(())
}

pub fn entangling_layers(
    config: &VqcConfig,
    weights: &VqcWeights,
    mut state: StateVector,
) -> Result<StateVector> {
    config.validate()?;
    weights.check(config)?;
    if state.n_qubits() != config.n_qubits {
        return Err(Error::Shape(format!(
            "{}-qubit state for a {}-qubit circuit",
            state.n_qubits(),
            config.n_qubits
        )));
    }
    for layer in 0..config.n_layers {
        apply_layer(config, layer, |q| weights.get(layer, q), &mut state)?;
    }
    Ok(state)
}

pub fn measure_all_z(state: &StateVector) -> Vec<f64> {
    (0..state.n_qubits())
        .map(|q| state.expect_z(q).expect("qubit index within register"))
        .collect()
}

fn activate(config: &VqcConfig, raw: &[f64]) -> Vec<f64> {
    match config.output_activation {
        OutputActivation::None => raw.to_vec(),
        OutputActivation::Relu => raw.iter().map(|z| z.max(0.0)).collect(),
    }
}

pub fn vqc_forward(config: &VqcConfig, weights: &VqcWeights, features: &[f64]) -> Result<Vec<f64>> {
    let state = entangling_layers(config, weights, embed(config, features)?)?;
    Ok(activate(config, &measure_all_z(&state)))
}

/// Forward pass that keeps the intermediate states for [`gradients_from_tape`].
pub fn vqc_forward_taped(
    config: &VqcConfig,
    weights: &VqcWeights,
    features: &[f64],
) -> Result<(Vec<f64>, VqcTape)> {
    weights.check(config)?;
    let mut state = embed(config, features)?;
    let mut states = Vec::with_capacity(config.n_layers + 1);
    states.push(state.clone());
    for layer in 0..config.n_layers {
        apply_layer(config, layer, |q| weights.get(layer, q), &mut state)?;
        states.push(state.clone());
    }
    let raw = measure_all_z(&state);
    let out = activate(config, &raw);
    Ok((
        out,
        VqcTape {
            features: features.to_vec(),
            states,
            raw,
        },
    ))
}

/// Gradients of `upstream · output` by the parameter-shift rule.
pub fn vqc_gradients(
    config: &VqcConfig,
    weights: &VqcWeights,
    features: &[f64],
    upstream: &[f64],
) -> Result<VqcGradients> {
    let (_, tape) = vqc_forward_taped(config, weights, features)?;
    gradients_from_tape(config, weights, &tape, upstream)
}

pub fn gradients_from_tape(
    config: &VqcConfig,
    weights: &VqcWeights,
    tape: &VqcTape,
    upstream: &[f64],
) -> Result<VqcGradients> {
    config.validate()?;
    weights.check(config)?;
    if tape.states.len() != config.n_layers + 1
        || tape.features.len() != config.n_qubits
        || tape.states[0].n_qubits() != config.n_qubits
    {
        return Err(Error::Shape("VQC tape does not match circuit shape".into()));
    }
    if upstream.len() != config.n_qubits {
        return Err(Error::Shape(format!(
            "upstream gradient has {} entries for {} qubits",
            upstream.len(),
            config.n_qubits
        )));
    }
    let upstream: Vec<f64> = match config.output_activation {
        OutputActivation::None => upstream.to_vec(),
        OutputActivation::Relu => upstream
            .iter()
            .zip(&tape.raw)
            .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
            .collect(),
    };
    let mut grads = VqcGradients {
        features: vec![0.0; config.n_qubits],
        weights: vec![0.0; config.param_count()],
    };
    if upstream.iter().all(|g| *g == 0.0) {
        return Ok(grads);
    }
    let project = |state: &StateVector| -> f64 {
        measure_all_z(state)
            .iter()
            .zip(&upstream)
            .map(|(z, g)| z * g)
            .sum()
    };

    // Weight shifts replay from the cached state entering the shifted layer.
    for layer in 0..config.n_layers {
        for q in 0..config.n_qubits {
            for k in 0..3 {
                let mut shifted = [0.0; 2];
                for (slot, delta) in shifted.iter_mut().zip([SHIFT, -SHIFT]) {
                    let mut state = tape.states[layer].clone();
                    apply_layer(
                        config,
                        layer,
                        |p| {
                            let mut a = weights.get(layer, p);
                            if p == q {
                                a[k] += delta;
                            }
                            a
                        },
                        &mut state,
                    )?;
                    for later in layer + 1..config.n_layers {
                        apply_layer(config, later, |p| weights.get(later, p), &mut state)?;
                    }
                    *slot = project(&state);
                }
                grads.weights[weights.index(layer, q, k)] = (shifted[0] - shifted[1]) / 2.0;
            }
        }
    }

    // Embedding shifts act on RY(scale·x), so the chain rule adds a factor of scale.
    if config.input_scale != 0.0 {
        let base: Vec<f64> = tape.features.iter().map(|f| config.input_scale * f).collect();
        for i in 0..config.n_qubits {
            let mut shifted = [0.0; 2];
            for (slot, delta) in shifted.iter_mut().zip([SHIFT, -SHIFT]) {
                let angles = base
                    .iter()
                    .enumerate()
                    .map(|(j, a)| if j == i { a + delta } else { *a });
                let state = entangling_layers(config, weights, embed_angles(config, angles)?)?;
                *slot = project(&state);
            }
            grads.features[i] = config.input_scale * (shifted[0] - shifted[1]) / 2.0;
        }
    }
    Ok(grads)
}
