//! Dressed quantum network: dense pre-net with tanh, the VQC, and a dense
//! post-net with softmax.
//!
//! The gradient across the quantum-classical boundary comes from the VQC's
//! parameter-shift feature gradients, chained through the tanh derivative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autonet::softmax;
use crate::error::{Error, Result};
use crate::vqc::{gradients_from_tape, vqc_forward_taped, vqc_param_count, VqcConfig, VqcTape, VqcWeights};

/// W_pre + W_VQC + W_post for a dressed network.
pub fn dqn_param_count(n_ip: usize, n_q: usize, n_d: usize, n_c: usize) -> usize {
    (n_ip * n_q + n_q) + vqc_param_count(n_q, n_d) + (n_q * n_c + n_c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DressedQuantumNet {
    pub n_inputs: usize,
    pub n_classes: usize,
    /// `[qubit][input]`.
    pub pre_weights: Vec<f64>,
    pub pre_bias: Vec<f64>,
    pub vqc: VqcConfig,
    pub vqc_weights: VqcWeights,
    /// `[class][qubit]`.
    pub post_weights: Vec<f64>,
    pub post_bias: Vec<f64>,
}

/// Spread of the initial rotation angles around zero.
const VQC_INIT_SPREAD: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct DqnTape {
    input: Vec<f64>,
    pre_act: Vec<f64>,
    vqc: VqcTape,
    readout: Vec<f64>,
    probs: Vec<f64>,
}

impl DqnTape {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// tanh outputs of the pre-net (before input scaling).
    pub fn pre_activations(&self) -> &[f64] {
        &self.pre_act
    }

    pub fn readout(&self) -> &[f64] {
        &self.readout
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DqnGradients {
    pub pre_weights: Vec<f64>,
    pub pre_bias: Vec<f64>,
    pub vqc_weights: Vec<f64>,
    pub post_weights: Vec<f64>,
    pub post_bias: Vec<f64>,
    pub input: Vec<f64>,
}

impl DqnGradients {
    pub fn zeros_like(net: &DressedQuantumNet) -> Self {
        Self {
            pre_weights: vec![0.0; net.pre_weights.len()],
            pre_bias: vec![0.0; net.pre_bias.len()],
            vqc_weights: vec![0.0; net.vqc_weights.len()],
            post_weights: vec![0.0; net.post_weights.len()],
            post_bias: vec![0.0; net.post_bias.len()],
            input: vec![0.0; net.n_inputs],
        }
    }

    /// Parameter tensors in the order of [`DressedQuantumNet::tensors_mut`].
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            &self.pre_weights,
            &self.pre_bias,
            &self.vqc_weights,
            &self.post_weights,
            &self.post_bias,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.pre_weights,
            &mut self.pre_bias,
            &mut self.vqc_weights,
            &mut self.post_weights,
            &mut self.post_bias,
            &mut self.input,
        ]
    }

    pub fn accumulate(&mut self, other: &DqnGradients) {
        let rhs = [
            &other.pre_weights,
            &other.pre_bias,
            &other.vqc_weights,
            &other.post_weights,
            &other.post_bias,
            &other.input,
        ];
        for (a, b) in self.tensors_mut().into_iter().zip(rhs) {
            a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

impl DressedQuantumNet {
    /// Fresh network: Kaiming-uniform dense layers, rotation angles uniform in ±0.1.
    pub fn new(n_inputs: usize, vqc: VqcConfig, n_classes: usize, seed: u64) -> Result<Self> {
        vqc.validate()?;
        if n_inputs == 0 || n_classes == 0 {
            return Err(Error::Config(format!(
                "dressed network needs positive widths, got {n_inputs} inputs and {n_classes} classes"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nq = vqc.n_qubits;
        let mut uniform = |n: usize, fan_in: usize, weight: bool| -> Vec<f64> {
            let bound = if weight {
                (6.0 / fan_in as f64).sqrt()
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let pre_weights = uniform(nq * n_inputs, n_inputs, true);
        let pre_bias = uniform(nq, n_inputs, false);
        let post_weights = uniform(n_classes * nq, nq, true);
        let post_bias = uniform(n_classes, nq, false);
        let angles = (0..vqc.param_count())
            .map(|_| rng.random_range(-VQC_INIT_SPREAD..VQC_INIT_SPREAD))
            .collect();
        let vqc_weights = VqcWeights::from_vec(vqc.n_layers, nq, angles)?;
        Ok(Self {
            n_inputs,
            n_classes,
            pre_weights,
            pre_bias,
            vqc,
            vqc_weights,
            post_weights,
            post_bias,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.vqc.n_qubits
    }

    pub fn param_count(&self) -> usize {
        self.pre_weights.len()
            + self.pre_bias.len()
            + self.vqc_weights.len()
            + self.post_weights.len()
            + self.post_bias.len()
    }

    /// (W_pre, W_VQC, W_post).
    pub fn param_breakdown(&self) -> (usize, usize, usize) {
        (
            self.pre_weights.len() + self.pre_bias.len(),
            self.vqc_weights.len(),
            self.post_weights.len() + self.post_bias.len(),
        )
    }

    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            &self.pre_weights,
            &self.pre_bias,
            self.vqc_weights.as_slice(),
            &self.post_weights,
            &self.post_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            &mut self.pre_weights,
            &mut self.pre_bias,
            self.vqc_weights.as_mut_slice(),
            &mut self.post_weights,
            &mut self.post_bias,
        ]
    }

    pub fn tensor_shapes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    /// Checks internal widths agree; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        self.vqc.validate()?;
        let nq = self.n_qubits();
        let ok = self.pre_weights.len() == nq * self.n_inputs
            && self.pre_bias.len() == nq
            && self.vqc_weights.shape() == (self.vqc.n_layers, nq, 3)
            && self.post_weights.len() == self.n_classes * nq
            && self.post_bias.len() == self.n_classes;
        if !ok {
            return Err(Error::Shape("dressed network tensors disagree with its widths".into()));
        }
        Ok(())
    }

    pub fn forward(&self, features: &[f64]) -> Result<(Vec<f64>, DqnTape)> {
        if features.len() != self.n_inputs {
            return Err(Error::Shape(format!(
                "dressed network expects {} features, got {}",
                self.n_inputs,
                features.len()
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("dressed network input {bad}")));
        }
        let pre_act: Vec<f64> = dense(&self.pre_weights, &self.pre_bias, features)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let (readout, vqc) = vqc_forward_taped(&self.vqc, &self.vqc_weights, &pre_act)?;
        let probs = softmax(&dense(&self.post_weights, &self.post_bias, &readout));
        let tape = DqnTape {
            input: features.to_vec(),
            pre_act,
            vqc,
            readout,
            probs: probs.clone(),
        };
        Ok((probs, tape))
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(features)?.0)
    }

    /// Backpropagates a gradient w.r.t. the output probabilities.
    pub fn backward(&self, tape: &DqnTape, grad_probs: &[f64]) -> Result<DqnGradients> {
        let nq = self.n_qubits();
        if tape.input.len() != self.n_inputs
            || tape.pre_act.len() != nq
            || tape.probs.len() != self.n_classes
        {
            return Err(Error::Shape("dressed-network tape does not match this network".into()));
        }
        if grad_probs.len() != self.n_classes {
            return Err(Error::Shape(format!(
                "output gradient has {} entries for {} classes",
                grad_probs.len(),
                self.n_classes
            )));
        }
        let dot: f64 = tape.probs.iter().zip(grad_probs).map(|(p, g)| p * g).sum();
        let g_logits: Vec<f64> = tape.probs.iter().zip(grad_probs).map(|(p, g)| p * (g - dot)).collect();

        let mut grads = DqnGradients::zeros_like(self);
        let mut g_readout = vec![0.0; nq];
        for (c, &gl) in g_logits.iter().enumerate() {
            grads.post_bias[c] = gl;
            for q in 0..nq {
                grads.post_weights[c * nq + q] = gl * tape.readout[q];
                g_readout[q] += gl * self.post_weights[c * nq + q];
            }
        }

        let vg = gradients_from_tape(&self.vqc, &self.vqc_weights, &tape.vqc, &g_readout)?;
        grads.vqc_weights = vg.weights;

        let g_pre: Vec<f64> = vg
            .features
            .iter()
            .zip(&tape.pre_act)
            .map(|(g, t)| g * (1.0 - t * t))
            .collect();
        let n = self.n_inputs;
        for (q, &gq) in g_pre.iter().enumerate() {
            grads.pre_bias[q] = gq;
            let row = &self.pre_weights[q * n..(q + 1) * n];
            for i in 0..n {
                grads.pre_weights[q * n + i] = gq * tape.input[i];
                grads.input[i] += gq * row[i];
            }
        }
        Ok(grads)
    }
}

fn dense(weights: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    bias.iter()
        .enumerate()
        .map(|(o, b)| b + weights[o * n..(o + 1) * n].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}
