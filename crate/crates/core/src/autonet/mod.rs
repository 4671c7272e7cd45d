//! Sequential classical network with explicit forward and backward passes.
//!
//! Convolution and pooling use valid padding with `out = ⌊(in − k)/s⌋ + 1`.
//! Dropout is inverted (scaled by `1/(1−p)` at train time) and disabled in
//! evaluation mode.

mod adam;
mod kernels;
mod presets;
mod tensor;

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, Adam, AdamState};
pub use kernels::softmax;
pub use presets::{documented_param_count, preset, preset_input, preset_layers, PRESET_NAMES};
pub use tensor::Tensor;

use kernels::ConvGeom;

/// Probability floor applied before taking the log in [`cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerKind {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
    },
    MaxPool2d {
        kernel: usize,
        stride: usize,
    },
    Flatten,
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    Dropout {
        p: f64,
    },
    Activation(Activation),
}

impl LayerKind {
    pub fn conv(in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        LayerKind::Conv2d {
            in_ch,
            out_ch,
            kernel,
            stride,
        }
    }

    pub fn pool(kernel: usize, stride: usize) -> Self {
        LayerKind::MaxPool2d { kernel, stride }
    }

    pub fn dense(in_dim: usize, out_dim: usize) -> Self {
        LayerKind::Dense { in_dim, out_dim }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, LayerKind::Conv2d { .. } | LayerKind::Dense { .. })
    }

    /// (weight count, bias count).
    pub fn param_shape(&self) -> (usize, usize) {
        match *self {
            LayerKind::Conv2d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => (out_ch * in_ch * kernel * kernel, out_ch),
            LayerKind::Dense { in_dim, out_dim } => (out_dim * in_dim, out_dim),
            _ => (0, 0),
        }
    }

    pub fn param_count(&self) -> usize {
        let (w, b) = self.param_shape();
        w + b
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Conv2d { in_ch, kernel, .. } => in_ch * kernel * kernel,
            LayerKind::Dense { in_dim, .. } => in_dim,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerKind::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
            } => in_ch > 0 && out_ch > 0 && kernel > 0 && stride > 0,
            LayerKind::MaxPool2d { kernel, stride } => kernel > 0 && stride > 0,
            LayerKind::Dense { in_dim, out_dim } => in_dim > 0 && out_dim > 0,
            LayerKind::Dropout { p } => (0.0..1.0).contains(&p),
            LayerKind::Flatten | LayerKind::Activation(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid layer {self}")))
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerKind::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
            } => write!(f, "Conv2D({in_ch}, {out_ch}, {kernel}, {stride})"),
            LayerKind::MaxPool2d { kernel, stride } => write!(f, "MaxPool2D({kernel}, {stride})"),
            LayerKind::Flatten => write!(f, "Flatten()"),
            LayerKind::Dense { in_dim, out_dim } => write!(f, "Linear({in_dim}, {out_dim})"),
            LayerKind::Dropout { p } => write!(f, "Dropout(p={p})"),
            LayerKind::Activation(a) => write!(f, "{a:?}"),
        }
    }
}

/// Activation shape of a single sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Image { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Image { c, h, w } => c * h * w,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Image { c, h, w } => vec![c, h, w],
            Shape::Flat(n) => vec![n],
        }
    }

    fn from_dims(dims: &[usize]) -> Option<Self> {
        match *dims {
            [c, h, w] => Some(Shape::Image { c, h, w }),
            [n] => Some(Shape::Flat(n)),
            _ => None,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Image { c, h, w } => write!(f, "{c}x{h}x{w}"),
            Shape::Flat(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub frozen: bool,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGraph {
    pub name: String,
    /// Per-sample input shape (channels, rows, cols).
    pub input: [usize; 3],
    pub layers: Vec<Layer>,
}

/// Forward-pass mode. Dropout draws its masks from the supplied RNG in training mode.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

#[derive(Clone, Debug)]
enum Cache {
    Input(Tensor),
    Pool { input_dims: Vec<usize>, argmax: Vec<usize> },
    Flatten { input_dims: Vec<usize> },
    Dropout { mask: Option<Vec<f64>> },
    Output(Tensor),
}

/// Activations recorded by [`LayerGraph::forward`] for one backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    kinds: Vec<LayerKind>,
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    caches: Vec<Cache>,
}

impl Tape {
    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradients {
    /// One entry per layer; `None` for frozen or parameter-free layers.
    pub layers: Vec<Option<ParamGrads>>,
    pub input: Tensor,
}

impl Gradients {
    pub fn params(&self) -> impl Iterator<Item = (usize, &ParamGrads)> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (i, g)))
    }

    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(Option::is_none)
    }

    /// Flat tensor list in the order of [`LayerGraph::trainable_tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.params()
            .flat_map(|(_, g)| [g.weights.as_slice(), g.bias.as_slice()])
            .collect()
    }

    /// Adds `other` into `self`; both must come from the same graph.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if let (Some(a), Some(b)) = (a.as_mut(), b.as_ref()) {
                a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
                a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.layers.iter_mut().flatten() {
            g.weights.iter_mut().chain(g.bias.iter_mut()).for_each(|x| *x *= factor);
        }
    }
}

impl LayerGraph {
    /// Builds a graph with Kaiming-uniform weights drawn from a seeded RNG.
    pub fn new(name: impl Into<String>, input: [usize; 3], kinds: &[LayerKind], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(kinds.len());
        for kind in kinds {
            kind.validate()?;
            let (nw, nb) = kind.param_shape();
            let fan_in = kind.fan_in().max(1) as f64;
            let w_bound = (6.0 / fan_in).sqrt();
            let b_bound = 1.0 / fan_in.sqrt();
            let weights = (0..nw).map(|_| rng.random_range(-w_bound..w_bound)).collect();
            let bias = (0..nb).map(|_| rng.random_range(-b_bound..b_bound)).collect();
            layers.push(Layer {
                kind: *kind,
                frozen: false,
                weights,
                bias,
            });
        }
        Ok(Self {
            name: name.into(),
            input,
            layers,
        })
    }

    pub fn kinds(&self) -> Vec<LayerKind> {
        self.layers.iter().map(|l| l.kind).collect()
    }

    pub fn input_shape(&self) -> Shape {
        let [c, h, w] = self.input;
        Shape::Image { c, h, w }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.kind.param_count()).sum()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| !l.frozen)
            .map(|l| l.kind.param_count())
            .sum()
    }

    pub fn freeze_all(&mut self) {
        self.layers.iter_mut().for_each(|l| l.frozen = true);
    }

    pub fn all_frozen(&self) -> bool {
        self.layers.iter().all(|l| l.frozen)
    }

    pub fn trainable_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .filter(|l| !l.frozen && l.kind.is_parametric())
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn trainable_shapes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter(|l| !l.frozen && l.kind.is_parametric())
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect()
    }

    /// Per-layer output shapes for the graph's declared input.
    pub fn infer_shapes(&self) -> Result<Vec<Shape>> {
        infer_shapes(&self.kinds(), self.input_shape())
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(*self.infer_shapes()?.last().unwrap_or(&self.input_shape()))
    }

    pub fn forward(&self, batch: &Tensor, mut mode: Mode<'_>) -> Result<(Tensor, Tape)> {
        let in_shape = Shape::from_dims(batch.sample_shape())
            .ok_or_else(|| Error::Shape(format!("unsupported input shape {:?}", batch.shape())))?;
        if in_shape != self.input_shape() {
            return Err(Error::Shape(format!(
                "graph {} expects input {}, got {}",
                self.name,
                self.input_shape(),
                in_shape
            )));
        }
        let shapes = self.infer_shapes()?;
        let n = batch.batch();
        let mut x = batch.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut shape = in_shape;
        for (layer, &out_shape) in self.layers.iter().zip(&shapes) {
            let mut out_dims = vec![n];
            out_dims.extend(out_shape.dims());
            let (y, cache) = match layer.kind {
                LayerKind::Conv2d {
                    in_ch,
                    out_ch,
                    kernel,
                    stride,
                } => {
                    let geom = conv_geom(shape, out_shape, in_ch, out_ch, kernel, stride);
                    let mut y = Tensor::zeros(out_dims);
                    for s in 0..n {
                        kernels::conv_forward(&geom, x.sample(s), &layer.weights, &layer.bias, y.sample_mut(s));
                    }
                    (y, Cache::Input(x))
                }
                LayerKind::MaxPool2d { kernel, stride } => {
                    let (Shape::Image { c, h, w }, Shape::Image { h: oh, w: ow, .. }) = (shape, out_shape) else {
                        unreachable!("shape inference admits pooling only on images")
                    };
                    let mut y = Tensor::zeros(out_dims);
                    let mut argmax = vec![0usize; y.data().len()];
                    let per = y.sample_len();
                    for s in 0..n {
                        kernels::maxpool_forward(
                            c,
                            (h, w),
                            (oh, ow),
                            kernel,
                            stride,
                            x.sample(s),
                            y.sample_mut(s),
                            &mut argmax[s * per..(s + 1) * per],
                        );
                    }
                    let input_dims = x.shape().to_vec();
                    (y, Cache::Pool { input_dims, argmax })
                }
                LayerKind::Flatten => {
                    let input_dims = x.shape().to_vec();
                    let y = Tensor::new(out_dims, x.into_data())?;
                    (y, Cache::Flatten { input_dims })
                }
                LayerKind::Dense { in_dim, .. } => {
                    let mut y = Tensor::zeros(out_dims);
                    for s in 0..n {
                        kernels::dense_forward(in_dim, x.sample(s), &layer.weights, &layer.bias, y.sample_mut(s));
                    }
                    (y, Cache::Input(x))
                }
                LayerKind::Dropout { p } => match &mut mode {
                    Mode::Train(rng) if p > 0.0 => {
                        let keep = 1.0 / (1.0 - p);
                        let mask: Vec<f64> = (0..x.data().len())
                            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                            .collect();
                        let mut y = x;
                        y.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                        (y, Cache::Dropout { mask: Some(mask) })
                    }
                    _ => (x, Cache::Dropout { mask: None }),
                },
                LayerKind::Activation(act) => {
                    let mut y = x;
                    match act {
                        Activation::Relu => y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0)),
                        Activation::Tanh => y.data_mut().iter_mut().for_each(|v| *v = v.tanh()),
                        Activation::Softmax => {
                            for s in 0..n {
                                let p = softmax(y.sample(s));
                                y.sample_mut(s).copy_from_slice(&p);
                            }
                        }
                    }
                    (y.clone(), Cache::Output(y))
                }
            };
            caches.push(cache);
            x = y;
            shape = out_shape;
        }
        let tape = Tape {
            kinds: self.kinds(),
            input_shape: batch.shape().to_vec(),
            output_shape: x.shape().to_vec(),
            caches,
        };
        Ok((x, tape))
    }

    /// Evaluation-mode forward pass without a tape.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        Ok(self.forward(batch, Mode::Eval)?.0)
    }

    pub fn backward(&self, tape: &Tape, grad_output: &Tensor) -> Result<Gradients> {
        if tape.kinds != self.kinds() {
            return Err(Error::Shape(format!(
                "tape was recorded on a different layer stack than graph {}",
                self.name
            )));
        }
        if grad_output.shape() != tape.output_shape.as_slice() {
            return Err(Error::Shape(format!(
                "output gradient shape {:?} does not match recorded output {:?}",
                grad_output.shape(),
                tape.output_shape
            )));
        }
        let n = grad_output.batch();
        let mut grads: Vec<Option<ParamGrads>> = vec![None; self.layers.len()];
        let mut g = grad_output.clone();
        for (idx, (layer, cache)) in self.layers.iter().zip(&tape.caches).enumerate().rev() {
            let mut pg = (!layer.frozen && layer.kind.is_parametric()).then(|| ParamGrads {
                weights: vec![0.0; layer.weights.len()],
                bias: vec![0.0; layer.bias.len()],
            });
            g = match (layer.kind, cache) {
                (
                    LayerKind::Conv2d {
                        in_ch,
                        out_ch,
                        kernel,
                        stride,
                    },
                    Cache::Input(input),
                ) => {
                    let in_shape = Shape::from_dims(input.sample_shape()).expect("image input");
                    let out_shape = Shape::from_dims(g.sample_shape()).expect("image output");
                    let geom = conv_geom(in_shape, out_shape, in_ch, out_ch, kernel, stride);
                    let mut gi = Tensor::zeros(input.shape().to_vec());
                    for s in 0..n {
                        let pgs = pg.as_mut().map(|p| (p.weights.as_mut_slice(), p.bias.as_mut_slice()));
                        kernels::conv_backward(&geom, input.sample(s), &layer.weights, g.sample(s), pgs, gi.sample_mut(s));
                    }
                    gi
                }
                (LayerKind::MaxPool2d { .. }, Cache::Pool { input_dims, argmax }) => {
                    let mut gi = Tensor::zeros(input_dims.clone());
                    let per_out = g.sample_len();
                    for s in 0..n {
                        let go = g.sample(s);
                        let slot = gi.sample_mut(s);
                        for (o, &src) in argmax[s * per_out..(s + 1) * per_out].iter().enumerate() {
                            slot[src] += go[o];
                        }
                    }
                    gi
                }
                (LayerKind::Flatten, Cache::Flatten { input_dims }) => Tensor::new(input_dims.clone(), g.into_data())?,
                (LayerKind::Dense { in_dim, .. }, Cache::Input(input)) => {
                    let mut gi = Tensor::zeros(input.shape().to_vec());
                    for s in 0..n {
                        let pgs = pg.as_mut().map(|p| (p.weights.as_mut_slice(), p.bias.as_mut_slice()));
                        kernels::dense_backward(in_dim, input.sample(s), &layer.weights, g.sample(s), pgs, gi.sample_mut(s));
                    }
                    gi
                }
                (LayerKind::Dropout { .. }, Cache::Dropout { mask }) => {
                    if let Some(mask) = mask {
                        g.data_mut().iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
                    }
                    g
                }
                (LayerKind::Activation(act), Cache::Output(out)) => {
                    match act {
                        Activation::Relu => g
                            .data_mut()
                            .iter_mut()
                            .zip(out.data())
                            .for_each(|(v, y)| if *y <= 0.0 { *v = 0.0 }),
                        Activation::Tanh => g
                            .data_mut()
                            .iter_mut()
                            .zip(out.data())
                            .for_each(|(v, y)| *v *= 1.0 - y * y),
                        Activation::Softmax => {
                            for s in 0..n {
                                let mut gi = vec![0.0; g.sample_len()];
                                kernels::softmax_backward(out.sample(s), g.sample(s), &mut gi);
                                g.sample_mut(s).copy_from_slice(&gi);
                            }
                        }
                    }
                    g
                }
                _ => {
                    return Err(Error::Shape(format!(
                        "tape entry for layer {idx} ({}) is inconsistent",
                        layer.kind
                    )))
                }
            };
            grads[idx] = pg;
        }
        if g.shape() != tape.input_shape.as_slice() {
            return Err(Error::Shape("input gradient shape mismatch".into()));
        }
        Ok(Gradients { layers: grads, input: g })
    }

    /// Copy of layers `range` as a standalone graph with the given input shape.
    pub fn slice(&self, name: impl Into<String>, input: [usize; 3], range: std::ops::Range<usize>) -> LayerGraph {
        LayerGraph {
            name: name.into(),
            input,
            layers: self.layers[range].to_vec(),
        }
    }
}

fn conv_geom(input: Shape, output: Shape, in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> ConvGeom {
    let (Shape::Image { h, w, .. }, Shape::Image { h: oh, w: ow, .. }) = (input, output) else {
        unreachable!("shape inference admits convolution only on images")
    };
    ConvGeom {
        in_ch,
        out_ch,
        kernel,
        stride,
        in_h: h,
        in_w: w,
        out_h: oh,
        out_w: ow,
    }
}

/// Output shape after each layer, or an error naming the first layer that does not fit.
pub fn infer_shapes(kinds: &[LayerKind], input: Shape) -> Result<Vec<Shape>> {
    let mut shapes = Vec::with_capacity(kinds.len());
    let mut cur = input;
    for (idx, kind) in kinds.iter().enumerate() {
        kind.validate()?;
        let bad = |why: String| Error::Shape(format!("layer {idx} ({kind}): {why}"));
        cur = match (*kind, cur) {
            (
                LayerKind::Conv2d {
                    in_ch,
                    out_ch,
                    kernel,
                    stride,
                },
                Shape::Image { c, h, w },
            ) => {
                if c != in_ch {
                    return Err(bad(format!("expects {in_ch} input channels, got {c}")));
                }
                match (kernels::pooled_len(h, kernel, stride), kernels::pooled_len(w, kernel, stride)) {
                    (Some(h), Some(w)) => Shape::Image { c: out_ch, h, w },
                    _ => return Err(bad(format!("kernel {kernel} exceeds {h}x{w} input"))),
                }
            }
            (LayerKind::MaxPool2d { kernel, stride }, Shape::Image { c, h, w }) => {
                match (kernels::pooled_len(h, kernel, stride), kernels::pooled_len(w, kernel, stride)) {
                    (Some(h), Some(w)) => Shape::Image { c, h, w },
                    _ => return Err(bad(format!("window {kernel} exceeds {h}x{w} input"))),
                }
            }
            (LayerKind::Conv2d { .. } | LayerKind::MaxPool2d { .. }, Shape::Flat(_)) => {
                return Err(bad("needs an image input, got a flat vector".into()))
            }
            (LayerKind::Flatten, s) => Shape::Flat(s.len()),
            (LayerKind::Dense { in_dim, out_dim }, Shape::Flat(n)) => {
                if n != in_dim {
                    return Err(bad(format!("expects {in_dim} features, got {n}")));
                }
                Shape::Flat(out_dim)
            }
            (LayerKind::Dense { .. }, s @ Shape::Image { .. }) => {
                return Err(bad(format!("needs a flat input, got {s}")))
            }
            (LayerKind::Activation(Activation::Softmax), s @ Shape::Image { .. }) => {
                return Err(bad(format!("softmax needs a flat input, got {s}")))
            }
            (LayerKind::Dropout { .. } | LayerKind::Activation(_), s) => s,
        };
        shapes.push(cur);
    }
    Ok(shapes)
}

/// `−ln(max(p[label], 1e-12))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::Index(format!("label {label} for {} classes", probs.len())));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Data(format!("probabilities sum to {sum}, expected 1")));
    }
    Ok(-probs[label].max(PROB_FLOOR).ln())
}

/// d(cross_entropy)/d(probs).
pub fn cross_entropy_grad(probs: &[f64], label: usize) -> Vec<f64> {
    let mut g = vec![0.0; probs.len()];
    if probs[label] > PROB_FLOOR {
        g[label] = -1.0 / probs[label];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_dense(w: Vec<f64>, b: Vec<f64>) -> LayerGraph {
        LayerGraph {
            name: "dense".into(),
            input: [1, 1, 2],
            layers: vec![
                Layer {
                    kind: LayerKind::Flatten,
                    frozen: false,
                    weights: vec![],
                    bias: vec![],
                },
                Layer {
                    kind: LayerKind::dense(2, 2),
                    frozen: false,
                    weights: w,
                    bias: b,
                },
            ],
        }
    }

    #[test]
    fn identity_dense() {
        let g = single_dense(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        let x = Tensor::new(vec![1, 1, 1, 2], vec![3.0, 4.0]).unwrap();
        assert_eq!(g.predict(&x).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn dense_gradient_is_outer_product() {
        let g = single_dense(vec![0.5, -1.0, 2.0, 0.25], vec![0.1, 0.2]);
        let x = Tensor::new(vec![1, 1, 1, 2], vec![3.0, 4.0]).unwrap();
        let (_, tape) = g.forward(&x, Mode::Eval).unwrap();
        let go = Tensor::new(vec![1, 2], vec![1.5, -2.0]).unwrap();
        let grads = g.backward(&tape, &go).unwrap();
        let pg = grads.layers[1].as_ref().unwrap();
        assert_eq!(pg.weights, vec![4.5, 6.0, -6.0, -8.0]);
        assert_eq!(pg.bias, vec![1.5, -2.0]);
        // Wᵀ·g
        assert_eq!(grads.input.data(), &[0.5 * 1.5 + 2.0 * -2.0, -1.0 * 1.5 + 0.25 * -2.0]);
    }

    #[test]
    fn frozen_layers_still_propagate() {
        let mut g = single_dense(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 0.0]);
        g.freeze_all();
        let x = Tensor::new(vec![1, 1, 1, 2], vec![1.0, 1.0]).unwrap();
        let (_, tape) = g.forward(&x, Mode::Eval).unwrap();
        let grads = g.backward(&tape, &Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap()).unwrap();
        assert!(grads.is_empty());
        assert!(grads.tensors().is_empty());
        assert_eq!(grads.input.data(), &[4.0, 6.0]);
    }

    #[test]
    fn stale_tape_rejected() {
        let g = single_dense(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        let x = Tensor::new(vec![1, 1, 1, 2], vec![3.0, 4.0]).unwrap();
        let (_, tape) = g.forward(&x, Mode::Eval).unwrap();
        let other = preset("TINY", 0).unwrap();
        assert!(other.backward(&tape, &Tensor::zeros(vec![1, 2])).is_err());
        assert!(g.backward(&tape, &Tensor::zeros(vec![2, 2])).is_err());
    }

    #[test]
    fn softmax_uniform() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0).unwrap(), 0.0);
        assert!((cross_entropy(&[0.5, 0.5], 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[0.25, 0.75], 1).unwrap() - 0.287682).abs() < 1e-6);
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() - 1e12f64.ln()).abs() < 1e-9);
        assert!(matches!(cross_entropy(&[0.5, 0.5], 2), Err(Error::Index(_))));
    }

    #[test]
    fn cm2_shapes() {
        let g = preset("CM-2", 0).unwrap();
        let shapes = g.infer_shapes().unwrap();
        let flat = g
            .kinds()
            .iter()
            .position(|k| *k == LayerKind::Flatten)
            .unwrap();
        assert_eq!(shapes[flat], Shape::Flat(2048));
        assert_eq!(g.output_shape().unwrap(), Shape::Flat(2));
    }

    #[test]
    fn cm3_flatten_width() {
        let g = preset("CM-3", 0).unwrap();
        let shapes = g.infer_shapes().unwrap();
        let flat = g.kinds().iter().position(|k| *k == LayerKind::Flatten).unwrap();
        assert_eq!(shapes[flat], Shape::Flat(8192));
    }

    #[test]
    fn shape_error_names_layer() {
        let err = infer_shapes(&[LayerKind::dense(3, 2)], Shape::Flat(4)).unwrap_err();
        assert!(err.to_string().contains("layer 0 (Linear(3, 2))"), "{err}");
        // CM-1 as listed cannot be evaluated on 200x200 inputs.
        let err = preset("CM-1", 0).unwrap().infer_shapes().unwrap_err();
        assert!(err.to_string().contains("MaxPool2D(8, 1)"), "{err}");
    }

    #[test]
    fn dropout_modes() {
        let kinds = [LayerKind::Flatten, LayerKind::Dropout { p: 0.5 }];
        let g = LayerGraph::new("d", [1, 4, 4], &kinds, 0).unwrap();
        let x = Tensor::new(vec![1, 1, 4, 4], (0..16).map(f64::from).collect()).unwrap();
        assert_eq!(g.predict(&x).unwrap().data(), x.data());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (y, _) = g.forward(&x, Mode::Train(&mut rng)).unwrap();
        assert!(y.data().iter().zip(x.data()).all(|(a, b)| *a == 0.0 || *a == 2.0 * b));

        let kinds = [LayerKind::Flatten, LayerKind::Dropout { p: 0.0 }];
        let g = LayerGraph::new("d0", [1, 4, 4], &kinds, 0).unwrap();
        let (y, _) = g.forward(&x, Mode::Train(&mut rng)).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn invalid_layer_specs() {
        assert!(LayerKind::Dropout { p: 1.0 }.validate().is_err());
        assert!(LayerKind::conv(1, 0, 3, 1).validate().is_err());
        assert!(LayerKind::pool(2, 0).validate().is_err());
        assert!(LayerKind::dense(0, 2).validate().is_err());
    }

    #[test]
    fn param_count_closed_form() {
        let g = LayerGraph::new("d", [1, 4, 4], &[LayerKind::Flatten, LayerKind::dense(16, 2)], 0).unwrap();
        assert_eq!(g.param_count(), 34);
    }
}
