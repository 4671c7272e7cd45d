//! `QTLC` checkpoints: little-endian header, a self-describing layer table,
//! an optional dressed-head section, then raw f64 tensors.

use std::path::Path;

use crate::autonet::{Activation, Layer, LayerGraph, LayerKind};
use crate::dressed::DressedQuantumNet;
use crate::error::{Error, Result};
use crate::surgery::{CutPlan, HybridModel, QtlPreset};
use crate::vqc::{OutputActivation, VqcConfig, VqcWeights};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"QTLC";
pub const CHECKPOINT_VERSION: u16 = 1;
const WHAT: &str = "checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub enum CheckpointModel {
    Classical(LayerGraph),
    Hybrid(HybridModel),
}

impl CheckpointModel {
    pub fn param_count(&self) -> usize {
        match self {
            CheckpointModel::Classical(g) => g.param_count(),
            CheckpointModel::Hybrid(h) => h.param_count(),
        }
    }

    pub fn graph(&self) -> &LayerGraph {
        match self {
            CheckpointModel::Classical(g) => g,
            CheckpointModel::Hybrid(h) => &h.prefix,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: CheckpointModel,
    pub seed: u64,
    pub config_hash: u64,
    pub epochs: u32,
}

/// Fixed-position fields readable without decoding tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub version: u16,
    pub hybrid: bool,
    pub seed: u64,
    pub config_hash: u64,
    pub epochs: u32,
    pub param_count: u64,
    pub name: String,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|&v| self.f64(v));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::format(WHAT, format!("truncated while reading {field} at byte {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }
    fn u16(&mut self, field: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, field)?.try_into().unwrap()))
    }
    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }
    fn u64(&mut self, field: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, field)?.try_into().unwrap()))
    }
    fn usize(&mut self, field: &str) -> Result<usize> {
        usize::try_from(self.u64(field)?).map_err(|_| Error::format(WHAT, format!("{field} overflows")))
    }
    fn f64(&mut self, field: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, field)?.try_into().unwrap()))
    }
    fn bool(&mut self, field: &str) -> Result<bool> {
        match self.u8(field)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::format(WHAT, format!("{field} flag {v}"))),
        }
    }
    fn str(&mut self, field: &str) -> Result<String> {
        let n = self.u32(field)? as usize;
        let bytes = self.take(n, field)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::format(WHAT, format!("{field} is not UTF-8")))
    }
    fn f64s(&mut self, n: usize, field: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::format(WHAT, "tensor size overflows"))?, field)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn write_kind(w: &mut Writer, k: &LayerKind) {
    match *k {
        LayerKind::Conv2d { in_ch, out_ch, kernel, stride } => {
            w.u8(0);
            [in_ch, out_ch, kernel, stride].into_iter().for_each(|v| w.usize(v));
        }
        LayerKind::MaxPool2d { kernel, stride } => {
            w.u8(1);
            w.usize(kernel);
            w.usize(stride);
        }
        LayerKind::Flatten => w.u8(2),
        LayerKind::Dense { in_dim, out_dim } => {
            w.u8(3);
            w.usize(in_dim);
            w.usize(out_dim);
        }
        LayerKind::Dropout { p } => {
            w.u8(4);
            w.f64(p);
        }
        LayerKind::Activation(a) => {
            w.u8(5);
            w.u8(match a {
                Activation::Relu => 0,
                Activation::Tanh => 1,
                Activation::Softmax => 2,
            });
        }
    }
}

fn read_kind(r: &mut Reader) -> Result<LayerKind> {
    let kind = match r.u8("layer tag")? {
        0 => LayerKind::Conv2d {
            in_ch: r.usize("conv")?,
            out_ch: r.usize("conv")?,
            kernel: r.usize("conv")?,
            stride: r.usize("conv")?,
        },
        1 => LayerKind::MaxPool2d { kernel: r.usize("pool")?, stride: r.usize("pool")? },
        2 => LayerKind::Flatten,
        3 => LayerKind::Dense { in_dim: r.usize("dense")?, out_dim: r.usize("dense")? },
        4 => LayerKind::Dropout { p: r.f64("dropout")? },
        5 => LayerKind::Activation(match r.u8("activation")? {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            2 => Activation::Softmax,
            v => return Err(Error::format(WHAT, format!("activation code {v}"))),
        }),
        t => return Err(Error::format(WHAT, format!("layer tag {t}"))),
    };
    kind.validate().map_err(|e| Error::format(WHAT, e.to_string()))?;
    Ok(kind)
}

fn write_graph_table(w: &mut Writer, g: &LayerGraph) {
    g.input.iter().for_each(|&v| w.usize(v));
    w.u32(g.layers.len() as u32);
    for l in &g.layers {
        write_kind(w, &l.kind);
        w.u8(l.frozen as u8);
    }
}

fn read_graph_table(r: &mut Reader, name: String) -> Result<(LayerGraph, Vec<(usize, usize)>)> {
    let input = [r.usize("input")?, r.usize("input")?, r.usize("input")?];
    let n = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(n.min(1024));
    let mut shapes = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        let kind = read_kind(r)?;
        let frozen = r.bool("frozen")?;
        shapes.push(kind.param_shape());
        layers.push(Layer { kind, frozen, weights: Vec::new(), bias: Vec::new() });
    }
    Ok((LayerGraph { name, input, layers }, shapes))
}

fn preset_code(p: QtlPreset) -> (u8, u64) {
    match p {
        QtlPreset::M1 => (0, 0),
        QtlPreset::M2 => (1, 0),
        QtlPreset::M3 => (2, 0),
        QtlPreset::Custom(w) => (3, w as u64),
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(CHECKPOINT_MAGIC);
        w.0.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let hybrid = matches!(self.model, CheckpointModel::Hybrid(_));
        w.u8(hybrid as u8);
        w.u64(self.seed);
        w.u64(self.config_hash);
        w.u32(self.epochs);
        w.usize(self.model.param_count());
        let graph = self.model.graph();
        w.str(&graph.name);
        write_graph_table(&mut w, graph);
        if let CheckpointModel::Hybrid(h) = &self.model {
            let (code, width) = preset_code(h.plan.preset);
            w.u8(code);
            w.u64(width);
            let p = &h.plan;
            [p.cut_index, p.n_inputs, p.n_classes, p.replaced_params, p.prefix_params]
                .into_iter()
                .for_each(|v| w.usize(v));
            let c = &h.head.vqc;
            w.usize(c.n_qubits);
            w.usize(c.n_layers);
            c.ranges.iter().for_each(|&v| w.usize(v));
            w.u8(c.hadamard_prefix as u8);
            w.f64(c.input_scale);
            w.u8(matches!(c.output_activation, OutputActivation::Relu) as u8);
        }
        for l in &graph.layers {
            w.f64s(&l.weights);
            w.f64s(&l.bias);
        }
        if let CheckpointModel::Hybrid(h) = &self.model {
            h.head.tensors().iter().for_each(|t| w.f64s(t));
        }
        w.0
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        let header = read_header(&mut r)?;
        let (mut graph, shapes) = read_graph_table(&mut r, header.name.clone())?;
        let mut head_meta = None;
        if header.hybrid {
            let code = r.u8("preset")?;
            let width = r.usize("preset width")?;
            let preset = match code {
                0 => QtlPreset::M1,
                1 => QtlPreset::M2,
                2 => QtlPreset::M3,
                3 => QtlPreset::Custom(width),
                v => return Err(Error::format(WHAT, format!("preset code {v}"))),
            };
            let plan = CutPlan {
                preset,
                cut_index: r.usize("plan")?,
                n_inputs: r.usize("plan")?,
                n_classes: r.usize("plan")?,
                replaced_params: r.usize("plan")?,
                prefix_params: r.usize("plan")?,
            };
            let n_qubits = r.usize("qubits")?;
            let n_layers = r.usize("circuit layers")?;
            if n_layers > 1 << 16 {
                return Err(Error::format(WHAT, format!("{n_layers} circuit layers")));
            }
            let ranges = (0..n_layers).map(|_| r.usize("ranges")).collect::<Result<Vec<_>>>()?;
            let vqc = VqcConfig {
                n_qubits,
                n_layers,
                ranges,
                hadamard_prefix: r.bool("hadamard")?,
                input_scale: r.f64("input scale")?,
                output_activation: if r.bool("output activation")? {
                    OutputActivation::Relu
                } else {
                    OutputActivation::None
                },
            };
            vqc.validate().map_err(|e| Error::format(WHAT, e.to_string()))?;
            head_meta = Some((plan, vqc));
        }
        for (layer, (nw, nb)) in graph.layers.iter_mut().zip(shapes) {
            layer.weights = r.f64s(nw, "weights")?;
            layer.bias = r.f64s(nb, "bias")?;
        }
        let model = match head_meta {
            None => CheckpointModel::Classical(graph),
            Some((plan, vqc)) => {
                let (n_in, n_c, nq) = (plan.n_inputs, plan.n_classes, vqc.n_qubits);
                let pre_weights = r.f64s(nq * n_in, "head")?;
                let pre_bias = r.f64s(nq, "head")?;
                let angles = r.f64s(vqc.param_count(), "head")?;
                let post_weights = r.f64s(n_c * nq, "head")?;
                let post_bias = r.f64s(n_c, "head")?;
                let head = DressedQuantumNet {
                    n_inputs: n_in,
                    n_classes: n_c,
                    pre_weights,
                    pre_bias,
                    vqc_weights: VqcWeights::from_vec(vqc.n_layers, nq, angles)?,
                    vqc,
                    post_weights,
                    post_bias,
                };
                head.validate()?;
                CheckpointModel::Hybrid(HybridModel { prefix: graph, head, plan })
            }
        };
        if r.pos != bytes.len() {
            return Err(Error::format(WHAT, format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        if model.param_count() as u64 != header.param_count {
            return Err(Error::format(
                WHAT,
                format!("header counts {} parameters, tensors hold {}", header.param_count, model.param_count()),
            ));
        }
        Ok(Self { model, seed: header.seed, config_hash: header.config_hash, epochs: header.epochs })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn read_header(r: &mut Reader) -> Result<CheckpointHeader> {
    if r.take(4, "magic").ok() != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(Error::format(WHAT, "missing QTLC magic"));
    }
    let version = r.u16("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version { what: WHAT, found: version, expected: CHECKPOINT_VERSION });
    }
    Ok(CheckpointHeader {
        version,
        hybrid: r.bool("model kind")?,
        seed: r.u64("seed")?,
        config_hash: r.u64("config hash")?,
        epochs: r.u32("epochs")?,
        param_count: r.u64("parameter count")?,
        name: r.str("name")?,
    })
}

/// Reads only the header fields.
pub fn peek_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    read_header(&mut Reader { buf: bytes, pos: 0 })
}
