//! Cutting a trained classical network and grafting a dressed quantum head.
//!
//! A cut is named by the width of the dense layer the head replaces: the
//! prefix keeps every layer up to (but excluding) the first dense layer whose
//! input width matches, and the head takes that width as its input.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autonet::{documented_param_count, preset_layers, LayerGraph, LayerKind, Mode, Shape, Tensor};
use crate::dressed::{dqn_param_count, DressedQuantumNet};
use crate::error::{Error, Result};
use crate::vqc::VqcConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QtlPreset {
    /// Replace the tail from the 64-wide dense layer.
    M1,
    /// Replace the tail from the 128-wide dense layer.
    M2,
    /// Replace every dense layer after flatten.
    M3,
    /// Replace the tail from the first dense layer with this input width.
    Custom(usize),
}

impl QtlPreset {
    pub const ALL: [QtlPreset; 3] = [QtlPreset::M1, QtlPreset::M2, QtlPreset::M3];
}

impl fmt::Display for QtlPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QtlPreset::M1 => f.write_str("QTL-M-1"),
            QtlPreset::M2 => f.write_str("QTL-M-2"),
            QtlPreset::M3 => f.write_str("QTL-M-3"),
            QtlPreset::Custom(w) => write!(f, "width-{w}"),
        }
    }
}

impl FromStr for QtlPreset {
    type Err = Error;

    /// Accepts `QTL-M-1`, `M1`, `1` (and likewise for 2 and 3) or `width-N`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("QTL-").unwrap_or(&t);
        match t.replace('-', "").as_str() {
            "M1" | "1" => return Ok(QtlPreset::M1),
            "M2" | "2" => return Ok(QtlPreset::M2),
            "M3" | "3" => return Ok(QtlPreset::M3),
            _ => {}
        }
        if let Some(w) = t.strip_prefix("WIDTH-").and_then(|w| w.parse().ok()) {
            return Ok(QtlPreset::Custom(w));
        }
        Err(Error::Config(format!(
            "unknown QTL preset {s:?} (expected QTL-M-1, QTL-M-2, QTL-M-3 or width-N)"
        )))
    }
}

/// Where a network is cut and what the head replaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPlan {
    pub preset: QtlPreset,
    /// Index of the first replaced layer; the prefix is `layers[..cut_index]`.
    pub cut_index: usize,
    /// Input width of the dressed head.
    pub n_inputs: usize,
    /// Output width of the replaced tail.
    pub n_classes: usize,
    pub replaced_params: usize,
    pub prefix_params: usize,
}

fn dense_inputs(kinds: &[LayerKind]) -> impl Iterator<Item = (usize, usize)> + '_ {
    kinds.iter().enumerate().filter_map(|(i, k)| match *k {
        LayerKind::Dense { in_dim, .. } => Some((i, in_dim)),
        _ => None,
    })
}

pub fn plan_cut(kinds: &[LayerKind], preset: QtlPreset) -> Result<CutPlan> {
    let found = match preset {
        QtlPreset::M1 => dense_inputs(kinds).find(|&(_, w)| w == 64),
        QtlPreset::M2 => dense_inputs(kinds).find(|&(_, w)| w == 128),
        QtlPreset::Custom(width) => dense_inputs(kinds).find(|&(_, w)| w == width),
        QtlPreset::M3 => {
            let flat = kinds.iter().position(|k| *k == LayerKind::Flatten);
            flat.and_then(|f| dense_inputs(kinds).find(|&(i, _)| i > f))
        }
    };
    let (cut_index, n_inputs) = found.ok_or_else(|| {
        let widths: Vec<String> = dense_inputs(kinds).map(|(_, w)| w.to_string()).collect();
        Error::Config(format!(
            "no cut point for {preset}; dense input widths available: [{}]",
            widths.join(", ")
        ))
    })?;
    let n_classes = kinds
        .iter()
        .rev()
        .find_map(|k| match *k {
            LayerKind::Dense { out_dim, .. } => Some(out_dim),
            _ => None,
        })
        .expect("a cut point implies a dense layer");
    let count = |ks: &[LayerKind]| ks.iter().map(LayerKind::param_count).sum::<usize>();
    Ok(CutPlan {
        preset,
        cut_index,
        n_inputs,
        n_classes,
        replaced_params: count(&kinds[cut_index..]),
        prefix_params: count(&kinds[..cut_index]),
    })
}

/// Percentage of the replaced block saved by the head.
pub fn reduction_replaced(replaced: usize, w_dqn: usize) -> Result<f64> {
    if replaced == 0 {
        return Err(Error::Config("replaced block has no parameters".into()));
    }
    Ok(100.0 * (1.0 - w_dqn as f64 / replaced as f64))
}

/// Percentage of the whole network saved by the swap.
pub fn reduction_total(base_total: usize, hybrid_total: usize) -> Result<f64> {
    if base_total == 0 {
        return Err(Error::Config("base network has no parameters".into()));
    }
    Ok(100.0 * (1.0 - hybrid_total as f64 / base_total as f64))
}

/// Parameter bookkeeping for one network/cut pair.
///
/// `*_documented` fields use the published total as the base where one
/// exists and it differs from the structural count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub model: String,
    pub preset: String,
    pub n_inputs: usize,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub n_classes: usize,
    pub base_structural: usize,
    pub base_documented: Option<usize>,
    pub replaced: usize,
    pub w_pre: usize,
    pub w_vqc: usize,
    pub w_post: usize,
    pub w_dqn: usize,
    pub hybrid_structural: usize,
    pub hybrid_documented: Option<usize>,
    pub reduction_replaced: f64,
    pub reduction_total_structural: f64,
    pub reduction_total_documented: Option<f64>,
}

impl ParamReport {
    /// Hybrid total on the documented basis when available.
    pub fn hybrid_total(&self) -> usize {
        self.hybrid_documented.unwrap_or(self.hybrid_structural)
    }

    pub fn reduction_total(&self) -> f64 {
        self.reduction_total_documented.unwrap_or(self.reduction_total_structural)
    }
}

pub fn param_report(model: &str, kinds: &[LayerKind], preset: QtlPreset, vqc: &VqcConfig) -> Result<ParamReport> {
    vqc.validate()?;
    let plan = plan_cut(kinds, preset)?;
    let (nq, nd) = (vqc.n_qubits, vqc.n_layers);
    let w_pre = plan.n_inputs * nq + nq;
    let w_vqc = vqc.param_count();
    let w_post = nq * plan.n_classes + plan.n_classes;
    let w_dqn = dqn_param_count(plan.n_inputs, nq, nd, plan.n_classes);
    debug_assert_eq!(w_dqn, w_pre + w_vqc + w_post);
    let base_structural = plan.prefix_params + plan.replaced_params;
    let hybrid_structural = plan.prefix_params + w_dqn;
    let base_documented = documented_param_count(model).filter(|&d| d != base_structural);
    let hybrid_documented = base_documented.map(|d| d - plan.replaced_params + w_dqn);
    let reduction_total_documented = match (base_documented, hybrid_documented) {
        (Some(b), Some(h)) => Some(reduction_total(b, h)?),
        _ => None,
    };
    Ok(ParamReport {
        model: model.to_string(),
        preset: preset.to_string(),
        n_inputs: plan.n_inputs,
        n_qubits: nq,
        n_layers: nd,
        n_classes: plan.n_classes,
        base_structural,
        base_documented,
        replaced: plan.replaced_params,
        w_pre,
        w_vqc,
        w_post,
        w_dqn,
        hybrid_structural,
        hybrid_documented,
        reduction_replaced: reduction_replaced(plan.replaced_params, w_dqn)?,
        reduction_total_structural: reduction_total(base_structural, hybrid_structural)?,
        reduction_total_documented,
    })
}

pub fn preset_param_report(model: &str, preset: QtlPreset, vqc: &VqcConfig) -> Result<ParamReport> {
    param_report(model, &preset_layers(model)?, preset, vqc)
}

/// Frozen classical prefix followed by a trainable dressed quantum head.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridModel {
    pub prefix: LayerGraph,
    pub head: DressedQuantumNet,
    pub plan: CutPlan,
}

impl HybridModel {
    /// Prefix activations in evaluation mode, one row per sample.
    pub fn features(&self, batch: &Tensor) -> Result<Tensor> {
        if !self.prefix.all_frozen() {
            return Err(Error::Config(format!(
                "prefix of {} has trainable layers; hybrid training needs a frozen prefix",
                self.prefix.name
            )));
        }
        Ok(self.prefix.forward(batch, Mode::Eval)?.0)
    }

    pub fn predict(&self, batch: &Tensor) -> Result<Vec<Vec<f64>>> {
        let feats = self.features(batch)?;
        (0..feats.batch()).map(|i| self.head.predict(feats.sample(i))).collect()
    }

    pub fn param_count(&self) -> usize {
        self.prefix.param_count() + self.head.param_count()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.prefix.trainable_param_count() + self.head.param_count()
    }
}

/// Copies the prefix of `base` verbatim, freezes it and attaches a fresh head.
pub fn build_hybrid(base: &LayerGraph, preset: QtlPreset, vqc: VqcConfig, seed: u64) -> Result<HybridModel> {
    let plan = plan_cut(&base.kinds(), preset)?;
    let mut prefix = base.slice(format!("{}-prefix", base.name), base.input, 0..plan.cut_index);
    prefix.freeze_all();
    let out = prefix.output_shape()?;
    if out != Shape::Flat(plan.n_inputs) {
        return Err(Error::Shape(format!(
            "prefix of {} ends in {out}, head expects {}",
            base.name, plan.n_inputs
        )));
    }
    let head = DressedQuantumNet::new(plan.n_inputs, vqc, plan.n_classes, seed)?;
    Ok(HybridModel { prefix, head, plan })
}
