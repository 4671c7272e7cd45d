//! Architecture presets. ReLU follows every convolution and every hidden dense
//! layer; softmax follows the output layer.

use super::{Activation, LayerGraph, LayerKind};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = ["CM-1", "CM-2", "CM-3", "TINY"];

const RELU: LayerKind = LayerKind::Activation(Activation::Relu);
const SOFTMAX: LayerKind = LayerKind::Activation(Activation::Softmax);

fn drop(p: f64) -> LayerKind {
    LayerKind::Dropout { p }
}

fn conv_block(in_ch: usize, out_ch: usize, k: usize, s: usize) -> [LayerKind; 2] {
    [LayerKind::conv(in_ch, out_ch, k, s), RELU]
}

fn layers(name: &str) -> Option<Vec<LayerKind>> {
    use LayerKind as L;
    let v = match name {
        "CM-1" => [
            &conv_block(1, 32, 32, 2)[..],
            &[L::pool(8, 1)],
            &conv_block(32, 64, 16, 2),
            &[L::pool(8, 1)],
            &conv_block(64, 128, 16, 2),
            &[L::pool(8, 1)],
            &conv_block(128, 128, 2, 1),
            &[L::pool(8, 2), L::Flatten],
            &[L::dense(3200, 128), RELU, drop(0.5)],
            &[L::dense(128, 64), RELU, drop(0.25)],
            &[L::dense(64, 32), RELU, drop(0.12)],
            &[L::dense(32, 16), RELU],
            &[L::dense(16, 2), SOFTMAX],
        ]
        .concat(),
        "CM-2" => [
            &conv_block(1, 32, 4, 2)[..],
            &[L::pool(4, 2)],
            &conv_block(32, 64, 8, 2),
            &[L::pool(2, 2)],
            &conv_block(64, 128, 4, 2),
            &[L::Flatten],
            &[L::dense(2048, 128), RELU, drop(0.5)],
            &[L::dense(128, 64), RELU, drop(0.25)],
            &[L::dense(64, 16), RELU],
            &[L::dense(16, 2), SOFTMAX],
        ]
        .concat(),
        "CM-3" => [
            &conv_block(1, 32, 8, 2)[..],
            &[L::pool(4, 2)],
            &conv_block(32, 64, 4, 2),
            &[L::pool(4, 1)],
            &conv_block(64, 128, 2, 1),
            &[L::pool(4, 2), L::Flatten],
            &[L::dense(8192, 128), RELU, drop(0.5)],
            &[L::dense(128, 64), RELU, drop(0.25)],
            &[L::dense(64, 16), RELU],
            &[L::dense(16, 2), SOFTMAX],
        ]
        .concat(),
        // desk-scale model for 32x32 inputs: 32 -> 15 -> 7 -> 5, flatten 16*5*5 = 400
        "TINY" => [
            &conv_block(1, 8, 4, 2)[..],
            &[L::pool(2, 2)],
            &conv_block(8, 16, 3, 1),
            &[L::Flatten],
            &[L::dense(400, 64), RELU, drop(0.25)],
            &[L::dense(64, 16), RELU],
            &[L::dense(16, 2), SOFTMAX],
        ]
        .concat(),
        _ => return None,
    };
    Some(v)
}

/// Per-sample input shape the preset was designed for.
pub fn preset_input(name: &str) -> Option<[usize; 3]> {
    match name {
        "CM-1" | "CM-2" | "CM-3" => Some([1, 200, 200]),
        "TINY" => Some([1, 32, 32]),
        _ => None,
    }
}

/// Parameter totals as published for the CM presets.
///
/// CM-2 and CM-3 agree with the structural count. CM-1's published figure
/// (1,076,338) cannot come from its listed layers; its third convolution alone
/// holds 2,097,280 parameters.
pub fn documented_param_count(name: &str) -> Option<usize> {
    match name {
        "CM-1" => Some(1_076_338),
        "CM-2" => Some(534_482),
        "CM-3" => Some(1_125_842),
        _ => None,
    }
}

/// Layer list of a preset without allocating any weights.
pub fn preset_layers(name: &str) -> Result<Vec<LayerKind>> {
    layers(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown model preset {name:?} (known: {})",
            PRESET_NAMES.join(", ")
        ))
    })
}

pub fn preset(name: &str, seed: u64) -> Result<LayerGraph> {
    let kinds = preset_layers(name)?;
    let input = preset_input(name).expect("every preset has an input shape");
    LayerGraph::new(name, input, &kinds, seed)
}
