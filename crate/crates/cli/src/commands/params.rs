use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use qtl_core::autonet::{documented_param_count, infer_shapes, preset_input, preset_layers, LayerKind, Shape};
use qtl_core::harness::Checkpoint;
use qtl_core::surgery::{param_report, ParamReport};
use serde::Serialize;

use crate::config;
use crate::out;
use crate::Global;

#[derive(Args)]
pub struct ParamsArgs {
    /// Model preset name or path to a QTLC checkpoint.
    pub model: String,
    /// Also account for replacing the tail with a dressed quantum head.
    #[arg(long)]
    pub qtl: Option<String>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
}

#[derive(Serialize)]
struct LayerRow {
    index: usize,
    layer: String,
    output: Option<String>,
    params: usize,
}

#[derive(Serialize)]
struct Table {
    model: String,
    input: [usize; 3],
    layers: Vec<LayerRow>,
    total: usize,
    documented_total: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qtl: Option<ParamReport>,
}

fn describe(k: &LayerKind) -> String {
    match *k {
        LayerKind::Conv2d { in_ch, out_ch, kernel, stride } => {
            format!("Conv2D {in_ch}->{out_ch} k{kernel} s{stride}")
        }
        LayerKind::MaxPool2d { kernel, stride } => format!("MaxPool2D k{kernel} s{stride}"),
        LayerKind::Flatten => "Flatten".into(),
        LayerKind::Dense { in_dim, out_dim } => format!("Dense {in_dim}->{out_dim}"),
        LayerKind::Dropout { p } => format!("Dropout {p}"),
        LayerKind::Activation(a) => format!("{a:?}"),
    }
}

fn resolve(model: &str) -> Result<(String, [usize; 3], Vec<LayerKind>)> {
    let path = Path::new(model);
    if path.is_file() {
        let ckpt = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        let g = ckpt.model.graph();
        let mut kinds = g.kinds();
        if let qtl_core::harness::CheckpointModel::Hybrid(h) = &ckpt.model {
            // the head is reported separately below the prefix rows
            kinds.truncate(h.plan.cut_index);
        }
        return Ok((g.name.clone(), g.input, kinds));
    }
    let kinds = preset_layers(model)?;
    Ok((model.to_string(), preset_input(model).expect("preset input"), kinds))
}

pub fn run(g: &Global, a: ParamsArgs) -> Result<()> {
    let cfg = config::load(g.config.as_deref())?;
    let (name, input, kinds) = resolve(&a.model)?;
    let [c, h, w] = input;
    let mut failed = false;
    let layers: Vec<LayerRow> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let output = if failed {
                None
            } else {
                match infer_shapes(&kinds[..=i], Shape::Image { c, h, w }) {
                    Ok(s) => s.last().map(|s| s.to_string()),
                    Err(_) => {
                        failed = true;
                        None
                    }
                }
            };
            LayerRow { index: i, layer: describe(k), output, params: k.param_count() }
        })
        .collect();
    let total: usize = layers.iter().map(|r| r.params).sum();
    let documented_total = documented_param_count(&name);
    let note = match documented_total {
        Some(d) if d != total => Some(format!(
            "published total for {name} is {}; the listed layers give {} (difference {}){}",
            out::grouped(d),
            out::grouped(total),
            out::grouped(total.abs_diff(d)),
            if failed { ", and their shapes do not chain at the stated input size" } else { "" }
        )),
        _ => None,
    };

    let qtl = match a.qtl {
        Some(p) => {
            let mut q = cfg.qtl.clone();
            q.preset = p;
            if let Some(n) = a.qubits {
                q.qubits = n;
            }
            if let Some(n) = a.layers {
                q.layers = n;
            }
            Some(param_report(&name, &kinds, q.preset()?, &q.vqc()?)?)
        }
        None => None,
    };

    let table = Table { model: name, input, layers, total, documented_total, note, qtl };
    if g.json {
        return out::print_json(&table);
    }
    println!("{} (input {c}x{h}x{w})", table.model);
    println!("{:>4}  {:<24} {:>14} {:>12}", "#", "layer", "output", "params");
    for r in &table.layers {
        println!(
            "{:>4}  {:<24} {:>14} {:>12}",
            r.index,
            r.layer,
            r.output.as_deref().unwrap_or("-"),
            out::grouped(r.params)
        );
    }
    println!("total {}", out::grouped(table.total));
    if let Some(n) = &table.note {
        println!("note: {n}");
    }
    if let Some(r) = &table.qtl {
        println!();
        println!("{} with {}: cut at n_ip = {}", table.model, r.preset, r.n_inputs);
        println!(
            "W_dqn = {} = W_pre {} + W_VQC {} + W_post {}",
            out::grouped(r.w_dqn),
            out::grouped(r.w_pre),
            out::grouped(r.w_vqc),
            out::grouped(r.w_post)
        );
        println!("replaced classical params {}", out::grouped(r.replaced));
        println!(
            "hybrid total {} (from {})",
            out::grouped(r.hybrid_total()),
            out::grouped(r.base_documented.unwrap_or(r.base_structural))
        );
        println!("reduction_replaced {:.2}%", r.reduction_replaced);
        println!("reduction_total {:.2}%", r.reduction_total());
        if r.base_documented.is_some() {
            println!(
                "structural basis: {} -> {} ({:.2}%)",
                out::grouped(r.base_structural),
                out::grouped(r.hybrid_structural),
                r.reduction_total_structural
            );
        }
    }
    Ok(())
}
