use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use qtl_core::harness::{config_hash, cross_validate, Checkpoint, CheckpointModel, FoldResult, Metrics, TrainConfig};
use qtl_core::surgery::{build_hybrid, param_report, ParamReport, QtlPreset};
use qtl_core::vqc::VqcConfig;
use serde::Serialize;

use super::DataSource;
use crate::config::{self, TrainOverrides};
use crate::out;
use crate::{Global, UsageError};

#[derive(Args)]
pub struct TransferArgs {
    /// Classical QTLC checkpoint to cut.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// QTLD dataset cache.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// QTL preset (QTL-M-1, QTL-M-2, QTL-M-3 or width-N).
    #[arg(long)]
    pub qtl: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Write the parameter report and stop before training.
    #[arg(long)]
    pub params_only: bool,
}

#[derive(Serialize)]
struct HashInput<'a> {
    base_config_hash: u64,
    base_seed: u64,
    preset: String,
    vqc: &'a VqcConfig,
    folds: usize,
    train: &'a TrainConfig,
}

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    seed: u64,
    train_size: usize,
    test_size: usize,
    #[serde(flatten)]
    metrics: Metrics,
}

#[derive(Serialize)]
struct MetricsFile {
    model: String,
    preset: String,
    config_hash: String,
    k: usize,
    mean_f1: f64,
    std_f1: f64,
    mean_accuracy: f64,
    best_fold: usize,
    folds: Vec<FoldSummary>,
    params: ParamReport,
}

fn best_fold(folds: &[FoldResult]) -> usize {
    (0..folds.len())
        .reduce(|b, i| {
            let (x, y) = (&folds[b].metrics, &folds[i].metrics);
            if y.f1 > x.f1 || (y.f1 == x.f1 && y.loss < x.loss) {
                i
            } else {
                b
            }
        })
        .unwrap_or(0)
}

fn print_params(r: &ParamReport) {
    println!("{} + {}: n_ip {}, {} qubits x {} layers", r.model, r.preset, r.n_inputs, r.n_qubits, r.n_layers);
    println!(
        "  classical total {} -> hybrid total {}",
        out::grouped(r.base_documented.unwrap_or(r.base_structural)),
        out::grouped(r.hybrid_total())
    );
    println!(
        "  replaced {} -> W_dqn {} (W_pre {}, W_VQC {}, W_post {})",
        out::grouped(r.replaced),
        out::grouped(r.w_dqn),
        out::grouped(r.w_pre),
        out::grouped(r.w_vqc),
        out::grouped(r.w_post)
    );
    println!("  reduction_total {:.2}%, reduction_replaced {:.2}%", r.reduction_total(), r.reduction_replaced);
    if r.base_documented.is_some() {
        println!(
            "  structural basis: {} -> {} ({:.2}%)",
            out::grouped(r.base_structural),
            out::grouped(r.hybrid_structural),
            r.reduction_total_structural
        );
    }
}

pub fn run(g: &Global, a: TransferArgs) -> Result<()> {
    let cfg = config::load(g.config.as_deref())?;
    let mut q = cfg.qtl.clone();
    if let Some(p) = a.qtl {
        q.preset = p;
    }
    if let Some(n) = a.qubits {
        q.qubits = n;
    }
    if let Some(n) = a.layers {
        q.layers = n;
    }
    let folds = a.folds.unwrap_or(q.folds);
    let preset: QtlPreset = q.preset()?;
    let vqc = q.vqc()?;
    let flags = TrainOverrides {
        batch_size: a.batch_size,
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: g.seed,
        ..Default::default()
    };
    let train = q.train.merged(&flags).apply(TrainConfig::hybrid());
    train.validate().map_err(|e| UsageError(e.to_string()))?;
    if folds < 2 {
        return Err(UsageError(format!("need at least 2 folds, got {folds}")).into());
    }
    let ckpt_path = a
        .checkpoint
        .or(cfg.model.checkpoint.clone())
        .ok_or_else(|| UsageError("no classical checkpoint (use --checkpoint or [model] checkpoint)".into()))?;
    out::require(&ckpt_path, "checkpoint")?;
    let source = if a.params_only { None } else { Some(DataSource::resolve(a.dataset.as_deref(), &cfg)?) };
    let dir = g
        .out
        .clone()
        .or(cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs/transfer"));

    let base = Checkpoint::load(&ckpt_path).with_context(|| format!("loading {}", ckpt_path.display()))?;
    let graph = match &base.model {
        CheckpointModel::Classical(g) => g.clone(),
        CheckpointModel::Hybrid(_) => {
            return Err(UsageError(format!("{} is already a hybrid checkpoint", ckpt_path.display())).into())
        }
    };
    let report = param_report(&graph.name, &graph.kinds(), preset, &vqc)?;
    out::ensure_dir(&dir)?;
    out::write_json(&dir.join("params.json"), &report)?;

    let Some(source) = source else {
        if g.json {
            return out::print_json(&report);
        }
        print_params(&report);
        return Ok(());
    };

    let ds = source.load()?;
    train.check_train_size(ds.len() - ds.len().div_ceil(folds))?;
    let hash = config_hash(&HashInput {
        base_config_hash: base.config_hash,
        base_seed: base.seed,
        preset: preset.to_string(),
        vqc: &vqc,
        folds,
        train: &train,
    });
    let (cv, models) = cross_validate(|_, seed| build_hybrid(&graph, preset, vqc.clone(), seed), &ds, folds, &train)?;
    let best = best_fold(&cv.folds);

    for f in &cv.folds {
        out::write(&dir.join(format!("fold_{}.csv", f.fold)), f.record.to_csv(train.normalize_loss).as_bytes())?;
    }
    let hybrid = Checkpoint {
        model: CheckpointModel::Hybrid(models.into_iter().nth(best).expect("one model per fold")),
        seed: cv.folds[best].seed,
        config_hash: hash,
        epochs: train.epochs as u32,
    };
    hybrid.save(&dir.join("hybrid.qtlc"))?;
    let summary = MetricsFile {
        model: graph.name.clone(),
        preset: preset.to_string(),
        config_hash: format!("{hash:016x}"),
        k: cv.k,
        mean_f1: cv.mean_f1,
        std_f1: cv.std_f1,
        mean_accuracy: cv.mean_accuracy,
        best_fold: best,
        folds: cv
            .folds
            .iter()
            .map(|f| FoldSummary {
                fold: f.fold,
                seed: f.seed,
                train_size: f.train_size,
                test_size: f.test_size,
                metrics: f.metrics.clone(),
            })
            .collect(),
        params: report,
    };
    out::write_json(&dir.join("metrics.json"), &summary)?;
    out::sidecar(
        &dir.join("run.log"),
        &format!("transfer model={} preset={preset} folds={folds} config_hash={hash:016x}", graph.name),
    )?;

    if g.json {
        return out::print_json(&summary);
    }
    print_params(&summary.params);
    for f in &summary.folds {
        println!("  fold {} (seed {}): accuracy {:.4}, F1 {:.4}", f.fold, f.seed, f.metrics.accuracy, f.metrics.f1);
    }
    println!("mean F1 {:.4} (std {:.4}), mean accuracy {:.4}", cv.mean_f1, cv.std_f1, cv.mean_accuracy);
    Ok(())
}
