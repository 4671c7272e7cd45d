use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use qtl_core::autonet::preset_layers;
use qtl_core::harness::{config_hash, train_classical, Checkpoint, CheckpointModel, Metrics, TrainConfig};
use serde::Serialize;

use super::DataSource;
use crate::config::{self, TrainOverrides};
use crate::out;
use crate::{Global, UsageError};

#[derive(Args)]
pub struct TrainArgs {
    /// QTLD dataset cache.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Model preset (CM-1, CM-2, CM-3, TINY).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Serialize)]
struct HashInput<'a> {
    preset: &'a str,
    train: &'a TrainConfig,
}

#[derive(Serialize)]
struct RestartSummary {
    restart: usize,
    seed: u64,
    #[serde(flatten)]
    metrics: Metrics,
}

#[derive(Serialize)]
struct MetricsFile {
    preset: String,
    config_hash: String,
    best_restart: usize,
    seed: u64,
    epochs: usize,
    train_size: usize,
    test_size: usize,
    #[serde(flatten)]
    metrics: Metrics,
    restarts: Vec<RestartSummary>,
}

pub fn run(g: &Global, a: TrainArgs) -> Result<()> {
    let cfg = config::load(g.config.as_deref())?;
    let flags = TrainOverrides {
        batch_size: a.batch_size,
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: g.seed,
        restarts: a.restarts,
        test_fraction: a.test_fraction,
        ..Default::default()
    };
    let train = cfg.train.merged(&flags).apply(TrainConfig::classical());
    train.validate().map_err(|e| UsageError(e.to_string()))?;
    let preset = a
        .preset
        .or(cfg.model.preset.clone())
        .ok_or_else(|| UsageError("no model preset (use --preset or [model] preset)".into()))?;
    preset_layers(&preset)?;
    let source = DataSource::resolve(a.dataset.as_deref(), &cfg)?;
    let dir = g
        .out
        .clone()
        .or(cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs/classical"));

    let ds = source.load()?;
    let outcome = train_classical(&preset, &ds, &train)?;
    let hash = config_hash(&HashInput { preset: &preset, train: &train });
    let best = &outcome.runs[outcome.best_index];

    out::ensure_dir(&dir)?;
    for (r, run) in outcome.runs.iter().enumerate() {
        out::write(&dir.join(format!("restart_{r}.csv")), run.record.to_csv(train.normalize_loss).as_bytes())?;
    }
    let ckpt = Checkpoint {
        model: CheckpointModel::Classical(outcome.best.clone()),
        seed: best.seed,
        config_hash: hash,
        epochs: train.epochs as u32,
    };
    ckpt.save(&dir.join("model.qtlc"))?;
    let summary = MetricsFile {
        preset: preset.clone(),
        config_hash: format!("{hash:016x}"),
        best_restart: outcome.best_index,
        seed: best.seed,
        epochs: train.epochs,
        train_size: outcome.split.train.len(),
        test_size: outcome.split.test.len(),
        metrics: best.metrics.clone(),
        restarts: outcome
            .runs
            .iter()
            .enumerate()
            .map(|(restart, r)| RestartSummary { restart, seed: r.seed, metrics: r.metrics.clone() })
            .collect(),
    };
    out::write_json(&dir.join("metrics.json"), &summary)?;
    out::sidecar(
        &dir.join("run.log"),
        &format!("train-classical preset={preset} config_hash={hash:016x} restarts={}", train.restarts),
    )?;

    if g.json {
        return out::print_json(&summary);
    }
    println!("{preset}: {} restarts on {} train / {} test samples", train.restarts, summary.train_size, summary.test_size);
    for r in &summary.restarts {
        println!("  restart {} (seed {}): accuracy {:.4}, F1 {:.4}, loss {:.4}", r.restart, r.seed, r.metrics.accuracy, r.metrics.f1, r.metrics.loss);
    }
    println!("best restart {} -> {}", outcome.best_index, dir.join("model.qtlc").display());
    Ok(())
}
