pub mod dataset;
pub mod params;
pub mod report;
pub mod train;
pub mod transfer;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qtl_core::datapipe::{
    build_binary_dataset, corpus_dirs, load_annotated_dir, read_cache, synth_dataset, BuildConfig, BuildSummary,
    Dataset, LoadReport, MiningConfig,
};

use crate::config::{DatasetSection, RunConfig, Source};
use crate::out;
use crate::UsageError;

/// Where training data comes from once flags and config are merged.
pub enum DataSource {
    Cache(PathBuf),
    Synthetic { n_per_class: usize, size: usize, seed: u64 },
    NeuDet { root: PathBuf, section: DatasetSection },
}

impl DataSource {
    /// `--dataset` wins over the config file.
    pub fn resolve(flag: Option<&Path>, cfg: &RunConfig) -> Result<Self> {
        if let Some(p) = flag {
            return Ok(DataSource::Cache(out::require(p, "dataset cache")?));
        }
        let d = &cfg.dataset;
        match d.source {
            Source::Synthetic => Ok(DataSource::Synthetic {
                n_per_class: d.n_per_class,
                size: d.image_size,
                seed: d.seed,
            }),
            Source::Cache => {
                let p = d
                    .path
                    .as_deref()
                    .ok_or_else(|| UsageError("dataset.source = \"cache\" needs dataset.path".into()))?;
                Ok(DataSource::Cache(out::require(p, "dataset cache")?))
            }
            Source::NeuDet => {
                let p = d
                    .path
                    .as_deref()
                    .ok_or_else(|| UsageError("dataset.source = \"neu-det\" needs dataset.path".into()))?;
                Ok(DataSource::NeuDet {
                    root: out::require(p, "NEU-DET root")?,
                    section: d.clone(),
                })
            }
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Cache(p) => read_cache(p).with_context(|| format!("reading dataset cache {}", p.display())),
            DataSource::Synthetic { n_per_class, size, seed } => Ok(synth_dataset(*n_per_class, *size, *seed)?),
            DataSource::NeuDet { root, section } => Ok(build_neu_det(root, section)?.0),
        }
    }
}

pub fn build_neu_det(root: &Path, d: &DatasetSection) -> Result<(Dataset, BuildSummary, LoadReport)> {
    let (images_dir, ann_dir) = corpus_dirs(root)?;
    let (images, report) = load_annotated_dir(&images_dir, &ann_dir)?;
    let cfg = BuildConfig {
        dropped_classes: d.dropped.clone(),
        mining: MiningConfig { min_patch: d.min_patch, ..MiningConfig::new(d.target_size) },
        seed: d.seed,
    };
    let (ds, summary) = build_binary_dataset(&images, &cfg)?;
    Ok((ds, summary, report))
}
