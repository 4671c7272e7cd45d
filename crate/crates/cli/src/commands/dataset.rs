use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use qtl_core::datapipe::{encode_dataset, encode_pgm, luminance, read_cache, synth_dataset, GrayImage};
use serde::Serialize;

use super::build_neu_det;
use crate::config::{self, DatasetSection};
use crate::out;
use crate::{Global, UsageError};

#[derive(Subcommand)]
pub enum DatasetCmd {
    /// Build a QTLD cache from a NEU-DET corpus or the synthetic generator.
    Build(BuildArgs),
    /// Print class balance, shape and normalization statistics of a cache.
    Inspect { path: PathBuf },
    /// Convert a JPEG/PNG image to 8-bit PGM.
    Convert { src: PathBuf, dst: PathBuf },
}

#[derive(Args)]
pub struct BuildArgs {
    /// Synthetic generator settings as key=value pairs: n (per class), size, seed.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE", conflicts_with = "neu_det")]
    pub synthetic: Option<Vec<String>>,
    /// NEU-DET root containing IMAGES/ and ANNOTATIONS/.
    #[arg(long)]
    pub neu_det: Option<PathBuf>,
    /// Classes to drop (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub drop: Option<Vec<String>>,
    #[arg(long)]
    pub target_size: Option<usize>,
    #[arg(long)]
    pub min_patch: Option<usize>,
}

#[derive(Serialize)]
struct Summary {
    path: PathBuf,
    samples: usize,
    normal: usize,
    anomalous: usize,
    height: usize,
    width: usize,
    mean: f64,
    std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    corpus: Option<CorpusSummary>,
}

#[derive(Serialize)]
struct CorpusSummary {
    loaded: usize,
    skipped: usize,
    retained_images: usize,
    dropped_images: usize,
    mined_patches: usize,
}

fn parse_synthetic(pairs: &[String], d: &mut DatasetSection) -> Result<()> {
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| UsageError(format!("expected key=value, got {pair:?}")))?;
        let bad = |_| UsageError(format!("invalid value for {k}: {v:?}"));
        match k {
            "n" => d.n_per_class = v.parse().map_err(bad)?,
            "size" => d.image_size = v.parse().map_err(bad)?,
            "seed" => d.seed = v.parse().map_err(bad)?,
            _ => return Err(UsageError(format!("unknown synthetic key {k:?} (n, size, seed)")).into()),
        }
    }
    Ok(())
}

pub fn run(g: &Global, cmd: DatasetCmd) -> Result<()> {
    match cmd {
        DatasetCmd::Build(a) => build(g, a),
        DatasetCmd::Inspect { path } => inspect(g, &path),
        DatasetCmd::Convert { src, dst } => convert(g, &src, &dst),
    }
}

fn build(g: &Global, a: BuildArgs) -> Result<()> {
    let cfg = config::load(g.config.as_deref())?;
    let mut d = cfg.dataset.clone();
    if let Some(drop) = a.drop {
        d.dropped = drop;
    }
    if let Some(t) = a.target_size {
        d.target_size = t;
    }
    if let Some(m) = a.min_patch {
        d.min_patch = m;
    }
    let dest = g.out.clone().unwrap_or_else(|| PathBuf::from("dataset.qtld"));

    let (ds, corpus) = if let Some(root) = a.neu_det.as_deref().or(match (&a.synthetic, d.source) {
        (None, config::Source::NeuDet) => d.path.as_deref(),
        _ => None,
    }) {
        out::require(root, "NEU-DET root")?;
        if let Some(s) = g.seed {
            d.seed = s;
        }
        let (ds, s, report) = build_neu_det(root, &d)?;
        let corpus = CorpusSummary {
            loaded: report.loaded,
            skipped: report.failures.len(),
            retained_images: s.retained_images,
            dropped_images: s.dropped_images,
            mined_patches: s.mined_patches,
        };
        (ds, Some(corpus))
    } else {
        if a.synthetic.is_none() && d.source == config::Source::Cache {
            return Err(UsageError("dataset build needs --synthetic or --neu-det".into()).into());
        }
        parse_synthetic(a.synthetic.as_deref().unwrap_or(&[]), &mut d)?;
        if let Some(s) = g.seed {
            d.seed = s;
        }
        (synth_dataset(d.n_per_class, d.image_size, d.seed)?, None)
    };

    out::write(&dest, &encode_dataset(&ds))?;
    let (normal, anomalous) = ds.class_counts();
    let summary = Summary {
        path: dest,
        samples: ds.len(),
        normal,
        anomalous,
        height: ds.height(),
        width: ds.width(),
        mean: ds.mean(),
        std: ds.std(),
        corpus,
    };
    if g.json {
        return out::print_json(&summary);
    }
    println!("wrote {} ({} samples, {}x{})", summary.path.display(), summary.samples, ds.height(), ds.width());
    println!("normal {normal}, anomalous {anomalous}");
    if let Some(c) = &summary.corpus {
        println!(
            "corpus: {} loaded, {} skipped, {} retained, {} dropped, {} patches mined",
            c.loaded, c.skipped, c.retained_images, c.dropped_images, c.mined_patches
        );
    }
    Ok(())
}

fn inspect(g: &Global, path: &Path) -> Result<()> {
    out::require(path, "dataset cache")?;
    let ds = read_cache(path).with_context(|| format!("reading {}", path.display()))?;
    let (normal, anomalous) = ds.class_counts();
    let n = ds.data().len().max(1) as f64;
    let mean = ds.data().iter().sum::<f64>() / n;
    let std = (ds.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let summary = serde_json::json!({
        "path": path,
        "samples": ds.len(),
        "normal": normal,
        "anomalous": anomalous,
        "shape": ds.input_shape(),
        "source_mean": ds.mean(),
        "source_std": ds.std(),
        "stored_mean": mean,
        "stored_std": std,
    });
    if g.json {
        return out::print_json(&summary);
    }
    println!("{}: {} samples", path.display(), ds.len());
    println!("balance {normal}/{anomalous} (normal/anomalous)");
    let [c, h, w] = ds.input_shape();
    println!("shape {c}x{h}x{w}");
    println!("standardized with mean {:.4}, std {:.4}", ds.mean(), ds.std());
    println!("stored values: mean {mean:.4}, std {std:.4}");
    Ok(())
}

fn convert(g: &Global, src: &Path, dst: &Path) -> Result<()> {
    out::require(src, "image")?;
    let rgb = image::open(src).with_context(|| format!("decoding {}", src.display()))?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| luminance(p[0], p[1], p[2])).collect();
    out::write(dst, &encode_pgm(&GrayImage::new(w, h, pixels)?))?;
    if g.json {
        return out::print_json(&serde_json::json!({ "src": src, "dst": dst, "width": w, "height": h }));
    }
    println!("wrote {} ({w}x{h})", dst.display());
    Ok(())
}
