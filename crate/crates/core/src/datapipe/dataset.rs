use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::annotations::AnnotatedImage;
use super::mining::{mine_normal_patches, resize_bilinear, MiningConfig, Rect};
use crate::autonet::Tensor;
use crate::error::{Error, Result};

pub const NORMAL: u8 = 0;
pub const ANOMALOUS: u8 = 1;

/// Standardized single-channel samples with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    height: usize,
    width: usize,
    mean: f64,
    std: f64,
    labels: Vec<u8>,
    data: Vec<f64>,
}

impl Dataset {
    /// Standardizes raw samples with the population mean and deviation of all pixels.
    pub fn standardize(height: usize, width: usize, labels: Vec<u8>, mut data: Vec<f64>) -> Result<Self> {
        let n = data.len() as f64;
        if data.is_empty() {
            return Err(Error::Data("cannot standardize an empty dataset".into()));
        }
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::Data(format!("pixel deviation {std} is not positive and finite")));
        }
        data.iter_mut().for_each(|v| *v = (*v - mean) / std);
        Self::from_parts(height, width, mean, std, labels, data)
    }

    /// Wraps already standardized values.
    pub fn from_parts(height: usize, width: usize, mean: f64, std: f64, labels: Vec<u8>, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != labels.len() * height * width {
            return Err(Error::Shape(format!(
                "{} samples of {height}x{width} need {} values, got {}",
                labels.len(),
                labels.len() * height * width,
                data.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > ANOMALOUS) {
            return Err(Error::Data(format!("label {l} is not binary")));
        }
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(Error::Data(format!("bad standardization stats mean={mean} std={std}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset contains NaN or infinite pixels".into()));
        }
        Ok(Self { height, width, mean, std, labels, data })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample_len(&self) -> usize {
        self.height * self.width
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let n = self.sample_len();
        &self.data[i * n..(i + 1) * n]
    }

    /// (normal, anomalous).
    pub fn class_counts(&self) -> (usize, usize) {
        let anomalous = self.labels.iter().filter(|&&l| l == ANOMALOUS).count();
        (self.len() - anomalous, anomalous)
    }

    /// Sample shape as fed to a network: `[1, H, W]`.
    pub fn input_shape(&self) -> [usize; 3] {
        [1, self.height, self.width]
    }

    /// Batch tensor `[n, 1, H, W]` of the given samples.
    pub fn batch(&self, indices: &[usize]) -> Result<Tensor> {
        let samples: Vec<&[f64]> = indices.iter().map(|&i| self.sample(i)).collect();
        Tensor::stack(&[1, self.height, self.width], &samples)
    }

    /// Original pixel values of sample `i`.
    pub fn destandardized(&self, i: usize) -> Vec<f64> {
        self.sample(i).iter().map(|v| v * self.std + self.mean).collect()
    }
}

/// Options for assembling the binary dataset from an annotated corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildConfig {
    pub dropped_classes: Vec<String>,
    pub mining: MiningConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildSummary {
    pub retained_images: usize,
    pub dropped_images: usize,
    pub mined_patches: usize,
    /// (source image index, rectangle) of each selected normal sample.
    pub normal_sources: Vec<(usize, Rect)>,
}

/// Anomalous samples are all retained-class images; normal samples are an
/// equal number of patches mined from those same images.
pub fn build_binary_dataset(images: &[AnnotatedImage], cfg: &BuildConfig) -> Result<(Dataset, BuildSummary)> {
    cfg.mining.validate()?;
    let present: BTreeSet<&str> = images.iter().map(|i| i.class_label.as_str()).collect();
    for d in &cfg.dropped_classes {
        if !present.contains(d.as_str()) {
            return Err(Error::Config(format!(
                "dropped class {d:?} does not occur in the corpus (classes: {})",
                present.iter().copied().collect::<Vec<_>>().join(", ")
            )));
        }
    }
    let retained: Vec<AnnotatedImage> = images
        .iter()
        .filter(|i| !cfg.dropped_classes.contains(&i.class_label))
        .cloned()
        .collect();
    if retained.is_empty() {
        return Err(Error::Data("every image belongs to a dropped class".into()));
    }
    let size = cfg.mining.target_size;
    let mut patches = mine_normal_patches(&retained, &cfg.mining, cfg.seed)?;
    let need = retained.len();
    if patches.len() < need {
        return Err(Error::Data(format!(
            "need {need} normal patches but mining produced {} (short by {})",
            patches.len(),
            need - patches.len()
        )));
    }
    let mined = patches.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    patches.shuffle(&mut rng);
    patches.truncate(need);

    let mut labels = Vec::with_capacity(2 * need);
    let mut data = Vec::with_capacity(2 * need * size * size);
    for img in &retained {
        let full = Rect { x0: 0, y0: 0, x1: img.image.width, y1: img.image.height };
        data.extend(resize_bilinear(&img.image, full, size));
        labels.push(ANOMALOUS);
    }
    let mut normal_sources = Vec::with_capacity(need);
    for p in patches {
        data.extend(p.pixels);
        labels.push(NORMAL);
        normal_sources.push((p.source, p.rect));
    }
    let ds = Dataset::standardize(size, size, labels, data)?;
    let summary = BuildSummary {
        retained_images: retained.len(),
        dropped_images: images.len() - retained.len(),
        mined_patches: mined,
        normal_sources,
    };
    Ok((ds, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::annotations::BBox;
    use crate::datapipe::pgm::GrayImage;

    fn corpus() -> Vec<AnnotatedImage> {
        let classes = ["crazing", "inclusion", "patches", "pitted_surface"];
        (0..12)
            .map(|i| AnnotatedImage {
                name: format!("img{i}"),
                image: GrayImage::new(64, 64, (0..64 * 64).map(|p| ((p * 7 + i * 13) % 256) as u8).collect()).unwrap(),
                boxes: vec![BBox { xmin: 20, ymin: 20, xmax: 40, ymax: 40 }],
                class_label: classes[i % 4].to_string(),
            })
            .collect()
    }

    fn cfg(dropped: &[&str]) -> BuildConfig {
        BuildConfig {
            dropped_classes: dropped.iter().map(|s| s.to_string()).collect(),
            mining: MiningConfig::new(16),
            seed: 3,
        }
    }

    #[test]
    fn toy_drop_two_of_four() {
        let (ds, summary) = build_binary_dataset(&corpus(), &cfg(&["crazing", "pitted_surface"])).unwrap();
        assert_eq!(summary.retained_images, 6);
        assert_eq!(ds.class_counts(), (6, 6));
        assert_eq!(ds.input_shape(), [1, 16, 16]);
    }

    #[test]
    fn standardized_moments() {
        let (ds, _) = build_binary_dataset(&corpus(), &cfg(&[])).unwrap();
        let n = ds.data().len() as f64;
        let mean = ds.data().iter().sum::<f64>() / n;
        let var = ds.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_dropped_class() {
        assert!(matches!(build_binary_dataset(&corpus(), &cfg(&["rust"])), Err(Error::Config(_))));
    }

    #[test]
    fn shortfall_reported() {
        let mut images = corpus();
        for img in &mut images {
            img.boxes = vec![BBox { xmin: 1, ymin: 1, xmax: 64, ymax: 64 }];
        }
        let err = build_binary_dataset(&images, &cfg(&[])).unwrap_err().to_string();
        assert!(err.contains("short by 12"), "{err}");
    }

    #[test]
    fn constant_data_rejected() {
        assert!(Dataset::standardize(2, 2, vec![0], vec![1.0; 4]).is_err());
        assert!(Dataset::from_parts(2, 2, 0.0, 1.0, vec![2], vec![0.0; 4]).is_err());
    }
}
