//! Synthetic surface images for desk-scale runs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{Dataset, ANOMALOUS, NORMAL};
use crate::error::{Error, Result};

/// Seed whose default-size dataset is checked against a 3-NN classifier in the tests.
pub const SYNTH_SEED: u64 = 7;

fn texture(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.5..2.5),
                rng.random_range(0.5..2.5),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(4.0..10.0),
            )
        })
        .collect();
    let base = rng.random_range(110.0..140.0);
    let s = size as f64;
    let mut px = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (u, v) = (x as f64 / s, y as f64 / s);
            let smooth: f64 = waves
                .iter()
                .map(|&(fx, fy, ph, a)| a * (2.0 * PI * (fx * u + fy * v) + ph).sin())
                .sum();
            px.push(base + smooth + rng.random_range(-3.0..3.0));
        }
    }
    px
}

fn add_blob(px: &mut [f64], size: usize, rng: &mut ChaCha8Rng) {
    let s = size as f64;
    let cx = s / 2.0 + rng.random_range(-s / 8.0..s / 8.0);
    let cy = s / 2.0 + rng.random_range(-s / 8.0..s / 8.0);
    let sigma = s / 8.0 * rng.random_range(0.8..1.2);
    let amp = rng.random_range(90.0..120.0);
    for y in 0..size {
        for x in 0..size {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            px[y * size + x] += amp * (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
}

/// `2 * n_per_class` images alternating normal and anomalous, quantized to
/// 8-bit levels, then standardized.
pub fn synth_dataset(n_per_class: usize, image_size: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 || image_size < 8 {
        return Err(Error::Config(format!(
            "synthetic data needs n_per_class >= 1 and image_size >= 8, got {n_per_class} and {image_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    let mut data = Vec::with_capacity(2 * n_per_class * image_size * image_size);
    for i in 0..2 * n_per_class {
        let label = if i % 2 == 0 { NORMAL } else { ANOMALOUS };
        let mut px = texture(image_size, &mut rng);
        if label == ANOMALOUS {
            add_blob(&mut px, image_size, &mut rng);
        }
        data.extend(px.into_iter().map(|v| v.round().clamp(0.0, 255.0)));
        labels.push(label);
    }
    Dataset::standardize(image_size, image_size, labels, data)
}
