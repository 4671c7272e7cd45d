//! Defect-free patch mining.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::annotations::{AnnotatedImage, BBox};
use super::pgm::GrayImage;
use crate::error::{Error, Result};

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }
}

/// Pixels a box may touch. Annotation corners are read as 1-based and
/// inclusive, and one extra pixel on the low side covers 0-based files.
pub fn box_footprint(b: &BBox, width: usize, height: usize) -> Rect {
    Rect {
        x0: b.xmin.saturating_sub(1),
        y0: b.ymin.saturating_sub(1),
        x1: (b.xmax + 1).min(width),
        y1: (b.ymax + 1).min(height),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiningConfig {
    pub target_size: usize,
    pub min_patch: usize,
    pub patches_per_image: usize,
    pub max_attempts: usize,
}

impl MiningConfig {
    pub fn new(target_size: usize) -> Self {
        Self {
            target_size,
            min_patch: 32.min(target_size),
            patches_per_image: 4,
            max_attempts: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_patch == 0 || self.target_size < self.min_patch {
            return Err(Error::Config(format!(
                "need target_size >= min_patch >= 1, got {} and {}",
                self.target_size, self.min_patch
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinedPatch {
    /// Index of the source image.
    pub source: usize,
    pub rect: Rect,
    /// `target_size^2` raw intensities in 0..=255.
    pub pixels: Vec<f64>,
}

/// Bilinear resample of `rect` onto a `size x size` grid, pixel centres aligned.
pub fn resize_bilinear(img: &GrayImage, rect: Rect, size: usize) -> Vec<f64> {
    let (w, h) = (rect.width(), rect.height());
    let sx = w as f64 / size as f64;
    let sy = h as f64 / size as f64;
    let at = |x: usize, y: usize| img.get(rect.x0 + x, rect.y0 + y) as f64;
    let mut out = Vec::with_capacity(size * size);
    for oy in 0..size {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for ox in 0..size {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
            let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Rectangles in one image that avoid every box footprint.
pub fn sample_free_rects(img: &AnnotatedImage, cfg: &MiningConfig, rng: &mut impl Rng) -> Vec<Rect> {
    let (w, h) = (img.image.width, img.image.height);
    if w < cfg.min_patch || h < cfg.min_patch {
        return Vec::new();
    }
    if img.boxes.is_empty() {
        return vec![Rect { x0: 0, y0: 0, x1: w, y1: h }];
    }
    let forbidden: Vec<Rect> = img.boxes.iter().map(|b| box_footprint(b, w, h)).collect();
    let mut found = Vec::new();
    for _ in 0..cfg.max_attempts {
        if found.len() == cfg.patches_per_image {
            break;
        }
        let pw = rng.random_range(cfg.min_patch..=w);
        let ph = rng.random_range(cfg.min_patch..=h);
        let x0 = rng.random_range(0..=w - pw);
        let y0 = rng.random_range(0..=h - ph);
        let r = Rect { x0, y0, x1: x0 + pw, y1: y0 + ph };
        if forbidden.iter().all(|f| !f.intersects(&r)) {
            found.push(r);
        }
    }
    found
}

/// Mines patches from every image; image `i` draws from stream `i` of the seeded generator.
pub fn mine_normal_patches(images: &[AnnotatedImage], cfg: &MiningConfig, seed: u64) -> Result<Vec<MinedPatch>> {
    cfg.validate()?;
    let per_image: Vec<Vec<MinedPatch>> = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_free_rects(img, cfg, &mut rng)
                .into_iter()
                .map(|rect| MinedPatch {
                    source: i,
                    rect,
                    pixels: resize_bilinear(&img.image, rect, cfg.target_size),
                })
                .collect()
        })
        .collect();
    Ok(per_image.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(w: usize, h: usize, boxes: Vec<BBox>) -> AnnotatedImage {
        AnnotatedImage {
            name: "t".into(),
            image: GrayImage::new(w, h, (0..w * h).map(|i| (i % 251) as u8).collect()).unwrap(),
            boxes,
            class_label: "scratches".into(),
        }
    }

    #[test]
    fn boxless_image_gives_full_frame() {
        let img = image(40, 40, vec![]);
        let cfg = MiningConfig::new(40);
        let p = mine_normal_patches(&[img.clone()], &cfg, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].rect, Rect { x0: 0, y0: 0, x1: 40, y1: 40 });
        let raw: Vec<f64> = img.image.pixels.iter().map(|&v| v as f64).collect();
        assert_eq!(p[0].pixels, raw);
    }

    #[test]
    fn covered_image_gives_nothing() {
        let img = image(40, 40, vec![BBox { xmin: 1, ymin: 1, xmax: 40, ymax: 40 }]);
        let p = mine_normal_patches(&[img], &MiningConfig::new(32), 1).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn patches_avoid_boxes_and_respect_size() {
        let img = image(100, 100, vec![BBox { xmin: 40, ymin: 1, xmax: 60, ymax: 100 }]);
        let mut cfg = MiningConfig::new(32);
        cfg.min_patch = 16;
        let p = mine_normal_patches(&[img.clone()], &cfg, 5).unwrap();
        assert!(!p.is_empty() && p.len() <= 4);
        for patch in &p {
            assert!(patch.rect.width() >= 16 && patch.rect.height() >= 16);
            assert_eq!(patch.pixels.len(), 32 * 32);
            assert!(patch.rect.x1 <= 39 || patch.rect.x0 >= 61, "{:?}", patch.rect);
        }
        assert_eq!(p, mine_normal_patches(&[img], &cfg, 5).unwrap());
    }

    #[test]
    fn bilinear_constant_and_downscale() {
        let img = GrayImage::new(4, 4, vec![7; 16]).unwrap();
        let full = Rect { x0: 0, y0: 0, x1: 4, y1: 4 };
        assert!(resize_bilinear(&img, full, 9).iter().all(|&v| (v - 7.0).abs() < 1e-12));
        let img = GrayImage::new(2, 1, vec![0, 100]).unwrap();
        let r = resize_bilinear(&img, Rect { x0: 0, y0: 0, x1: 2, y1: 1 }, 1);
        assert!((r[0] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_config() {
        let mut cfg = MiningConfig::new(32);
        cfg.min_patch = 0;
        assert!(mine_normal_patches(&[], &cfg, 0).is_err());
        cfg.min_patch = 64;
        assert!(cfg.validate().is_err());
    }
}
