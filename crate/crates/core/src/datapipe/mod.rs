//! Dataset construction: annotated corpora, defect-free patch mining,
//! balanced binary datasets, splits, synthetic data and the on-disk cache.

mod annotations;
mod cache;
mod dataset;
mod mining;
mod pgm;
mod split;
mod synth;

pub use annotations::{
    class_from_stem, corpus_dirs, load_annotated_dir, normalize_class, parse_annotation, validate_box, AnnotatedImage,
    Annotation, BBox, LoadReport,
};
pub use cache::{decode_dataset, encode_dataset, read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use dataset::{build_binary_dataset, BuildConfig, BuildSummary, Dataset, ANOMALOUS, NORMAL};
pub use mining::{
    box_footprint, mine_normal_patches, resize_bilinear, sample_free_rects, MinedPatch, MiningConfig, Rect,
};
pub use pgm::{decode_pgm, encode_pgm, luminance, read_pgm, write_pgm, GrayImage};
pub use split::{holdout_split, kfold_split, FoldSplit, Split};
pub use synth::{synth_dataset, SYNTH_SEED};

/// Defect classes left out of the binary task by default.
pub const DEFAULT_DROPPED: [&str; 2] = ["pitted_surface", "crazing"];
