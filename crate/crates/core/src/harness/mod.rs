//! Training and evaluation: minibatch Adam loops, restarts, frozen-prefix
//! transfer training, k-fold cross-validation, metrics and checkpoints.

mod checkpoint;
mod config;
mod metrics;
mod record;
mod train;

pub use checkpoint::{peek_header, Checkpoint, CheckpointHeader, CheckpointModel, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{config_hash, TrainConfig};
pub use metrics::{argmax, Metrics};
pub use record::{normalize_to_two, ConvergenceRecord, EpochStats, CSV_HEADER};
pub use train::{
    accuracy, best_run, cross_validate, evaluate, fit_graph, train_classical, train_qtl, Classifier, ClassicalOutcome,
    CvReport, FoldResult, RunResult, TrainableModel,
};
