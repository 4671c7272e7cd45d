use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::metrics::{argmax, Metrics};
use super::record::{ConvergenceRecord, EpochStats};
use crate::autonet::{
    adam_step, cross_entropy, cross_entropy_grad, preset_layers, Adam, AdamState, LayerGraph, Mode, Shape, Tensor,
};
use crate::datapipe::{holdout_split, kfold_split, Dataset, Split};
use crate::dressed::DqnGradients;
use crate::error::{Error, Result};
use crate::surgery::HybridModel;

const EVAL_CHUNK: usize = 64;

/// Anything that maps samples to class probabilities.
pub trait Classifier {
    fn predict_probs(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<Vec<f64>>>;
}

/// A classifier that can be fitted on a subset of a dataset.
pub trait TrainableModel: Classifier {
    fn fit(&mut self, ds: &Dataset, train: &[usize], test: &[usize], cfg: &TrainConfig) -> Result<ConvergenceRecord>;
}

impl Classifier for LayerGraph {
    fn predict_probs(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(indices.len());
        for chunk in indices.chunks(EVAL_CHUNK) {
            let probs = self.predict(&ds.batch(chunk)?)?;
            out.extend((0..probs.batch()).map(|i| probs.sample(i).to_vec()));
        }
        Ok(out)
    }
}

impl Classifier for HybridModel {
    fn predict_probs(&self, ds: &Dataset, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(indices.len());
        for chunk in indices.chunks(EVAL_CHUNK) {
            out.extend(self.predict(&ds.batch(chunk)?)?);
        }
        Ok(out)
    }
}

impl TrainableModel for LayerGraph {
    fn fit(&mut self, ds: &Dataset, train: &[usize], test: &[usize], cfg: &TrainConfig) -> Result<ConvergenceRecord> {
        fit_graph(self, ds, train, test, cfg)
    }
}

impl TrainableModel for HybridModel {
    fn fit(&mut self, ds: &Dataset, train: &[usize], test: &[usize], cfg: &TrainConfig) -> Result<ConvergenceRecord> {
        train_qtl(self, ds, train, test, cfg)
    }
}

pub fn evaluate<M: Classifier + ?Sized>(model: &M, ds: &Dataset, indices: &[usize]) -> Result<Metrics> {
    let probs = model.predict_probs(ds, indices)?;
    let labels: Vec<u8> = indices.iter().map(|&i| ds.labels()[i]).collect();
    Metrics::from_probs(&probs, &labels)
}

fn check_indices(ds: &Dataset, train: &[usize], test: &[usize], cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if let Some(&bad) = train.iter().chain(test).find(|&&i| i >= ds.len()) {
        return Err(Error::Index(format!("sample {bad} of a {}-sample dataset", ds.len())));
    }
    if test.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    cfg.check_train_size(train.len())
}

fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Minibatch Adam on cross-entropy over every trainable layer of `graph`.
pub fn fit_graph(
    graph: &mut LayerGraph,
    ds: &Dataset,
    train: &[usize],
    test: &[usize],
    cfg: &TrainConfig,
) -> Result<ConvergenceRecord> {
    check_indices(ds, train, test, cfg)?;
    if graph.input != ds.input_shape() {
        return Err(Error::Shape(format!(
            "graph {} expects {:?} inputs, dataset has {:?}",
            graph.name,
            graph.input,
            ds.input_shape()
        )));
    }
    let out = graph.output_shape()?;
    if out != Shape::Flat(2) {
        return Err(Error::Shape(format!("graph {} outputs {out}, expected 2 classes", graph.name)));
    }
    let adam = Adam::new(cfg.learning_rate);
    let mut state = AdamState::new(&graph.trainable_shapes());
    let mut rng = shuffle_rng(cfg.seed);
    let mut order = train.to_vec();
    let mut record = ConvergenceRecord::default();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let x = ds.batch(batch_idx)?;
            let (probs, tape) = graph.forward(&x, Mode::Train(&mut rng))?;
            let mut grad = Tensor::zeros(probs.shape().to_vec());
            for (j, &i) in batch_idx.iter().enumerate() {
                let label = ds.labels()[i] as usize;
                loss_sum += cross_entropy(probs.sample(j), label)?;
                grad.sample_mut(j).copy_from_slice(&cross_entropy_grad(probs.sample(j), label));
            }
            let mut grads = graph.backward(&tape, &grad)?;
            grads.scale(1.0 / batch_idx.len() as f64);
            let g = grads.tensors();
            adam_step(&mut graph.trainable_tensors_mut(), &g, &mut state, &adam)?;
        }
        let m = evaluate(graph, ds, test)?;
        record.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            test_loss: m.loss,
            test_acc: m.accuracy,
        });
    }
    Ok(record)
}

/// Trains only the dressed head; the frozen prefix is read, never written.
pub fn train_qtl(
    hybrid: &mut HybridModel,
    ds: &Dataset,
    train: &[usize],
    test: &[usize],
    cfg: &TrainConfig,
) -> Result<ConvergenceRecord> {
    if !hybrid.prefix.all_frozen() {
        return Err(Error::Config(format!(
            "prefix {} has trainable layers; only the head may be trained",
            hybrid.prefix.name
        )));
    }
    check_indices(ds, train, test, cfg)?;
    if hybrid.prefix.input != ds.input_shape() {
        return Err(Error::Shape(format!(
            "hybrid expects {:?} inputs, dataset has {:?}",
            hybrid.prefix.input,
            ds.input_shape()
        )));
    }

    let mut cache: Vec<Option<Vec<f64>>> = vec![None; ds.len()];
    if cfg.cache_prefix {
        let mut needed: Vec<usize> = train.iter().chain(test).copied().collect();
        needed.sort_unstable();
        needed.dedup();
        for chunk in needed.chunks(EVAL_CHUNK) {
            let f = hybrid.features(&ds.batch(chunk)?)?;
            for (j, &i) in chunk.iter().enumerate() {
                cache[i] = Some(f.sample(j).to_vec());
            }
        }
    }
    let features = |hybrid: &HybridModel, idx: &[usize]| -> Result<Vec<Vec<f64>>> {
        if cfg.cache_prefix {
            return Ok(idx.iter().map(|&i| cache[i].clone().expect("cached")).collect());
        }
        let f = hybrid.features(&ds.batch(idx)?)?;
        Ok((0..idx.len()).map(|j| f.sample(j).to_vec()).collect())
    };

    let adam = Adam::new(cfg.learning_rate);
    let mut state = AdamState::new(&hybrid.head.tensor_shapes());
    let mut rng = shuffle_rng(cfg.seed);
    let mut order = train.to_vec();
    let mut record = ConvergenceRecord::default();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let feats = features(hybrid, batch_idx)?;
            let head = &hybrid.head;
            let per_sample: Vec<Result<(f64, DqnGradients)>> = feats
                .par_iter()
                .zip(batch_idx.par_iter())
                .map(|(f, &i)| {
                    let label = ds.labels()[i] as usize;
                    let (p, tape) = head.forward(f)?;
                    let g = head.backward(&tape, &cross_entropy_grad(&p, label))?;
                    Ok((cross_entropy(&p, label)?, g))
                })
                .collect();
            let mut total = DqnGradients::zeros_like(head);
            for r in per_sample {
                let (loss, g) = r?;
                loss_sum += loss;
                total.accumulate(&g);
            }
            total.scale(1.0 / batch_idx.len() as f64);
            adam_step(&mut hybrid.head.tensors_mut(), &total.tensors(), &mut state, &adam)?;
        }
        let feats = features(hybrid, test)?;
        let probs: Vec<Vec<f64>> = feats.iter().map(|f| hybrid.head.predict(f)).collect::<Result<_>>()?;
        let labels: Vec<u8> = test.iter().map(|&i| ds.labels()[i]).collect();
        let m = Metrics::from_probs(&probs, &labels)?;
        record.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            test_loss: m.loss,
            test_acc: m.accuracy,
        });
    }
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub record: ConvergenceRecord,
    pub metrics: Metrics,
}

#[derive(Clone, Debug)]
pub struct ClassicalOutcome {
    pub best: LayerGraph,
    pub best_index: usize,
    pub split: Split,
    pub runs: Vec<RunResult>,
}

/// Highest test F1, then lower test loss, then earlier run.
pub fn best_run(runs: &[RunResult]) -> Option<usize> {
    (0..runs.len()).reduce(|best, i| {
        let (a, b) = (&runs[best].metrics, &runs[i].metrics);
        if b.f1 > a.f1 || (b.f1 == a.f1 && b.loss < a.loss) {
            i
        } else {
            best
        }
    })
}

/// Independent restarts with seeds `seed..seed + restarts` on one stratified
/// hold-out split; keeps the best restart.
pub fn train_classical(preset_name: &str, ds: &Dataset, cfg: &TrainConfig) -> Result<ClassicalOutcome> {
    cfg.validate()?;
    let kinds = preset_layers(preset_name)?;
    crate::autonet::infer_shapes(&kinds, {
        let [c, h, w] = ds.input_shape();
        Shape::Image { c, h, w }
    })?;
    let split = holdout_split(ds.labels(), cfg.test_fraction, cfg.seed)?;
    let mut runs = Vec::with_capacity(cfg.restarts);
    let mut best: Option<LayerGraph> = None;
    for r in 0..cfg.restarts {
        let seed = cfg.seed + r as u64;
        let mut graph = LayerGraph::new(preset_name, ds.input_shape(), &kinds, seed)?;
        let run_cfg = TrainConfig { seed, ..cfg.clone() };
        let record = fit_graph(&mut graph, ds, &split.train, &split.test, &run_cfg)?;
        let metrics = evaluate(&graph, ds, &split.test)?;
        log::info!("{preset_name} restart {r} (seed {seed}): test F1 {:.4}", metrics.f1);
        runs.push(RunResult { seed, record, metrics });
        if best_run(&runs) == Some(r) {
            best = Some(graph);
        }
    }
    let best_index = best_run(&runs).expect("at least one restart");
    Ok(ClassicalOutcome {
        best: best.expect("best restart kept"),
        best_index,
        split,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: Metrics,
    pub record: ConvergenceRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean_f1: f64,
    /// Population standard deviation over folds.
    pub std_f1: f64,
    pub mean_accuracy: f64,
}

impl CvReport {
    pub fn from_folds(folds: Vec<FoldResult>) -> Self {
        let k = folds.len();
        let mean = |f: &dyn Fn(&FoldResult) -> f64| folds.iter().map(f).sum::<f64>() / k as f64;
        let mean_f1 = mean(&|r| r.metrics.f1);
        let std_f1 = mean(&|r| (r.metrics.f1 - mean_f1).powi(2)).sqrt();
        let mean_accuracy = mean(&|r| r.metrics.accuracy);
        Self { k, folds, mean_f1, std_f1, mean_accuracy }
    }
}

/// Stratified k-fold over the whole dataset. Fold `i` gets a fresh model from
/// `builder(i, seed + i)` and trains with that seed.
pub fn cross_validate<M, B>(mut builder: B, ds: &Dataset, k: usize, cfg: &TrainConfig) -> Result<(CvReport, Vec<M>)>
where
    M: TrainableModel,
    B: FnMut(usize, u64) -> Result<M>,
{
    cfg.validate()?;
    let split = kfold_split(ds.labels(), k, cfg.seed)?;
    let mut folds = Vec::with_capacity(k);
    let mut models = Vec::with_capacity(k);
    for i in 0..k {
        let seed = cfg.seed + i as u64;
        let Split { train, test } = split.split(i);
        let mut model = builder(i, seed)?;
        let fold_cfg = TrainConfig { seed, ..cfg.clone() };
        let record = model.fit(ds, &train, &test, &fold_cfg)?;
        let metrics = evaluate(&model, ds, &test)?;
        log::info!("fold {i}: test F1 {:.4}", metrics.f1);
        folds.push(FoldResult {
            fold: i,
            seed,
            train_size: train.len(),
            test_size: test.len(),
            metrics,
            record,
        });
        models.push(model);
    }
    Ok((CvReport::from_folds(folds), models))
}

/// Fraction of `indices` whose argmax prediction matches the label.
pub fn accuracy<M: Classifier + ?Sized>(model: &M, ds: &Dataset, indices: &[usize]) -> Result<f64> {
    let probs = model.predict_probs(ds, indices)?;
    let hits = probs
        .iter()
        .zip(indices)
        .filter(|(p, &i)| argmax(p) == ds.labels()[i] as usize)
        .count();
    Ok(hits as f64 / indices.len().max(1) as f64)
}
