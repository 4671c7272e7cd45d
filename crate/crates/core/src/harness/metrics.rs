use serde::{Deserialize, Serialize};

use crate::autonet::cross_entropy;
use crate::datapipe::ANOMALOUS;
use crate::error::{Error, Result};

/// Binary classification scores with the anomalous class as positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Mean cross-entropy.
    pub loss: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize, loss: f64) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
            loss,
        }
    }

    /// Argmax decisions over class probabilities.
    pub fn from_probs(probs: &[Vec<f64>], labels: &[u8]) -> Result<Self> {
        if probs.len() != labels.len() || probs.is_empty() {
            return Err(Error::Shape(format!(
                "{} predictions for {} labels",
                probs.len(),
                labels.len()
            )));
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        let mut loss = 0.0;
        for (p, &y) in probs.iter().zip(labels) {
            loss += cross_entropy(p, y as usize)?;
            let predicted = argmax(p) == ANOMALOUS as usize;
            match (predicted, y == ANOMALOUS) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Ok(Self::from_counts(tp, fp, tn, fn_, loss / labels.len() as f64))
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Index of the largest entry; the first wins on ties.
pub fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}
