use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's minibatches.
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub epochs: Vec<EpochStats>,
}

pub const CSV_HEADER: &str = "epoch,train_loss,test_loss,test_acc";

/// Rescales a series linearly onto [0, 2]. A constant series maps to zeros
/// and the flag is set.
pub fn normalize_to_two(series: &[f64]) -> (Vec<f64>, bool) {
    let min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if series.is_empty() || max - min <= 0.0 {
        return (vec![0.0; series.len()], true);
    }
    (series.iter().map(|v| 2.0 * (v - min) / (max - min)).collect(), false)
}

impl ConvergenceRecord {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    pub fn test_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.test_loss).collect()
    }

    pub fn to_csv(&self, normalized: bool) -> String {
        let norm = normalized.then(|| {
            let (n, constant) = normalize_to_two(&self.test_losses());
            if constant && !self.is_empty() {
                log::warn!("test loss is constant; normalized column is all zero");
            }
            n
        });
        let mut out = String::from(CSV_HEADER);
        if norm.is_some() {
            out.push_str(",test_loss_norm");
        }
        out.push('\n');
        for (i, e) in self.epochs.iter().enumerate() {
            out.push_str(&format!("{},{:?},{:?},{:?}", e.epoch, e.train_loss, e.test_loss, e.test_acc));
            if let Some(n) = &norm {
                out.push_str(&format!(",{:?}", n[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the four leading columns; an extra normalized column is ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if !header.starts_with(CSV_HEADER) {
            return Err(Error::format("convergence CSV", format!("unexpected header {header:?}")));
        }
        let mut epochs = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::format("convergence CSV", format!("row {}: {line:?}", n + 2));
            if cols.len() < 4 {
                return Err(bad());
            }
            let num = |i: usize| cols[i].trim().parse::<f64>().map_err(|_| bad());
            epochs.push(EpochStats {
                epoch: cols[0].trim().parse().map_err(|_| bad())?,
                train_loss: num(1)?,
                test_loss: num(2)?,
                test_acc: num(3)?,
            });
        }
        Ok(Self { epochs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(losses: &[f64]) -> ConvergenceRecord {
        ConvergenceRecord {
            epochs: losses
                .iter()
                .enumerate()
                .map(|(i, &l)| EpochStats { epoch: i + 1, train_loss: l, test_loss: l, test_acc: 0.5 })
                .collect(),
        }
    }

    #[test]
    fn normalization_range() {
        let (n, constant) = normalize_to_two(&[3.0, 1.0, 2.0, 5.0]);
        assert!(!constant);
        assert_eq!(n, vec![1.0, 0.0, 0.5, 2.0]);
        let (n, constant) = normalize_to_two(&[0.7; 4]);
        assert!(constant && n.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let r = record(&[0.9, 0.5, 0.123456789012345]);
        let csv = r.to_csv(true);
        assert!(csv.starts_with("epoch,train_loss,test_loss,test_acc,test_loss_norm\n"));
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(ConvergenceRecord::from_csv(&csv).unwrap(), r);
        assert_eq!(ConvergenceRecord::from_csv(&r.to_csv(false)).unwrap(), r);
        assert!(ConvergenceRecord::from_csv("a,b\n1,2").is_err());
    }
}
