//! Stratified hold-out and k-fold splits over a label vector.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Fold `i` as the test set, everything else as training data.
    pub fn split(&self, i: usize) -> Split {
        let mut train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        Split { train, test: self.folds[i].clone() }
    }
}

/// Indices of each class (by label value), shuffled.
fn shuffled_classes(labels: &[u8], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut classes = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        classes[l as usize].push(i);
    }
    for c in &mut classes {
        c.shuffle(rng);
    }
    classes
}

/// Test size is `round(fraction * n)` with halves rounded up, shared among
/// classes by largest remainder.
pub fn holdout_split(labels: &[u8], test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let n = labels.len();
    let n_test = (test_fraction * n as f64 + 0.5).floor() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} of {n} samples leaves one side empty"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = shuffled_classes(labels, &mut rng);

    let exact: Vec<f64> = classes.iter().map(|c| n_test as f64 * c.len() as f64 / n as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n_test - quota.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        quota[c] += 1;
    }

    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (c, idx) in classes.iter().enumerate() {
        test.extend_from_slice(&idx[..quota[c]]);
        train.extend_from_slice(&idx[quota[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Deals each shuffled class round-robin over the folds; the dealing
/// position carries over from one class to the next.
pub fn kfold_split(labels: &[u8], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!("{k} folds exceed {} samples", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0;
    for class in shuffled_classes(labels, &mut rng) {
        for i in class {
            folds[cursor].push(i);
            cursor = (cursor + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldSplit { folds, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i % 2) as u8).collect()
    }

    #[test]
    fn holdout_2206() {
        let s = holdout_split(&balanced(2206), 0.2, 0).unwrap();
        assert_eq!(s.test.len(), 441);
        assert_eq!(s.train.len(), 1765);
        let pos = s.test.iter().filter(|&&i| i % 2 == 1).count();
        assert!((pos as i64 - 220).abs() <= 1);
    }

    #[test]
    fn holdout_half_of_four() {
        let s = holdout_split(&balanced(4), 0.5, 9).unwrap();
        assert_eq!(s.test.len(), 2);
        assert_eq!(s.test.iter().filter(|&&i| i % 2 == 1).count(), 1);
        assert_eq!(s.train.iter().filter(|&&i| i % 2 == 1).count(), 1);
    }

    #[test]
    fn holdout_rejects_bad_fraction() {
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(holdout_split(&balanced(10), f, 0).is_err());
        }
        assert!(holdout_split(&balanced(2), 0.1, 0).is_err());
    }

    #[test]
    fn holdout_deterministic() {
        let a = holdout_split(&balanced(100), 0.3, 4).unwrap();
        assert_eq!(a, holdout_split(&balanced(100), 0.3, 4).unwrap());
        assert_ne!(a, holdout_split(&balanced(100), 0.3, 5).unwrap());
    }

    #[test]
    fn six_folds_of_2206() {
        let f = kfold_split(&balanced(2206), 6, 1).unwrap();
        let mut sizes: Vec<usize> = f.folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![367, 367, 368, 368, 368, 368]);
    }

    #[test]
    fn two_folds_of_four() {
        let f = kfold_split(&balanced(4), 2, 0).unwrap();
        assert!(f.folds.iter().all(|x| x.len() == 2));
        let s = f.split(0);
        assert_eq!(s.train, f.folds[1]);
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert!(kfold_split(&balanced(4), 1, 0).is_err());
        assert!(kfold_split(&balanced(4), 5, 0).is_err());
    }
}
