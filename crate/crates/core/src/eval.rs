//! Random train/validation/test splits, k-fold partitions, accuracy with a confusion
//! matrix, and cross-validation of an arbitrary trainer.

use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng;
use crate::survey::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` and cuts it into train/validation/test. Validation and test get
/// `round(n·r)` samples; train takes the rest.
pub fn split(n: usize, ratios: [f64; 3], seed: u64) -> Result<SplitIndices> {
    if ratios.iter().any(|r| !(*r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadRatios);
    }
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let n_val = (n as f64 * ratios[1]).round() as usize;
    let n_test = (n as f64 * ratios[2]).round() as usize;
    if n_val + n_test > n {
        return Err(Error::BadRatios);
    }
    let n_train = n - n_val - n_test;
    let perm = rng::permutation(n, seed);
    Ok(SplitIndices {
        train: perm[..n_train].to_vec(),
        validation: perm[n_train..n_train + n_val].to_vec(),
        test: perm[n_train + n_val..].to_vec(),
    })
}

/// `k` folds over a random permutation; the first `n mod k` folds hold one extra sample.
pub fn k_fold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::BadK { k, n });
    }
    let perm = rng::permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(perm[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Like [`k_fold`], but each class is spread round-robin over the folds.
pub fn k_fold_stratified(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::BadK { k, n });
    }
    let perm = rng::permutation(n, seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut order = Vec::with_capacity(n);
    for class in 0..n_classes {
        order.extend(perm.iter().copied().filter(|&i| labels[i] == class));
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    Ok(folds)
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

/// Accuracy in percent and the confusion matrix.
pub fn score(
    predictions: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<(f64, ConfusionMatrix)> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(predictions.len(), truth.len()));
    }
    if predictions.is_empty() {
        return Err(Error::Empty);
    }
    let mut counts = vec![vec![0; n_classes]; n_classes];
    for (p, t) in predictions.iter().zip(truth) {
        if let Some(&bad) = [*p, *t].iter().find(|c| **c >= n_classes) {
            return Err(Error::ClassOutOfRange {
                index: bad,
                classes: n_classes,
            });
        }
        counts[*t][*p] += 1;
    }
    let cm = ConfusionMatrix { counts };
    Ok((100.0 * cm.trace() as f64 / cm.total() as f64, cm))
}

/// Accuracy of `model` on every row of `data`.
pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    data: &Dataset,
) -> Result<(f64, ConfusionMatrix)> {
    let preds = model.predict_all(&data.features)?;
    score(&preds, &data.labels, data.n_classes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mean_accuracy: f64,
    /// `None` for folds whose training partition lacked a class.
    pub fold_accuracies: Vec<Option<f64>>,
    /// Held-out predictions of all completed folds, pooled.
    pub confusion: ConfusionMatrix,
}

impl CvReport {
    pub fn skipped(&self) -> Vec<usize> {
        self.fold_accuracies
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(i, _)| i)
            .collect()
    }
}

/// k-fold cross-validation with unstratified random folds.
pub fn cross_validate<M, F>(trainer: F, data: &Dataset, k: usize, seed: u64) -> Result<CvReport>
where
    M: Classifier + Send,
    F: Fn(&Dataset) -> Result<M> + Sync + Send,
{
    let folds = k_fold(data.n_samples(), k, seed)?;
    cross_validate_folds(trainer, data, &folds)
}

/// Trains on all folds but one and scores the held-out fold, for every fold. A fold is
/// skipped when some class is absent from its training partition.
pub fn cross_validate_folds<M, F>(
    trainer: F,
    data: &Dataset,
    folds: &[Vec<usize>],
) -> Result<CvReport>
where
    M: Classifier + Send,
    F: Fn(&Dataset) -> Result<M> + Sync + Send,
{
    let results =
        parallel::map_indices(folds.len(), |f| -> Result<Option<(f64, ConfusionMatrix)>> {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            let train_data = data.subset(&train);
            if train_data.class_counts().contains(&0) || folds[f].is_empty() {
                return Ok(None);
            }
            let model = trainer(&train_data)?;
            evaluate(&model, &data.subset(&folds[f])).map(Some)
        });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let c = data.n_classes();
    let mut confusion = ConfusionMatrix {
        counts: vec![vec![0; c]; c],
    };
    for (_, cm) in results.iter().flatten() {
        for (row, add) in confusion.counts.iter_mut().zip(&cm.counts) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let fold_accuracies: Vec<Option<f64>> = results
        .iter()
        .map(|r| r.as_ref().map(|(a, _)| *a))
        .collect();
    let done: Vec<f64> = fold_accuracies.iter().flatten().copied().collect();
    if done.is_empty() {
        return Err(Error::AllFoldsSkipped);
    }
    Ok(CvReport {
        mean_accuracy: done.iter().sum::<f64>() / done.len() as f64,
        fold_accuracies,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<usize>) -> Vec<usize> {
        v.sort_unstable();
        v
    }

    #[test]
    fn survey_protocol_split_sizes() {
        let s = split(292, [204.0 / 292.0, 44.0 / 292.0, 44.0 / 292.0], 1).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (204, 44, 44)
        );
        let all = sorted([s.train, s.validation, s.test].concat());
        assert_eq!(all, (0..292).collect::<Vec<_>>());
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split(10, [0.5, 0.5, 0.5], 0),
            Err(Error::BadRatios)
        ));
        assert!(matches!(
            split(10, [1.0, 0.0, 0.0], 0),
            Err(Error::BadRatios)
        ));
        assert!(matches!(
            split(2, [0.5, 0.25, 0.25], 0),
            Err(Error::TooFewSamples(2))
        ));
    }

    #[test]
    fn ten_folds_of_292() {
        let folds = k_fold(292, 10, 3).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [vec![29; 8], vec![30; 2]].concat());
        assert_eq!(sorted(folds.concat()), (0..292).collect::<Vec<_>>());
    }

    #[test]
    fn leave_one_out_and_bad_k() {
        let folds = k_fold(7, 7, 0).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
        assert!(matches!(k_fold(5, 6, 0), Err(Error::BadK { k: 6, n: 5 })));
        assert!(matches!(k_fold(5, 1, 0), Err(Error::BadK { .. })));
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i % 10 == 0)).collect();
        let folds = k_fold_stratified(&labels, 5, 2).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 20);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 2);
        }
    }

    #[test]
    fn score_cases() {
        let (acc, cm) = score(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(acc, 100.0);
        assert_eq!(cm.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(score(&[1, 0], &[0, 1], 2).unwrap().0, 0.0);
        assert_eq!(score(&[0, 1, 1, 1], &[0, 1, 1, 0], 2).unwrap().0, 75.0);
        assert!(matches!(
            score(&[0], &[0, 1], 2),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(matches!(score(&[], &[], 2), Err(Error::Empty)));
    }
}
