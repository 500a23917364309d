//! One-vs-one multiclass composition: one binary learner per unordered class pair,
//! majority vote, ties to the lowest class index.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::binary::{train_binary_svm, BinarySvmModel, SvmParams};
use super::kernel::Kernel;
use crate::classifier::{argmax, Classifier};
use crate::error::{Error, Result};
use crate::parallel;
use crate::survey::Dataset;

/// Learner for classes `a < b`. Class `a` is the negative side: a positive decision
/// value votes `b`, anything else votes `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLearner {
    pub class_a: usize,
    pub class_b: usize,
    pub model: BinarySvmModel,
}

#[derive(Debug, Clone, Deserialize)]
struct RawOvo {
    class_count: usize,
    n_features: usize,
    kernel: Kernel,
    learners: Vec<PairLearner>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOvo")]
pub struct OvoModel {
    class_count: usize,
    n_features: usize,
    kernel: Kernel,
    learners: Vec<PairLearner>,
    /// Distinct support vectors across learners, so each kernel value is computed once.
    #[serde(skip)]
    pool: Vec<Vec<f64>>,
    #[serde(skip)]
    pool_index: Vec<Vec<usize>>,
}

impl TryFrom<RawOvo> for OvoModel {
    type Error = Error;

    fn try_from(raw: RawOvo) -> Result<Self> {
        OvoModel::new(raw.class_count, raw.n_features, raw.kernel, raw.learners)
    }
}

impl OvoModel {
    pub fn new(
        class_count: usize,
        n_features: usize,
        kernel: Kernel,
        learners: Vec<PairLearner>,
    ) -> Result<Self> {
        let mut expected = Vec::new();
        for a in 0..class_count {
            for b in a + 1..class_count {
                expected.push((a, b));
            }
        }
        let got: Vec<(usize, usize)> = learners.iter().map(|l| (l.class_a, l.class_b)).collect();
        if got != expected {
            return Err(Error::InvalidConfig(format!(
                "one-vs-one model for {class_count} classes needs learners {expected:?}, got {got:?}"
            )));
        }
        let mut pool = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut pool_index = Vec::with_capacity(learners.len());
        for learner in &learners {
            if learner.model.kernel() != kernel {
                return Err(Error::InvalidConfig(
                    "learners must share one kernel".into(),
                ));
            }
            let mut idx = Vec::with_capacity(learner.model.support_vectors().len());
            for sv in learner.model.support_vectors() {
                if sv.len() != n_features {
                    return Err(Error::DimensionMismatch {
                        expected: n_features,
                        found: sv.len(),
                    });
                }
                let key: Vec<u64> = sv.iter().map(|v| v.to_bits()).collect();
                let at = *seen.entry(key).or_insert_with(|| {
                    pool.push(sv.clone());
                    pool.len() - 1
                });
                idx.push(at);
            }
            pool_index.push(idx);
        }
        Ok(OvoModel {
            class_count,
            n_features,
            kernel,
            learners,
            pool,
            pool_index,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn learners(&self) -> &[PairLearner] {
        &self.learners
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Decision value of every learner, in learner order.
    pub fn decisions(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let k: Vec<f64> = self
            .pool
            .iter()
            .map(|sv| self.kernel.eval_unchecked(sv, x))
            .collect();
        Ok(self
            .learners
            .iter()
            .zip(&self.pool_index)
            .map(|(l, idx)| {
                let sum: f64 = idx
                    .iter()
                    .zip(l.model.coefficients())
                    .map(|(p, a)| a * k[*p])
                    .sum();
                sum + l.model.bias()
            })
            .collect())
    }
}

/// Vote vector from per-learner decision values.
pub fn tally_votes(learners: &[PairLearner], decisions: &[f64], class_count: usize) -> Vec<usize> {
    let mut votes = vec![0; class_count];
    for (l, d) in learners.iter().zip(decisions) {
        if *d > 0.0 {
            votes[l.class_b] += 1;
        } else {
            votes[l.class_a] += 1;
        }
    }
    votes
}

pub fn predict_ovo(model: &OvoModel, x: &[f64]) -> Result<(usize, Vec<usize>)> {
    let decisions = model.decisions(x)?;
    let votes = tally_votes(&model.learners, &decisions, model.class_count);
    let as_f64: Vec<f64> = votes.iter().map(|v| *v as f64).collect();
    Ok((argmax(&as_f64), votes))
}

impl Classifier for OvoModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.class_count
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, votes) = predict_ovo(self, x)?;
        Ok(votes.into_iter().map(|v| v as f64).collect())
    }
}

/// Trains `c(c−1)/2` learners, each on the samples of its two classes only.
pub fn train_ovo(data: &Dataset, kernel: Kernel, params: SvmParams) -> Result<OvoModel> {
    let c = data.n_classes();
    if let Some(empty) = data.class_counts().iter().position(|n| *n == 0) {
        return Err(Error::EmptyClass(empty));
    }
    let pairs: Vec<(usize, usize)> = (0..c)
        .flat_map(|a| (a + 1..c).map(move |b| (a, b)))
        .collect();
    let learners = parallel::map_indices(pairs.len(), |p| {
        let (a, b) = pairs[p];
        let rows: Vec<usize> = (0..data.n_samples())
            .filter(|&i| data.labels[i] == a || data.labels[i] == b)
            .collect();
        let x: Vec<Vec<f64>> = rows.iter().map(|&i| data.features[i].clone()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|&i| if data.labels[i] == b { 1.0 } else { -1.0 })
            .collect();
        train_binary_svm(&x, &y, kernel, params).map(|model| PairLearner {
            class_a: a,
            class_b: b,
            model,
        })
    });
    let learners = learners.into_iter().collect::<Result<Vec<_>>>()?;
    OvoModel::new(c, data.n_features(), kernel, learners)
}
