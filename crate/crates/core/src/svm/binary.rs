use serde::{Deserialize, Serialize};

use super::kernel::{GramMatrix, Kernel};
use super::solver::{self, Problem, SolverStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Regularization constant `C`.
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SvmParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::NonPositiveC(self.c));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Soft-margin classifier `f(x) = Σ_i α_i y_i k(x_i, x) + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    support_vectors: Vec<Vec<f64>>,
    /// Signed dual coefficients `α_i y_i`.
    coefficients: Vec<f64>,
    /// Row of each support vector in the training data.
    support_indices: Vec<usize>,
    b: f64,
    kernel: Kernel,
    c: f64,
    #[serde(skip)]
    stats: SolverStats,
}

impl BinarySvmModel {
    pub fn from_parts(
        support_vectors: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        support_indices: Vec<usize>,
        b: f64,
        kernel: Kernel,
        c: f64,
    ) -> Result<Self> {
        if support_vectors.len() != coefficients.len()
            || support_vectors.len() != support_indices.len()
        {
            return Err(Error::InvalidConfig(
                "support vector arrays differ in length".into(),
            ));
        }
        Ok(BinarySvmModel {
            support_vectors,
            coefficients,
            support_indices,
            b,
            kernel,
            c,
            stats: SolverStats::default(),
        })
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Solver statistics; empty for models built with `from_parts` or deserialized.
    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn n_features(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if let Some(n) = self.n_features() {
            if n != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: x.len(),
                });
            }
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, a)| a * self.kernel.eval_unchecked(sv, x))
            .sum();
        sum + self.b
    }

    /// `+1` or `-1`; a zero decision value maps to `-1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision(x)? > 0.0 { 1.0 } else { -1.0 })
    }

    /// Explicit primal weight vector `w = Σ α_i y_i x_i`; linear kernel only.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != Kernel::Linear {
            return None;
        }
        let n = self.n_features()?;
        let mut w = vec![0.0; n];
        for (sv, a) in self.support_vectors.iter().zip(&self.coefficients) {
            for (wk, xk) in w.iter_mut().zip(sv) {
                *wk += a * xk;
            }
        }
        Some(w)
    }
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let dim = features.first().map_or(0, Vec::len);
    for row in features {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
    }
    Ok(dim)
}

/// Solves the soft-margin dual `max Σα − ½ΣΣ α_i α_j y_i y_j k_ij`, `0 ≤ α ≤ C`, `Σ α_i y_i = 0`.
pub fn train_binary_svm(
    features: &[Vec<f64>],
    labels: &[f64],
    kernel: Kernel,
    params: SvmParams,
) -> Result<BinarySvmModel> {
    params.validate()?;
    kernel.validate()?;
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch(features.len(), labels.len()));
    }
    check_features(features)?;
    if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
        return Err(Error::InvalidConfig(format!(
            "labels must be ±1, got {bad}"
        )));
    }
    let has_pos = labels.iter().any(|y| *y > 0.0);
    let has_neg = labels.iter().any(|y| *y < 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }

    let gram = GramMatrix::new(features, kernel);
    let problem = Problem {
        gram: &gram,
        p: vec![-1.0; labels.len()],
        y: labels.to_vec(),
        cap: vec![params.c; labels.len()],
    };
    let solution = solver::solve(&problem, params.tol, params.max_iter)?;

    let mut model = BinarySvmModel {
        support_vectors: Vec::new(),
        coefficients: Vec::new(),
        support_indices: Vec::new(),
        b: solution.bias,
        kernel,
        c: params.c,
        stats: solution.stats,
    };
    for (i, a) in solution.alpha.iter().enumerate() {
        if *a > 0.0 {
            model.support_vectors.push(features[i].clone());
            model.coefficients.push(a * labels[i]);
            model.support_indices.push(i);
        }
    }
    Ok(model)
}

/// Largest per-sample violation of the dual optimality conditions, measured with the
/// model's own offset: `α = 0` needs `y f(x) ≥ 1`, `α = C` needs `y f(x) ≤ 1`,
/// `0 < α < C` needs `y f(x) = 1`. Samples absent from the support set have `α = 0`.
pub fn kkt_report(model: &BinarySvmModel, features: &[Vec<f64>], labels: &[f64]) -> f64 {
    let mut alpha = vec![0.0; features.len()];
    for (idx, coef) in model.support_indices.iter().zip(&model.coefficients) {
        if let Some(a) = alpha.get_mut(*idx) {
            *a = coef.abs();
        }
    }
    let mut worst: f64 = 0.0;
    for ((x, y), a) in features.iter().zip(labels).zip(&alpha) {
        let margin = y * model.decision_unchecked(x);
        let violation = if *a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if *a >= model.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    worst
}
