//! ε-insensitive support vector regression.
//!
//! Primal: `min ½‖w‖² + (C/m) Σ (ξ_i + ξ_i*)` subject to the ε-tube constraints, so each
//! dual coefficient is boxed by `C/m`. Solved in the dual over `2m` variables.

use serde::{Deserialize, Serialize};

use super::binary::SvmParams;
use super::kernel::{GramMatrix, Kernel};
use super::solver::{self, Problem, SolverStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    support_vectors: Vec<Vec<f64>>,
    /// `α_i − α_i*` for each support vector.
    coefficients: Vec<f64>,
    b: f64,
    kernel: Kernel,
    c: f64,
    epsilon: f64,
    /// Box constraint `C/m` actually imposed.
    c_eff: f64,
    #[serde(skip)]
    stats: SolverStats,
}

impl SvrModel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn c_eff(&self) -> f64 {
        self.c_eff
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: sv.len(),
                    found: x.len(),
                });
            }
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, a)| a * self.kernel.eval_unchecked(sv, x))
            .sum();
        Ok(sum + self.b)
    }

    /// Primal objective `½‖w‖² + (C/m) Σ max(0, |y_i − f(x_i)| − ε)` on the given data.
    pub fn primal_objective(&self, features: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        let mut norm = 0.0;
        for (si, ai) in self.support_vectors.iter().zip(&self.coefficients) {
            for (sj, aj) in self.support_vectors.iter().zip(&self.coefficients) {
                norm += ai * aj * self.kernel.eval_unchecked(si, sj);
            }
        }
        let mut slack = 0.0;
        for (x, y) in features.iter().zip(targets) {
            slack += ((y - self.predict(x)?).abs() - self.epsilon).max(0.0);
        }
        Ok(0.5 * norm + self.c_eff * slack)
    }
}

pub fn train_svr(
    features: &[Vec<f64>],
    targets: &[f64],
    kernel: Kernel,
    params: SvmParams,
    epsilon: f64,
) -> Result<SvrModel> {
    params.validate()?;
    kernel.validate()?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    if features.len() != targets.len() {
        return Err(Error::LengthMismatch(features.len(), targets.len()));
    }
    let m = features.len();
    if m == 0 {
        return Err(Error::Empty);
    }
    let c_eff = params.c / m as f64;
    let gram = GramMatrix::new(features, kernel);
    let mut p = Vec::with_capacity(2 * m);
    p.extend(targets.iter().map(|z| epsilon - z));
    p.extend(targets.iter().map(|z| epsilon + z));
    let mut y = vec![1.0; m];
    y.extend(std::iter::repeat_n(-1.0, m));
    let problem = Problem {
        gram: &gram,
        p,
        y,
        cap: vec![c_eff; 2 * m],
    };
    let solution = solver::solve(&problem, params.tol, params.max_iter)?;

    let mut model = SvrModel {
        support_vectors: Vec::new(),
        coefficients: Vec::new(),
        b: solution.bias,
        kernel,
        c: params.c,
        epsilon,
        c_eff,
        stats: solution.stats,
    };
    for (i, x) in features.iter().enumerate() {
        let coef = solution.alpha[i] - solution.alpha[i + m];
        if coef != 0.0 {
            model.support_vectors.push(x.clone());
            model.coefficients.push(coef);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_targets_give_constant_fit_and_zero_objective() {
        let x: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64 * 0.2, 1.0 - i as f64 * 0.1])
            .collect();
        let y = vec![3.25; 6];
        let m = train_svr(
            &x,
            &y,
            Kernel::Gaussian { sigma: 1.0 },
            SvmParams::default(),
            0.1,
        )
        .unwrap();
        assert!(m.coefficients().is_empty());
        for xi in &x {
            assert!((m.predict(xi).unwrap() - 3.25).abs() < 1e-8);
        }
        assert!(m.primal_objective(&x, &y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn line_fit_within_tube() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v[0]).collect();
        let params = SvmParams {
            c: 1000.0,
            tol: 1e-8,
            ..SvmParams::default()
        };
        let m = train_svr(&x, &y, Kernel::Linear, params, 0.01).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict(xi).unwrap() - yi).abs() <= 0.01 + 1e-6);
        }
    }

    #[test]
    fn wide_tube_has_no_support_vectors() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y = vec![0.0, 1.0, 0.5, 2.0, 1.5];
        let m = train_svr(&x, &y, Kernel::Linear, SvmParams::default(), 3.0).unwrap();
        assert!(m.coefficients().is_empty());
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict(xi).unwrap() - yi).abs() <= 3.0);
        }
        // Interval midpoint of [max y − ε, min y + ε].
        assert!((m.bias() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inside_tube_residuals_have_zero_coefficients() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin()).collect();
        let params = SvmParams {
            c: 50.0,
            tol: 1e-8,
            ..SvmParams::default()
        };
        let eps = 0.1;
        let m = train_svr(&x, &y, Kernel::Gaussian { sigma: 0.3 }, params, eps).unwrap();
        let all = train_svr(&x, &y, Kernel::Gaussian { sigma: 0.3 }, params, eps).unwrap();
        assert_eq!(m, all);
        for (xi, yi) in x.iter().zip(&y) {
            let r = (yi - m.predict(xi).unwrap()).abs();
            let is_sv = m.support_vectors().iter().any(|s| s == xi);
            if r < eps - 1e-6 {
                assert!(!is_sv, "residual {r} inside tube but coefficient non-zero");
            }
        }
        assert!(m
            .coefficients()
            .iter()
            .all(|c| c.abs() <= m.c_eff() + 1e-15));
    }

    #[test]
    fn negative_epsilon_rejected() {
        assert!(train_svr(
            &[vec![0.0]],
            &[1.0],
            Kernel::Linear,
            SvmParams::default(),
            -0.1
        )
        .is_err());
    }
}
