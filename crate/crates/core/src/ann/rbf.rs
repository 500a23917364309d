//! Gaussian radial-basis-function network, `y = Σ_j w_j φ(‖x − c_j‖)` with
//! `φ(r) = exp(−r² / (2σ²))`, fitted by linear least squares.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::survey::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfNetwork {
    centers: Vec<Vec<f64>>,
    sigma: f64,
    /// `weights[j]` holds center `j`'s coefficient for each output.
    weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    TrainingPoints,
    Explicit(Vec<Vec<f64>>),
}

pub fn gaussian(r: f64, sigma: f64) -> f64 {
    (-(r * r) / (2.0 * sigma * sigma)).exp()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

impl RbfNetwork {
    pub fn new(centers: Vec<Vec<f64>>, sigma: f64, weights: Vec<Vec<f64>>) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if centers.is_empty() {
            return Err(Error::Empty);
        }
        if weights.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                found: weights.len(),
            });
        }
        let dim = centers[0].len();
        let outputs = weights[0].len();
        if centers.iter().any(|c| c.len() != dim) || weights.iter().any(|w| w.len() != outputs) {
            return Err(Error::InvalidConfig("ragged centers or weights".into()));
        }
        Ok(RbfNetwork {
            centers,
            sigma,
            weights,
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn n_inputs(&self) -> usize {
        self.centers[0].len()
    }

    pub fn n_outputs(&self) -> usize {
        self.weights[0].len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.n_outputs()];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let phi = gaussian(squared_distance(x, c).sqrt(), self.sigma);
            for (o, wk) in out.iter_mut().zip(w) {
                *o += wk * phi;
            }
        }
        Ok(out)
    }
}

impl Classifier for RbfNetwork {
    fn n_features(&self) -> usize {
        self.n_inputs()
    }

    fn n_classes(&self) -> usize {
        self.n_outputs()
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict(x)
    }
}

/// Least-squares fit of the output weights for fixed centers and width.
///
/// With `ridge = 0` a square design matrix is solved exactly (interpolation) and a tall
/// one in the least-squares sense; duplicate centers make the system singular. With
/// `ridge > 0` the regularized normal equations `(ΦᵀΦ + ridge·I) w = Φᵀy` are solved.
pub fn rbf_fit(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    centers: Centers,
    sigma: f64,
    ridge: f64,
) -> Result<RbfNetwork> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }
    if inputs.is_empty() {
        return Err(Error::Empty);
    }
    if inputs.len() != targets.len() {
        return Err(Error::LengthMismatch(inputs.len(), targets.len()));
    }
    let centers = match centers {
        Centers::TrainingPoints => inputs.to_vec(),
        Centers::Explicit(c) => c,
    };
    if centers.is_empty() {
        return Err(Error::Empty);
    }
    let dim = inputs[0].len();
    for x in inputs.iter().chain(&centers) {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
    }
    let outputs = targets[0].len();
    if targets.iter().any(|t| t.len() != outputs) {
        return Err(Error::InvalidConfig("ragged targets".into()));
    }

    let (n, m) = (inputs.len(), centers.len());
    let phi = DMatrix::from_fn(n, m, |i, j| {
        gaussian(squared_distance(&inputs[i], &centers[j]).sqrt(), sigma)
    });
    let y = DMatrix::from_fn(n, outputs, |i, k| targets[i][k]);

    let w = if ridge > 0.0 {
        let mut a = phi.tr_mul(&phi);
        for i in 0..m {
            a[(i, i)] += ridge;
        }
        let chol = a.cholesky().ok_or(Error::SingularSystem)?;
        chol.solve(&phi.tr_mul(&y))
    } else {
        if has_duplicates(&centers) {
            return Err(Error::SingularSystem);
        }
        if n == m {
            phi.lu().solve(&y).ok_or(Error::SingularSystem)?
        } else {
            let svd = SVD::new(phi, true, true);
            let cutoff = f64::EPSILON * n.max(m) as f64 * svd.singular_values.max();
            if svd.rank(cutoff) < m {
                return Err(Error::SingularSystem);
            }
            svd.solve(&y, cutoff).map_err(|_| Error::SingularSystem)?
        }
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let weights = (0..m)
        .map(|j| (0..outputs).map(|k| w[(j, k)]).collect())
        .collect();
    RbfNetwork::new(centers, sigma, weights)
}

/// Fits one output per class against one-hot targets.
pub fn rbf_fit_dataset(
    data: &Dataset,
    centers: Centers,
    sigma: f64,
    ridge: f64,
) -> Result<RbfNetwork> {
    rbf_fit(
        &data.features,
        &data.one_hot_targets(),
        centers,
        sigma,
        ridge,
    )
}

fn has_duplicates(points: &[Vec<f64>]) -> bool {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted.windows(2).any(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_weight_equals_target() {
        let net = rbf_fit(
            &[vec![0.3, 0.7]],
            &[vec![2.5]],
            Centers::TrainingPoints,
            0.8,
            0.0,
        )
        .unwrap();
        assert!((net.weights()[0][0] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn prediction_at_sole_center_and_at_unit_exponent() {
        let net = RbfNetwork::new(vec![vec![1.0, 2.0]], 0.5, vec![vec![1.0]]).unwrap();
        assert_eq!(net.predict(&[1.0, 2.0]).unwrap(), vec![1.0]);
        // ‖x − c‖ = σ√2 gives exp(−1).
        let x = [1.0 + 0.5 * 2f64.sqrt(), 2.0];
        assert!((net.predict(&x).unwrap()[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((net.predict(&x).unwrap()[0] - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn predictions_are_linear_in_weights() {
        let centers = vec![vec![0.0], vec![1.0], vec![2.5]];
        let wa = vec![vec![0.3], vec![-1.0], vec![2.0]];
        let wb = vec![vec![1.5], vec![0.25], vec![-0.5]];
        let wsum: Vec<Vec<f64>> = wa.iter().zip(&wb).map(|(a, b)| vec![a[0] + b[0]]).collect();
        let a = RbfNetwork::new(centers.clone(), 0.7, wa).unwrap();
        let b = RbfNetwork::new(centers.clone(), 0.7, wb).unwrap();
        let s = RbfNetwork::new(centers, 0.7, wsum).unwrap();
        for x in [-1.0, 0.4, 1.9, 3.3] {
            let lhs = s.predict(&[x]).unwrap()[0];
            let rhs = a.predict(&[x]).unwrap()[0] + b.predict(&[x]).unwrap()[0];
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn three_points_match_normal_equations_by_cramer() {
        let xs = [0.0, 0.5, 2.0];
        let ys = [1.0, -0.5, 3.0];
        let centers = vec![vec![0.0], vec![1.0]];
        let inputs: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let targets: Vec<Vec<f64>> = ys.iter().map(|y| vec![*y]).collect();
        let net = rbf_fit(
            &inputs,
            &targets,
            Centers::Explicit(centers.clone()),
            1.0,
            0.0,
        )
        .unwrap();

        // 2×2 normal equations solved by Cramer's rule.
        let phi = |x: f64, c: f64| (-(x - c) * (x - c) / 2.0).exp();
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            let (p, q) = (phi(*x, 0.0), phi(*x, 1.0));
            a11 += p * p;
            a12 += p * q;
            a22 += q * q;
            b1 += p * y;
            b2 += q * y;
        }
        let det = a11 * a22 - a12 * a12;
        let w1 = (b1 * a22 - a12 * b2) / det;
        let w2 = (a11 * b2 - a12 * b1) / det;
        assert!((net.weights()[0][0] - w1).abs() < 1e-10);
        assert!((net.weights()[1][0] - w2).abs() < 1e-10);
    }

    #[test]
    fn duplicate_centers_are_singular_without_ridge() {
        let xs = vec![vec![0.0], vec![0.0], vec![1.0]];
        let ts = vec![vec![0.0], vec![1.0], vec![1.0]];
        assert!(matches!(
            rbf_fit(&xs, &ts, Centers::TrainingPoints, 1.0, 0.0),
            Err(Error::SingularSystem)
        ));
        assert!(rbf_fit(&xs, &ts, Centers::TrainingPoints, 1.0, 1e-6).is_ok());
    }

    #[test]
    fn invalid_width_rejected() {
        assert!(RbfNetwork::new(vec![vec![0.0]], 0.0, vec![vec![1.0]]).is_err());
        assert!(rbf_fit(
            &[vec![0.0]],
            &[vec![0.0]],
            Centers::TrainingPoints,
            -1.0,
            0.0
        )
        .is_err());
    }
}
