use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `exp(−‖x − z‖² / (2σ²))`
    Gaussian {
        sigma: f64,
    },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Gaussian { sigma: 1.0 }
    }
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::InvalidConfig(format!("gaussian sigma must be positive, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: z.len(),
            });
        }
        Ok(self.eval_unchecked(x, z))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            Kernel::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

pub fn kernel_eval(kernel: &Kernel, x: &[f64], z: &[f64]) -> Result<f64> {
    kernel.eval(x, z)
}

/// Points above which Gram rows are computed on demand rather than stored.
const DENSE_LIMIT: usize = 4000;

/// Gram matrix over a training set, dense for small sets.
pub(crate) enum GramMatrix<'a> {
    Dense {
        n: usize,
        values: Vec<f64>,
    },
    OnDemand {
        points: &'a [Vec<f64>],
        kernel: Kernel,
    },
}

impl<'a> GramMatrix<'a> {
    pub(crate) fn new(points: &'a [Vec<f64>], kernel: Kernel) -> Self {
        let n = points.len();
        if n > DENSE_LIMIT {
            return GramMatrix::OnDemand { points, kernel };
        }
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval_unchecked(&points[i], &points[j]);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        GramMatrix::Dense { n, values }
    }

    pub(crate) fn size(&self) -> usize {
        match self {
            GramMatrix::Dense { n, .. } => *n,
            GramMatrix::OnDemand { points, .. } => points.len(),
        }
    }

    pub(crate) fn row(&self, i: usize) -> Cow<'_, [f64]> {
        match self {
            GramMatrix::Dense { n, values } => Cow::Borrowed(&values[i * n..(i + 1) * n]),
            GramMatrix::OnDemand { points, kernel } => Cow::Owned(
                points
                    .iter()
                    .map(|p| kernel.eval_unchecked(&points[i], p))
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_identity_and_unit_exponent() {
        for sigma in [0.1, 1.0, 7.5] {
            let k = Kernel::Gaussian { sigma };
            assert_eq!(k.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
        }
        let k = Kernel::Gaussian { sigma: 1.0 };
        let v = k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn linear_is_dot_product() {
        assert_eq!(
            kernel_eval(&Kernel::Linear, &[1.0, 2.0], &[3.0, -1.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn mismatched_lengths() {
        assert!(matches!(
            Kernel::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Kernel::Gaussian { sigma: 0.0 }.validate().is_err());
    }

    #[test]
    fn on_demand_rows_match_dense() {
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64 * 0.3, 1.0 - i as f64])
            .collect();
        let k = Kernel::Gaussian { sigma: 0.8 };
        let dense = GramMatrix::new(&pts, k);
        let lazy = GramMatrix::OnDemand {
            points: &pts,
            kernel: k,
        };
        for i in 0..5 {
            assert_eq!(dense.row(i), lazy.row(i));
        }
    }
}
