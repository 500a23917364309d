//! Two-coordinate (SMO) solver for the box-constrained dual
//!
//! ```text
//! min ½ αᵀQα + pᵀα   s.t.  yᵀα = const,  0 ≤ α_t ≤ cap_t
//! ```
//!
//! with `Q_st = y_s y_t K(s mod m, t mod m)`. Classification uses `m` variables,
//! ε-insensitive regression `2m` (the `α` and `α*` halves). Each iteration picks the
//! maximal violating pair under the first-order rule and solves the two-variable
//! subproblem in closed form, clipped to the box.

use super::kernel::GramMatrix;
use crate::error::{Error, Result};

/// Curvature used when the pair's second derivative is not positive.
const TAU: f64 = 1e-12;

pub(crate) struct Problem<'a> {
    pub gram: &'a GramMatrix<'a>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub cap: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    /// Dual objective (to be maximized) at the start and after each sweep of `n`
    /// iterations, plus the final value.
    pub dual_objective: Vec<f64>,
    /// First-order optimality gap at termination.
    pub gap: f64,
}

pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub stats: SolverStats,
}

impl Problem<'_> {
    fn q_row(&self, i: usize) -> Vec<f64> {
        let m = self.gram.size();
        let k = self.gram.row(i % m);
        let yi = self.y[i];
        (0..self.y.len())
            .map(|t| yi * self.y[t] * k[t % m])
            .collect()
    }

    fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let mut g = self.p.clone();
        for (s, a) in alpha.iter().enumerate() {
            if *a != 0.0 {
                let row = self.q_row(s);
                for (gt, q) in g.iter_mut().zip(&row) {
                    *gt += a * q;
                }
            }
        }
        g
    }

    fn in_up(&self, t: usize, a: f64) -> bool {
        if self.y[t] > 0.0 {
            a < self.cap[t]
        } else {
            a > 0.0
        }
    }

    fn in_low(&self, t: usize, a: f64) -> bool {
        if self.y[t] > 0.0 {
            a > 0.0
        } else {
            a < self.cap[t]
        }
    }

    /// Maximal violating pair `(i, j, gap)`.
    fn select(&self, alpha: &[f64], g: &[f64]) -> (usize, usize, f64) {
        let (mut i, mut up) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut low) = (usize::MAX, f64::INFINITY);
        for t in 0..alpha.len() {
            let v = -self.y[t] * g[t];
            if self.in_up(t, alpha[t]) && v > up {
                up = v;
                i = t;
            }
            if self.in_low(t, alpha[t]) && v < low {
                low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX {
            return (0, 0, 0.0);
        }
        (i, j, up - low)
    }

    /// Offset `b` of the decision function `Σ coef K + b`: the mean of `−y_t G_t` over
    /// free variables, else the midpoint of the interval the bounded ones allow.
    fn bias(&self, alpha: &[f64], g: &[f64]) -> f64 {
        let (mut sum, mut free) = (0.0, 0usize);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..alpha.len() {
            let v = -self.y[t] * g[t];
            if alpha[t] > 0.0 && alpha[t] < self.cap[t] {
                sum += v;
                free += 1;
            }
            if self.in_up(t, alpha[t]) {
                lo = lo.max(v);
            }
            if self.in_low(t, alpha[t]) {
                hi = hi.min(v);
            }
        }
        if free > 0 {
            return sum / free as f64;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }
}

fn dual_objective(p: &[f64], alpha: &[f64], g: &[f64]) -> f64 {
    // f = ½ αᵀQα + pᵀα = ½ Σ α (G + p)
    -0.5 * alpha
        .iter()
        .zip(g.iter().zip(p))
        .map(|(a, (gt, pt))| a * (gt + pt))
        .sum::<f64>()
}

pub(crate) fn solve(problem: &Problem<'_>, tol: f64, max_iter: usize) -> Result<Solution> {
    let n = problem.y.len();
    let mut alpha = vec![0.0; n];
    let mut g = problem.p.clone();
    let mut stats = SolverStats {
        dual_objective: vec![0.0],
        ..SolverStats::default()
    };
    let sweep = n.max(1);
    let mut refreshed = false;

    loop {
        let (i, j, gap) = problem.select(&alpha, &g);
        if gap <= tol {
            // Confirm against a freshly accumulated gradient before stopping.
            if refreshed {
                stats.gap = gap.max(0.0);
                break;
            }
            g = problem.gradient(&alpha);
            refreshed = true;
            continue;
        }
        refreshed = false;
        if stats.iterations >= max_iter {
            return Err(Error::Stalled(stats.iterations));
        }
        stats.iterations += 1;

        let qi = problem.q_row(i);
        let qj = problem.q_row(j);
        let (ci, cj) = (problem.cap[i], problem.cap[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);

        if problem.y[i] != problem.y[j] {
            let mut quad = qi[i] + qj[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let mut quad = qi[i] + qj[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            g[t] += qi[t] * di + qj[t] * dj;
        }
        if stats.iterations.is_multiple_of(sweep) {
            stats
                .dual_objective
                .push(dual_objective(&problem.p, &alpha, &g));
        }
    }
    stats
        .dual_objective
        .push(dual_objective(&problem.p, &alpha, &g));
    let bias = problem.bias(&alpha, &g);
    Ok(Solution { alpha, bias, stats })
}
