use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::least_squares;
use crate::plant::Trajectory;
use crate::{Error, Result};

/// `z(t) = sum_k a_k z(t-k) + b_k u(t-k)`, stored interleaved as
/// `[a_1, b_1, a_2, b_2, ..., a_p, b_p]` to match the regressor
/// `[z(t-1), u(t-1), ..., z(t-p), u(t-p)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArxModel {
    pub p: usize,
    pub coefficients: Vec<f64>,
}

impl ArxModel {
    pub fn new(p: usize, coefficients: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("ARX order must be at least 1".into()));
        }
        if coefficients.len() != 2 * p {
            return Err(Error::Dimension(format!(
                "expected {} ARX coefficients, got {}",
                2 * p,
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("ARX coefficients".into()));
        }
        Ok(Self { p, coefficients })
    }

    /// Coefficient of `z(t-k)`, `k` in `1..=p`.
    pub fn a(&self, k: usize) -> f64 {
        self.coefficients[2 * (k - 1)]
    }

    /// Coefficient of `u(t-k)`, `k` in `1..=p`.
    pub fn b(&self, k: usize) -> f64 {
        self.coefficients[2 * (k - 1) + 1]
    }

    /// One-step-ahead prediction of `z(t)` for `t >= p`.
    pub fn predict(&self, z: &[f64], u: &[f64], t: usize) -> f64 {
        (1..=self.p).map(|k| self.a(k) * z[t - k] + self.b(k) * u[t - k]).sum()
    }
}

/// Number of regression rows `sum_i max(T_i - p, 0)`.
pub fn arx_rows(data: &[Trajectory], p: usize) -> usize {
    data.iter().map(|t| t.len().saturating_sub(p)).sum()
}

/// Least-squares ARX fit of order `p` over all trajectories.
pub fn fit_arx(data: &[Trajectory], p: usize) -> Result<ArxModel> {
    if p == 0 {
        return Err(Error::InvalidParameter("ARX order must be at least 1".into()));
    }
    let rows = arx_rows(data, p);
    if rows < 2 * p {
        return Err(Error::InsufficientData {
            required: 2 * p,
            available: rows,
        });
    }
    let mut phi = DMatrix::zeros(rows, 2 * p);
    let mut y = DMatrix::zeros(rows, 1);
    let mut r = 0;
    for traj in data {
        for t in p..traj.len() {
            for k in 1..=p {
                phi[(r, 2 * (k - 1))] = traj.z[t - k];
                phi[(r, 2 * (k - 1) + 1)] = traj.u[t - k];
            }
            y[(r, 0)] = traj.z[t];
            r += 1;
        }
    }
    let g = least_squares(&phi, &y)?;
    ArxModel::new(p, g.column(0).iter().copied().collect())
}
