use nalgebra::DMatrix;

use crate::linalg::{least_squares, StateSpaceModel};
use crate::plant::Trajectory;
use crate::{Error, Result};

/// Least-squares fit of `x(t+1) = A x(t) + B u(t)` on full-state records,
/// paired with the fixation-point readout `C = [1, 0, ell0, 0]`.
pub fn fit_full_state(data: &[Trajectory], ell0: f64, dt: f64) -> Result<StateSpaceModel> {
    let rows: usize = data.iter().map(|t| t.len().saturating_sub(1)).sum();
    if data.iter().any(|t| t.x_full.is_none()) {
        return Err(Error::InvalidParameter(
            "full-state fit needs x_full on every trajectory".into(),
        ));
    }
    if rows < 5 {
        return Err(Error::InsufficientData {
            required: 5,
            available: rows,
        });
    }
    let mut phi = DMatrix::zeros(rows, 5);
    let mut y = DMatrix::zeros(rows, 4);
    let mut r = 0;
    for traj in data {
        let x = traj.x_full.as_ref().expect("checked above");
        for t in 0..traj.len().saturating_sub(1) {
            let (now, next) = (x[t].as_array(), x[t + 1].as_array());
            for j in 0..4 {
                phi[(r, j)] = now[j];
                y[(r, j)] = next[j];
            }
            phi[(r, 4)] = traj.u[t];
            r += 1;
        }
    }
    let theta = least_squares(&phi, &y)?;
    let a = theta.rows(0, 4).transpose();
    let b = theta.rows(4, 1).transpose();
    let c = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, ell0, 0.0]);
    StateSpaceModel::new(a, b, c, DMatrix::zeros(1, 1), dt)
}
