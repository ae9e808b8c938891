//! Linear-systems kernel: state-space models, frequency response, poles and
//! zeros, least squares and the discrete algebraic Riccati equation.

mod dare;
mod lstsq;
mod model;
mod pz;

pub use dare::{solve_dare, solve_dare_general, DareSolution, DARE_MAX_ITERATIONS};
pub use lstsq::{least_squares, LSTSQ_RCOND};
pub use model::{spectral_radius, MatrixData, StateSpaceModel};
pub use pz::{poles_of, transmission_zeros, PoleZeroSet, UNIT_CIRCLE_TOL};

pub use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &str) -> crate::Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite(what.to_string()))
    }
}

/// Orthonormal basis of the null space of `m` (columns), via SVD.
pub(crate) fn null_space(m: &DMatrix<f64>, rcond: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to square so the SVD returns a full right basis.
    let mut padded = DMatrix::zeros(rows.max(cols), cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let cutoff = rcond * smax.max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..cols).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let rank = idx.iter().filter(|&&i| svd.singular_values[i] > cutoff).count();
    let null_idx = &idx[rank..];
    let mut basis = DMatrix::zeros(cols, null_idx.len());
    for (k, &i) in null_idx.iter().enumerate() {
        basis.set_column(k, &vt.row(i).transpose());
    }
    basis
}
