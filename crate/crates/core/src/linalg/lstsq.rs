use nalgebra::DMatrix;

use super::check_finite;
use crate::{Error, Result};

/// Relative singular-value cutoff for the minimum-norm solution.
pub const LSTSQ_RCOND: f64 = 1e-12;

/// Minimum-norm minimizer of `||phi * G - y||_F`.
///
/// Singular values below `LSTSQ_RCOND * sigma_max` are treated as zero, so
/// rank-deficient regressors yield the minimum-norm solution.
pub fn least_squares(phi: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, k) = phi.shape();
    if m == 0 || k == 0 {
        return Err(Error::Dimension(format!("regressor is {m}x{k}")));
    }
    if y.nrows() != m {
        return Err(Error::Dimension(format!(
            "regressor has {m} rows, target has {}",
            y.nrows()
        )));
    }
    check_finite(phi, "regressor")?;
    check_finite(y, "target")?;

    let svd = phi.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let s = &svd.singular_values;
    let cutoff = LSTSQ_RCOND * s.max();
    let uty = u.transpose() * y;
    let mut scaled = uty;
    for (i, sigma) in s.iter().enumerate() {
        let inv = if *sigma > cutoff && *sigma > 0.0 {
            1.0 / sigma
        } else {
            0.0
        };
        scaled.row_mut(i).scale_mut(inv);
    }
    Ok(vt.transpose() * scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, "lstsq-test", 0);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn identity_regressor_returns_target() {
        let y = randn(4, 2, 1);
        let g = least_squares(&DMatrix::identity(4, 4), &y).unwrap();
        assert!((g - y).abs().max() < 1e-14);
    }

    #[test]
    fn consistent_overdetermined_system_is_exact() {
        let phi = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let g_true = DMatrix::from_row_slice(2, 1, &[3.0, -2.0]);
        let y = &phi * &g_true;
        let g = least_squares(&phi, &y).unwrap();
        assert!((&g - g_true).abs().max() < 1e-13);
        assert!((phi * g - y).norm() < 1e-12);
    }

    #[test]
    fn recovers_planted_coefficients() {
        let phi = randn(50, 3, 2);
        let g_true = randn(3, 2, 3);
        let g = least_squares(&phi, &(&phi * &g_true)).unwrap();
        assert!((g - g_true).abs().max() < 1e-10);
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // Two identical columns: min-norm solution splits the weight evenly.
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
        let y = DMatrix::from_row_slice(3, 1, &[2.0, 4.0, -2.0]);
        let g = least_squares(&phi, &y).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-12 && (g[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut phi = DMatrix::identity(2, 2);
        phi[(0, 1)] = f64::INFINITY;
        assert!(matches!(
            least_squares(&phi, &DMatrix::zeros(2, 1)),
            Err(Error::NonFinite(_))
        ));
    }
}
