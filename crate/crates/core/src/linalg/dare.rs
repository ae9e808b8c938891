use nalgebra::DMatrix;

use super::{check_finite, spectral_radius};
use crate::{Error, Result};

/// Iteration cap for the doubling algorithm. Convergence is quadratic, so
/// well-posed problems finish in a few dozen steps.
pub const DARE_MAX_ITERATIONS: usize = 100;

/// Stabilizing solution of a discrete algebraic Riccati equation together
/// with its optimal gain and closed loop.
#[derive(Debug, Clone)]
pub struct DareSolution {
    /// Symmetric solution `X`.
    pub x: DMatrix<f64>,
    /// `K = (R + G'XG)^{-1} (G'XF + S')`; the loop is `F - G K`.
    pub gain: DMatrix<f64>,
    /// `R + G'XG`.
    pub weight: DMatrix<f64>,
    pub closed_loop_radius: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q`.
///
/// Requires `R` positive definite and `(A, B)` stabilizable. Returns
/// [`Error::Riccati`] when no stabilizing solution is found within
/// [`DARE_MAX_ITERATIONS`] doubling steps.
pub fn solve_dare(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = DMatrix::zeros(a.nrows(), b.ncols());
    solve_dare_general(a, b, q, &s, r).map(|sol| sol.x)
}

/// Solves the DARE with cross term and a possibly indefinite `R`:
///
/// `X = F'XF + Q - (F'XG + S)(R + G'XG)^{-1}(G'XF + S')`.
///
/// The cross term is removed by `F <- F - G R^{-1} S'`, `Q <- Q - S R^{-1} S'`
/// and the resulting equation `X = F'X(I + G R^{-1} G' X)^{-1}F + Q` is solved
/// by the structure-preserving doubling algorithm, followed by Newton defect
/// correction when the residual is not yet at rounding level. The returned
/// solution is always checked: residual below `1e-8 (1 + ||X||)` and
/// `F - G K` Schur stable.
pub fn solve_dare_general(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    s: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DareSolution> {
    let n = f.nrows();
    let m = g.ncols();
    if f.ncols() != n || g.nrows() != n || q.shape() != (n, n) || s.shape() != (n, m) || r.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "DARE shapes F {:?} G {:?} Q {:?} S {:?} R {:?}",
            f.shape(),
            g.shape(),
            q.shape(),
            s.shape(),
            r.shape()
        )));
    }
    for (mat, name) in [(f, "F"), (g, "G"), (q, "Q"), (s, "S"), (r, "R")] {
        check_finite(mat, name)?;
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Riccati("R is singular".into()))?;
    let f_t = f - g * &r_inv * s.transpose();
    let q_t = symmetrize(&(q - s * &r_inv * s.transpose()));
    let g_t = symmetrize(&(g * &r_inv * g.transpose()));

    let eye = DMatrix::<f64>::identity(n, n);
    let (mut ak, mut gk, mut hk) = (f_t, g_t, q_t);
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=DARE_MAX_ITERATIONS {
        iterations = it;
        let w = &eye + &gk * &hk;
        let lu = w.lu();
        let w_inv_a = lu
            .solve(&ak)
            .ok_or_else(|| Error::Riccati(format!("doubling breakdown at step {it}")))?;
        let w_inv_g = lu
            .solve(&gk)
            .ok_or_else(|| Error::Riccati(format!("doubling breakdown at step {it}")))?;
        let a_next = &ak * &w_inv_a;
        let g_next = symmetrize(&(&gk + &ak * w_inv_g * ak.transpose()));
        let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &w_inv_a));
        if !h_next.iter().all(|v| v.is_finite()) {
            return Err(Error::Riccati(format!("doubling diverged at step {it}")));
        }
        let delta = (&h_next - &hk).norm();
        let scale = h_next.norm().max(1.0);
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if delta <= 1e-14 * scale || ak.norm() <= 1e-300 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Riccati(format!(
            "doubling did not converge in {DARE_MAX_ITERATIONS} steps"
        )));
    }

    let mut x = hk;
    let mut residual = dare_residual(f, g, q, s, r, &x)?;
    for _ in 0..3 {
        if residual <= 1e-13 * (1.0 + x.norm()) {
            break;
        }
        let candidate = newton_correction(f, g, q, s, r, &x)?;
        let cand_res = dare_residual(f, g, q, s, r, &candidate)?;
        if cand_res < residual {
            x = candidate;
            residual = cand_res;
        } else {
            break;
        }
    }
    if residual > 1e-8 * (1.0 + x.norm()) {
        return Err(Error::Riccati(format!("residual {residual:.3e} too large")));
    }
    let (gain, weight) = optimal_gain(f, g, s, r, &x)?;
    let closed_loop = f - g * &gain;
    let radius = spectral_radius(&closed_loop);
    if radius >= 1.0 {
        return Err(Error::Riccati(format!(
            "solution is not stabilizing (closed-loop spectral radius {radius:.6})"
        )));
    }
    Ok(DareSolution {
        x,
        gain,
        weight,
        closed_loop_radius: radius,
        residual,
        iterations,
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn optimal_gain(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    s: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let weight = r + g.transpose() * x * g;
    let rhs = g.transpose() * x * f + s.transpose();
    let gain = weight
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Riccati("R + G'XG is singular".into()))?;
    Ok((gain, weight))
}

/// Frobenius norm of the DARE residual at `x`.
pub(crate) fn dare_residual(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    s: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<f64> {
    let (gain, _) = optimal_gain(f, g, s, r, x)?;
    let cross = f.transpose() * x * g + s;
    let res = f.transpose() * x * f + q - cross * gain - x;
    Ok(res.norm())
}

/// One Newton step: solve the Stein equation `D - Fc' D Fc = Res(X)`.
fn newton_correction(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    s: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let (gain, _) = optimal_gain(f, g, s, r, x)?;
    let cross = f.transpose() * x * g + s;
    let res = f.transpose() * x * f + q - cross * &gain - x;
    let fc = f - g * gain;
    let fct = fc.transpose();
    let kron = fct.kronecker(&fct);
    let lhs = DMatrix::<f64>::identity(n * n, n * n) - kron;
    // Column-major vec: vec(Fc' D Fc) = (Fc' (x) Fc') vec(D).
    let rhs = DMatrix::from_column_slice(n * n, 1, res.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Riccati("singular Stein equation in Newton step".into()))?;
    let delta = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok(symmetrize(&(x + delta)))
}
