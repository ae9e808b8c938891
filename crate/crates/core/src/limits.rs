//! Fundamental limits: the lower bound on the complementary sensitivity peak
//! imposed by unstable poles and non-minimum-phase zeros, H-infinity norms,
//! and the sensitivity functions of the output-feedback loop.
//!
//! Loop convention (reference enters at the plant input, noise at the sensor):
//!
//! ```text
//! u_p = r - C(y),   z = P(u_p),   y = z + n
//! S : r -> u_p  = 1 / (1 + PC)
//! T : n -> -z   = PC / (1 + PC)
//! ```

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::linalg::{PoleZeroSet, StateSpaceModel, C64, UNIT_CIRCLE_TOL};
use crate::plant::{linearize, PhysicalParams};
use crate::{Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 4096;

/// Closed loops with spectral radius at or above `1 - STABILITY_MARGIN` count as unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;

const REFINE_PEAKS: usize = 5;
const GOLDEN_ITERATIONS: usize = 80;

/// Peak gain estimate with the frequency where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Frequency of the peak in rad/sample, in `[0, pi]`.
    pub peak_omega: f64,
    pub grid_size: usize,
}

fn gain(model: &StateSpaceModel, omega: f64) -> Result<f64> {
    let g = model.freq_response(omega)?;
    if g.nrows() == 1 && g.ncols() == 1 {
        Ok(g[(0, 0)].norm())
    } else {
        Ok(g.singular_values().max())
    }
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// H-infinity norm of a stable model: largest singular value of the frequency
/// response over a uniform grid of `grid_size` points on `[0, pi]`, refined by
/// golden-section search around the largest local maxima.
pub fn hinf_norm_estimate(model: &StateSpaceModel, grid_size: usize) -> Result<NormEstimate> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid_size must be at least 2".into()));
    }
    let rho = model.spectral_radius();
    if rho >= 1.0 {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    let step = PI / (grid_size - 1) as f64;
    let values = (0..grid_size)
        .map(|k| gain(model, k as f64 * step))
        .collect::<Result<Vec<_>>>()?;
    let mut peaks: Vec<usize> = (0..grid_size)
        .filter(|&k| {
            let left = k == 0 || values[k] >= values[k - 1];
            let right = k + 1 == grid_size || values[k] >= values[k + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    peaks.truncate(REFINE_PEAKS);
    let (mut best_omega, mut best) = (peaks[0] as f64 * step, values[peaks[0]]);
    for &k in &peaks {
        let lo = k.saturating_sub(1) as f64 * step;
        let hi = ((k + 1).min(grid_size - 1)) as f64 * step;
        let (w, v) = golden_max(|w| gain(model, w), lo, hi)?;
        if v > best {
            best = v;
            best_omega = w;
        }
    }
    Ok(NormEstimate {
        value: best,
        peak_omega: best_omega,
        grid_size,
    })
}

pub fn hinf_norm(model: &StateSpaceModel, grid_size: usize) -> Result<f64> {
    Ok(hinf_norm_estimate(model, grid_size)?.value)
}

/// Lower bound on `||T||_inf` from unstable poles and zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    /// No unstable pole: the bound carries no information (reported as 1).
    pub vacuous: bool,
    /// An unstable pole coincides with an unstable zero: no controller can
    /// stabilize without cancellation, the bound is infinite.
    pub coincidence: bool,
}

/// `max_i prod_k |(1 - p_i^-1 conj(q_k)^-1) / (p_i^-1 - q_k^-1)|` over poles
/// and zeros outside the unit circle (by more than [`UNIT_CIRCLE_TOL`]);
/// roots on or inside the circle are ignored. For real roots this reduces to
/// `|p q - 1| / |p - q|` per pair.
pub fn sensitivity_bound(poles: &[C64], zeros: &[C64]) -> BoundResult {
    let outside = |v: &[C64]| -> Vec<C64> { v.iter().copied().filter(|r| r.norm() > 1.0 + UNIT_CIRCLE_TOL).collect() };
    let (poles, zeros) = (outside(poles), outside(zeros));
    if poles.is_empty() {
        return BoundResult {
            value: 1.0,
            vacuous: true,
            coincidence: false,
        };
    }
    let mut best = 1.0_f64;
    for p in &poles {
        let pinv = p.inv();
        let mut prod = 1.0;
        for q in &zeros {
            if (p - q).norm() <= 1e-12 {
                return BoundResult {
                    value: f64::INFINITY,
                    vacuous: false,
                    coincidence: true,
                };
            }
            let qinv = q.inv();
            prod *= (Complex::new(1.0, 0.0) - pinv * qinv.conj()).norm() / (pinv - qinv).norm();
        }
        best = best.max(prod);
    }
    BoundResult {
        value: best,
        vacuous: false,
        coincidence: false,
    }
}

/// Bound for a SISO plant model.
pub fn plant_bound(model: &StateSpaceModel) -> Result<BoundResult> {
    let pz = PoleZeroSet::of(model)?;
    Ok(sensitivity_bound(&pz.unstable_poles(), &pz.unstable_zeros()))
}

/// One row of the fixation-point table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub ell0: f64,
    pub pole: f64,
    pub zero: Option<f64>,
    pub bound: f64,
}

/// Unstable pole, unstable zero and bound of the linearized cartpole.
pub fn fixation_limits(params: &PhysicalParams) -> Result<LimitRow> {
    let model = linearize(params)?;
    let pz = PoleZeroSet::of(&model)?;
    let largest = |v: Vec<C64>| {
        v.into_iter()
            .map(|r| r.re)
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    };
    let pole = largest(pz.unstable_poles()).ok_or_else(|| Error::Numerical("no unstable pole".into()))?;
    let bound = sensitivity_bound(&pz.unstable_poles(), &pz.unstable_zeros());
    Ok(LimitRow {
        ell0: params.ell0,
        pole,
        zero: largest(pz.unstable_zeros()),
        bound: bound.value,
    })
}

/// Feedback interconnection of a SISO plant and controller.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub plant: StateSpaceModel,
    pub controller: StateSpaceModel,
    /// `r -> u_p`.
    pub s: StateSpaceModel,
    /// `n -> -z`.
    pub t: StateSpaceModel,
    /// Spectral radius of the interconnection state matrix.
    pub spectral_radius: f64,
    pub internally_stable: bool,
}

fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((0, c1), (r1, c2)).copy_from(b);
    m.view_mut((r1, 0), (r2, c1)).copy_from(c);
    m.view_mut((r1, c1), (r2, c2)).copy_from(d);
    m
}

/// Builds `S` and `T` for the negative-feedback loop `u_p = r - C(y)`.
///
/// State ordering is `[x_plant; x_controller]`.
pub fn closed_loop(plant: &StateSpaceModel, controller: &StateSpaceModel) -> Result<ClosedLoop> {
    if !plant.is_siso() || !controller.is_siso() {
        return Err(Error::UnsupportedShape(
            "closed_loop needs SISO plant and controller".into(),
        ));
    }
    let (ap, bp, cp, dp) = (plant.a(), plant.b(), plant.c(), plant.d()[(0, 0)]);
    let (ak, bk, ck, dk) = (controller.a(), controller.b(), controller.c(), controller.d()[(0, 0)]);
    let den = 1.0 + dp * dk;
    if den.abs() < 1e-12 {
        return Err(Error::IllPosed(den));
    }
    let (np, nk) = (plant.n_states(), controller.n_states());
    // y = (Cp xp - Dp Ck xk + Dp r + n) / den
    let y_x = block2(
        &(cp / den),
        &(ck * (-dp / den)),
        &DMatrix::zeros(0, np),
        &DMatrix::zeros(0, nk),
    );
    let y_w = DMatrix::from_row_slice(1, 2, &[dp / den, 1.0 / den]);
    // u_p = r - Ck xk - Dk y
    let mut up_x = DMatrix::zeros(1, np + nk);
    up_x.view_mut((0, np), (1, nk)).copy_from(&(-ck));
    let up_x = up_x - &y_x * dk;
    let up_w = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]) - &y_w * dk;

    let mut a = DMatrix::zeros(np + nk, np + nk);
    a.view_mut((0, 0), (np, np)).copy_from(ap);
    a.view_mut((np, np), (nk, nk)).copy_from(ak);
    let mut bp_full = DMatrix::zeros(np + nk, 1);
    bp_full.view_mut((0, 0), (np, 1)).copy_from(bp);
    let mut bk_full = DMatrix::zeros(np + nk, 1);
    bk_full.view_mut((np, 0), (nk, 1)).copy_from(bk);
    let a = a + &bp_full * &up_x + &bk_full * &y_x;
    let b = &bp_full * &up_w + &bk_full * &y_w;

    // z = Cp xp + Dp u_p
    let mut z_x = DMatrix::zeros(1, np + nk);
    z_x.view_mut((0, 0), (1, np)).copy_from(cp);
    let z_x = z_x + &up_x * dp;
    let z_w = &up_w * dp;

    let dt = plant.dt();
    let s = StateSpaceModel::new(
        a.clone(),
        b.columns(0, 1).into_owned(),
        up_x,
        up_w.columns(0, 1).into_owned(),
        dt,
    )?;
    let t = StateSpaceModel::new(
        a.clone(),
        b.columns(1, 1).into_owned(),
        -z_x,
        -z_w.columns(1, 1).into_owned(),
        dt,
    )?;
    let rho = crate::linalg::spectral_radius(&a);
    Ok(ClosedLoop {
        plant: plant.clone(),
        controller: controller.clone(),
        s,
        t,
        spectral_radius: rho,
        internally_stable: rho < 1.0 - STABILITY_MARGIN,
    })
}
