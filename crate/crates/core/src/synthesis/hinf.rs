use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GeneralizedPlant;
use crate::limits::{hinf_norm_estimate, DEFAULT_GRID_SIZE};
use crate::linalg::{solve_dare, solve_dare_general, spectral_radius, StateSpaceModel};
use crate::{Error, Result};

/// Bisection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Relative width of the final bracket.
    pub bisection_tol: f64,
    /// Frequency grid of the closed-loop certificate.
    pub grid_size: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            gamma_min: 1e-2,
            gamma_max: 1e6,
            bisection_tol: 1e-3,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

/// Why a performance level was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", content = "detail", rename_all = "snake_case")]
pub enum GammaFailure {
    /// No stabilizing solution of the state-feedback Riccati equation.
    ControlRiccati(String),
    /// The state-feedback solution exists but the disturbance player is not concave.
    ControlInertia(String),
    FilterRiccati(String),
    FilterInertia(String),
    /// `rho(X Y) >= gamma^2`.
    Coupling(f64),
    /// No stabilizing observer gain in the transformed estimation problem.
    EstimatorRiccati(String),
    EstimatorInertia(String),
    ClosedLoopUnstable(f64),
    Certificate {
        measured: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisDiagnostics {
    /// `(A, B2)` admits a stabilizing LQ solution.
    pub stabilizable: bool,
    /// `(C2, A)` admits a stabilizing LQ filter.
    pub detectable: bool,
    /// Failure at the top of the search range, when infeasible.
    pub failure: Option<GammaFailure>,
    /// Number of gamma levels tried.
    pub evaluations: usize,
    /// Spectral radius of `X Y` at the returned level.
    pub coupling_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesizedController {
    /// Strictly proper controller `u = K(y)`, present when feasible.
    pub controller: Option<StateSpaceModel>,
    pub gamma_achieved: f64,
    /// Closed-loop `w -> z` norm measured on the frequency grid.
    pub certified_norm: f64,
    pub epsilon: f64,
    pub feasible: bool,
    pub diagnostics: SynthesisDiagnostics,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigen-decomposition based power `m^e` of a positive definite matrix.
fn spd_power(m: &DMatrix<f64>, e: f64) -> Option<DMatrix<f64>> {
    let eig = sym(m).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(e)));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    sym(m).symmetric_eigen().eigenvalues.min()
}

/// Output-feedback controller for one performance level `gamma`, or the
/// first violated condition.
///
/// The state-feedback game Riccati solution `X` defines a change of
/// variables under which the problem becomes an estimation problem; its
/// dual is again a state-feedback game whose stabilizing solution yields the
/// observer gain. The classical filter Riccati solution `Y` and the coupling
/// condition are checked alongside.
pub fn controller_at_gamma(
    gp: &GeneralizedPlant,
    gamma: f64,
) -> std::result::Result<(StateSpaceModel, f64), GammaFailure> {
    gamma_attempt(gp, gamma, true)
}

pub(crate) fn gamma_attempt(
    gp: &GeneralizedPlant,
    gamma: f64,
    check_coupling: bool,
) -> std::result::Result<(StateSpaceModel, f64), GammaFailure> {
    let n = gp.n_states();
    let nw = gp.n_disturbances();
    let g2 = gamma * gamma;
    let (a, b1, b2, c1, c2, d21) = (&gp.a, &gp.b1, &gp.b2, &gp.c1, &gp.c2, &gp.d21);

    // State-feedback game: X = A'XA + C1'C1 - (.)' R(X)^-1 (.), inputs [u, w].
    let mut g = DMatrix::zeros(n, 1 + nw);
    g.view_mut((0, 0), (n, 1)).copy_from(b2);
    g.view_mut((0, 1), (n, nw)).copy_from(b1);
    let mut r = DMatrix::zeros(1 + nw, 1 + nw);
    r[(0, 0)] = gp.epsilon * gp.epsilon;
    for i in 0..nw {
        r[(1 + i, 1 + i)] = -g2;
    }
    let q = c1.transpose() * c1;
    let xs = solve_dare_general(a, &g, &q, &DMatrix::zeros(n, 1 + nw), &r)
        .map_err(|e| GammaFailure::ControlRiccati(e.to_string()))?;
    let x = &xs.x;
    if min_eig(x) < -1e-8 * (1.0 + x.norm()) {
        return Err(GammaFailure::ControlInertia("X is not positive semidefinite".into()));
    }
    let v = (gp.epsilon * gp.epsilon) + (b2.transpose() * x * b2)[(0, 0)];
    if v <= 0.0 {
        return Err(GammaFailure::ControlInertia("control weight not positive".into()));
    }
    let xb2 = x * b2;
    let b1xb2 = b1.transpose() * &xb2;
    let nabla = sym(&(DMatrix::identity(nw, nw) * g2 - b1.transpose() * x * b1 + &b1xb2 * b1xb2.transpose() / v));
    let nabla_inv_half = spd_power(&nabla, -0.5)
        .ok_or_else(|| GammaFailure::ControlInertia("disturbance weight not positive definite".into()))?;
    let nabla_inv = &nabla_inv_half * &nabla_inv_half;

    // Filter game for the coupling condition.
    let mut gf = DMatrix::zeros(n, 1 + c1.nrows());
    gf.view_mut((0, 0), (n, 1)).copy_from(&c2.transpose());
    gf.view_mut((0, 1), (n, c1.nrows())).copy_from(&c1.transpose());
    let mut rf = DMatrix::zeros(1 + c1.nrows(), 1 + c1.nrows());
    rf[(0, 0)] = (d21 * d21.transpose())[(0, 0)];
    for i in 0..c1.nrows() {
        rf[(1 + i, 1 + i)] = -g2;
    }
    let ys = solve_dare_general(
        &a.transpose(),
        &gf,
        &(b1 * b1.transpose()),
        &DMatrix::zeros(n, 1 + c1.nrows()),
        &rf,
    )
    .map_err(|e| GammaFailure::FilterRiccati(e.to_string()))?;
    let y = &ys.x;
    if min_eig(y) < -1e-8 * (1.0 + y.norm()) {
        return Err(GammaFailure::FilterInertia("Y is not positive semidefinite".into()));
    }
    let coupling = spectral_radius(&(x * y));
    if check_coupling && coupling >= g2 {
        return Err(GammaFailure::Coupling(coupling));
    }

    // Worst-case disturbance w* = F1 x and the transformed estimation problem.
    let xa = x * a;
    let f1 = &nabla_inv * (b1.transpose() * &xa - &b1xb2 * (xb2.transpose() * a) / v);
    let a_bar = a + b1 * &f1;
    let b_bar = b1 * &nabla_inv_half;
    let c_bar = c2 + d21 * &f1;
    let d_bar = d21 * &nabla_inv_half;
    let v_inv_half = 1.0 / v.sqrt();
    let l_bar = -(xb2.transpose() * &a_bar) * v_inv_half;
    let ds_bar = -(xb2.transpose() * &b_bar) * v_inv_half;

    // Dual game: state A_bar', inputs [mu (observer), d (disturbance)],
    // output B_bar' s + [D_bar', Ds_bar'] [mu; d].
    let mut ge = DMatrix::zeros(n, 2);
    ge.set_column(0, &c_bar.transpose().column(0));
    ge.set_column(1, &l_bar.transpose().column(0));
    let hh = b_bar.transpose();
    let mut jj = DMatrix::zeros(nw, 2);
    jj.set_column(0, &d_bar.transpose().column(0));
    jj.set_column(1, &ds_bar.transpose().column(0));
    let mut re = jj.transpose() * &jj;
    re[(1, 1)] -= 1.0;
    let fe = a_bar.transpose();
    let ps = solve_dare_general(&fe, &ge, &(hh.transpose() * &hh), &(hh.transpose() * &jj), &re)
        .map_err(|e| GammaFailure::EstimatorRiccati(e.to_string()))?;
    let p = &ps.x;
    if min_eig(p) < -1e-8 * (1.0 + p.norm()) {
        return Err(GammaFailure::EstimatorInertia(
            "estimator solution not positive semidefinite".into(),
        ));
    }
    let lam = &ps.weight;
    if lam[(1, 1)] >= 0.0 {
        return Err(GammaFailure::EstimatorInertia(format!(
            "disturbance weight {:.3e} not negative",
            lam[(1, 1)]
        )));
    }
    let k: DMatrix<f64> = ps.gain.rows(0, 1).transpose();
    let observer = &fe - ge.column(0) * k.transpose();
    let obs_radius = spectral_radius(&observer);
    if obs_radius >= 1.0 {
        return Err(GammaFailure::EstimatorInertia(format!(
            "observer radius {obs_radius:.6}"
        )));
    }

    // Central controller, strictly proper.
    let ck = -(xb2.transpose() * &a_bar) / v;
    let ak = &a_bar + b2 * &ck - &k * &c_bar;
    let controller = StateSpaceModel::new(ak, k, ck, DMatrix::zeros(1, 1), gp.dt)
        .map_err(|e| GammaFailure::EstimatorRiccati(e.to_string()))?;
    let cl = gp
        .close_loop(&controller)
        .map_err(|e| GammaFailure::EstimatorRiccati(e.to_string()))?;
    let rho = cl.spectral_radius();
    if rho >= 1.0 - 1e-9 {
        return Err(GammaFailure::ClosedLoopUnstable(rho));
    }
    Ok((controller, coupling))
}

fn lq_solvable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    solve_dare(a, b, &DMatrix::identity(n, n), &DMatrix::identity(m, m)).is_ok()
}

/// Weighted H-infinity output-feedback synthesis by bisection on `gamma`.
///
/// Returns the controller at the smallest feasible level found (within the
/// relative tolerance), after checking the closed-loop `w -> z` norm on a
/// frequency grid. When that certificate fails at the bisection level, the
/// level is raised in small steps until it holds.
pub fn hinf_synthesize(gp: &GeneralizedPlant, opts: &SynthesisOptions) -> Result<SynthesizedController> {
    if !(opts.gamma_min > 0.0 && opts.gamma_max > opts.gamma_min && opts.bisection_tol > 0.0) {
        return Err(Error::InvalidParameter("invalid gamma range or tolerance".into()));
    }
    let stabilizable = lq_solvable(&gp.a, &gp.b2);
    let detectable = lq_solvable(&gp.a.transpose(), &gp.c2.transpose());
    let mut evaluations = 0;
    let mut attempt = |gamma: f64| {
        evaluations += 1;
        controller_at_gamma(gp, gamma)
    };
    let infeasible = |failure: GammaFailure, evaluations: usize| SynthesizedController {
        controller: None,
        gamma_achieved: f64::INFINITY,
        certified_norm: f64::INFINITY,
        epsilon: gp.epsilon,
        feasible: false,
        diagnostics: SynthesisDiagnostics {
            stabilizable,
            detectable,
            failure: Some(failure),
            evaluations,
            coupling_radius: None,
        },
    };
    if !stabilizable || !detectable {
        let what = if stabilizable {
            "(C2, A) is not detectable"
        } else {
            "(A, B2) is not stabilizable"
        };
        return Ok(infeasible(GammaFailure::ControlRiccati(what.into()), 0));
    }
    let mut best = match attempt(opts.gamma_max) {
        Ok(ok) => (opts.gamma_max, ok),
        Err(f) => return Ok(infeasible(f, 1)),
    };
    let mut lo = opts.gamma_min;
    if let Ok(ok) = attempt(lo) {
        best = (lo, ok);
    } else {
        let mut hi = opts.gamma_max;
        while hi / lo - 1.0 > opts.bisection_tol {
            let mid = (lo * hi).sqrt();
            match attempt(mid) {
                Ok(ok) => {
                    hi = mid;
                    best = (mid, ok);
                }
                Err(_) => lo = mid,
            }
        }
    }

    let (mut gamma, (mut controller, mut coupling)) = best;
    let mut certified;
    let mut bumps = 0;
    loop {
        let cl = gp.close_loop(&controller)?;
        certified = hinf_norm_estimate(&cl, opts.grid_size)?.value;
        if certified <= gamma * (1.0 + 1e-6) {
            break;
        }
        bumps += 1;
        if bumps > 200 || gamma >= opts.gamma_max {
            return Ok(infeasible(
                GammaFailure::Certificate { measured: certified },
                evaluations,
            ));
        }
        gamma = (gamma * (1.0 + 10.0 * opts.bisection_tol)).min(opts.gamma_max);
        if let Ok((c, rho)) = attempt(gamma) {
            controller = c;
            coupling = rho;
        }
    }
    Ok(SynthesizedController {
        controller: Some(controller),
        gamma_achieved: gamma,
        certified_norm: certified,
        epsilon: gp.epsilon,
        feasible: true,
        diagnostics: SynthesisDiagnostics {
            stabilizable,
            detectable,
            failure: None,
            evaluations,
            coupling_radius: Some(coupling),
        },
    })
}
