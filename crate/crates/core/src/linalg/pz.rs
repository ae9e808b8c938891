use nalgebra::DMatrix;

use super::{null_space, StateSpaceModel, C64};
use crate::{Error, Result};

/// Default distance from the unit circle under which a root counts as marginal.
pub const UNIT_CIRCLE_TOL: f64 = 1e-7;

/// Eigenvalues of `a`, sorted by (re, im) so the order is reproducible.
pub fn poles_of(a: &DMatrix<f64>) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut eig: Vec<C64> = a.clone().complex_eigenvalues().iter().copied().collect();
    sort_roots(&mut eig);
    eig
}

fn sort_roots(v: &mut [C64]) {
    v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

/// Finite transmission zeros of a SISO model.
///
/// For `D != 0` these are the eigenvalues of `A - B C / D`. Otherwise the
/// relative degree `r` is located from the Markov parameters and the zeros
/// are the eigenvalues of the zero-dynamics map
/// `A - B (C A^{r-1} B)^{-1} C A^r` restricted to its invariant subspace
/// `ker [C; CA; ...; CA^{r-1}]`. These coincide with the finite generalized
/// eigenvalues of the system pencil `[[A - zI, B], [C, D]]`.
pub fn transmission_zeros(model: &StateSpaceModel) -> Result<Vec<C64>> {
    if !model.is_siso() {
        return Err(Error::UnsupportedShape(format!(
            "transmission zeros need a SISO model, got {}x{}",
            model.n_outputs(),
            model.n_inputs()
        )));
    }
    let n = model.n_states();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (a, b, c) = (model.a(), model.b(), model.c());
    let d = model.d()[(0, 0)];
    let norm = |m: &DMatrix<f64>| m.norm();
    let scale = norm(b) * norm(c);
    if d.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        let reduced = a - b * c / d;
        return Ok(poles_of(&reduced));
    }

    // Relative degree: first nonzero C A^k B.
    let mut ak = DMatrix::identity(n, n);
    let mut relative_degree = None;
    for k in 0..n {
        let markov = (c * &ak * b)[(0, 0)];
        let bound = norm(c) * norm(&ak) * norm(b);
        if markov.abs() > 1e-10 * bound.max(f64::MIN_POSITIVE) {
            relative_degree = Some(k + 1);
            break;
        }
        ak = a * ak;
    }
    let Some(r) = relative_degree else {
        // Transfer function identically zero: no isolated zeros.
        return Ok(Vec::new());
    };
    if r == n {
        return Ok(Vec::new());
    }
    // ak currently holds A^{r-1}.
    let ca_r1 = c * &ak;
    let gain = (&ca_r1 * b)[(0, 0)];
    let ca_r = &ca_r1 * a;
    let zero_dyn = a - b * &ca_r / gain;
    let mut obs = DMatrix::zeros(r, n);
    let mut row = c.clone();
    for k in 0..r {
        obs.set_row(k, &row.row(0));
        row = &row * a;
    }
    let basis = null_space(&obs, 1e-12);
    if basis.ncols() != n - r {
        return Err(Error::Numerical(format!(
            "zero-dynamics subspace has dimension {}, expected {}",
            basis.ncols(),
            n - r
        )));
    }
    let restricted = basis.transpose() * zero_dyn * &basis;
    Ok(poles_of(&restricted))
}

/// Poles and zeros with a unit-circle classification.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleZeroSet {
    pub poles: Vec<C64>,
    pub zeros: Vec<C64>,
    pub unit_circle_tol: f64,
}

impl PoleZeroSet {
    pub fn of(model: &StateSpaceModel) -> Result<Self> {
        Ok(Self {
            poles: model.poles(),
            zeros: transmission_zeros(model)?,
            unit_circle_tol: UNIT_CIRCLE_TOL,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.unit_circle_tol = tol;
        self
    }

    fn filter(&self, roots: &[C64], pred: impl Fn(f64) -> bool) -> Vec<C64> {
        roots.iter().copied().filter(|r| pred(r.norm())).collect()
    }

    pub fn stable_poles(&self) -> Vec<C64> {
        let t = self.unit_circle_tol;
        self.filter(&self.poles, |m| m < 1.0 - t)
    }
    pub fn marginal_poles(&self) -> Vec<C64> {
        let t = self.unit_circle_tol;
        self.filter(&self.poles, |m| (m - 1.0).abs() <= t)
    }
    pub fn unstable_poles(&self) -> Vec<C64> {
        let t = self.unit_circle_tol;
        self.filter(&self.poles, |m| m > 1.0 + t)
    }
    pub fn unstable_zeros(&self) -> Vec<C64> {
        let t = self.unit_circle_tol;
        self.filter(&self.zeros, |m| m > 1.0 + t)
    }
}
