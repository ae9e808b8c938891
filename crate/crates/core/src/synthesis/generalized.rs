use nalgebra::DMatrix;

use crate::linalg::StateSpaceModel;
use crate::{Error, Result};

/// Augmented plant with a disturbance on every state and on the output, and
/// a performance output stacking the state and the weighted input:
///
/// ```text
/// x+ = A x + [I 0] w + B u
/// z  = [I; 0] x + [0; eps] u
/// y  = C x + [0 1] w
/// ```
#[derive(Debug, Clone)]
pub struct GeneralizedPlant {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub epsilon: f64,
    pub dt: f64,
}

impl GeneralizedPlant {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    /// Number of disturbance inputs, `n + 1`.
    pub fn n_disturbances(&self) -> usize {
        self.b1.ncols()
    }

    /// Closed loop `w -> z` with the output-feedback controller `u = K(y)`.
    /// State ordering is `[x_plant; x_controller]`.
    pub fn close_loop(&self, controller: &StateSpaceModel) -> Result<StateSpaceModel> {
        let (ak, bk, ck, dk) = (controller.a(), controller.b(), controller.c(), controller.d());
        if dk.iter().any(|v| *v != 0.0) {
            return Err(Error::UnsupportedShape("controller must be strictly proper".into()));
        }
        let (n, nk, nw) = (self.n_states(), controller.n_states(), self.n_disturbances());
        let mut a = DMatrix::zeros(n + nk, n + nk);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a.view_mut((0, n), (n, nk)).copy_from(&(&self.b2 * ck));
        a.view_mut((n, 0), (nk, n)).copy_from(&(bk * &self.c2));
        a.view_mut((n, n), (nk, nk)).copy_from(ak);
        let mut b = DMatrix::zeros(n + nk, nw);
        b.view_mut((0, 0), (n, nw)).copy_from(&self.b1);
        b.view_mut((n, 0), (nk, nw)).copy_from(&(bk * &self.d21));
        let mut c = DMatrix::zeros(n + 1, n + nk);
        c.view_mut((0, 0), (n + 1, n)).copy_from(&self.c1);
        c.view_mut((0, n), (n + 1, nk)).copy_from(&(&self.d12 * ck));
        StateSpaceModel::new(a, b, c, DMatrix::zeros(n + 1, nw), self.dt)
    }
}

/// Builds the generalized plant around an identified SISO model `(A, B, C)`.
pub fn build_generalized_plant(model: &StateSpaceModel, epsilon: f64) -> Result<GeneralizedPlant> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !model.is_siso() {
        return Err(Error::UnsupportedShape("generalized plant needs a SISO model".into()));
    }
    let n = model.n_states();
    if n == 0 {
        return Err(Error::InvalidParameter("model has no states".into()));
    }
    let mut b1 = DMatrix::zeros(n, n + 1);
    b1.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut c1 = DMatrix::zeros(n + 1, n);
    c1.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut d12 = DMatrix::zeros(n + 1, 1);
    d12[(n, 0)] = epsilon;
    let mut d21 = DMatrix::zeros(1, n + 1);
    d21[(0, n)] = 1.0;
    Ok(GeneralizedPlant {
        a: model.a().clone(),
        b1,
        b2: model.b().clone(),
        c1,
        d12,
        c2: model.c().clone(),
        d21,
        epsilon,
        dt: model.dt(),
    })
}
