use nalgebra::DVector;

use crate::linalg::StateSpaceModel;
use crate::{Error, Result};

/// Output-feedback controller driven one observation at a time.
pub trait Controller {
    /// Clears internal state at the start of an episode.
    fn reset(&mut self);
    /// Returns the input for the latest observation `y`.
    fn act(&mut self, y: f64) -> f64;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn reset(&mut self) {
        (**self).reset()
    }

    fn act(&mut self, y: f64) -> f64 {
        (**self).act(y)
    }
}

/// Always returns zero force.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn reset(&mut self) {}

    fn act(&mut self, _y: f64) -> f64 {
        0.0
    }
}

/// SISO LTI controller `u = C xi + D y`, `xi+ = A xi + B y`, started from `xi = 0`.
#[derive(Debug, Clone)]
pub struct LtiController {
    model: StateSpaceModel,
    xi: DVector<f64>,
    scratch: DVector<f64>,
}

impl LtiController {
    pub fn new(model: StateSpaceModel) -> Result<Self> {
        if !model.is_siso() {
            return Err(Error::UnsupportedShape(format!(
                "controller must be SISO, got {} inputs and {} outputs",
                model.n_inputs(),
                model.n_outputs()
            )));
        }
        let n = model.n_states();
        Ok(Self {
            model,
            xi: DVector::zeros(n),
            scratch: DVector::zeros(n),
        })
    }

    pub fn zero(dt: f64) -> Self {
        Self::new(StateSpaceModel::static_gain(0.0, dt).expect("zero gain is valid")).expect("static gain is SISO")
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }
}

impl Controller for LtiController {
    fn reset(&mut self) {
        self.xi.fill(0.0);
    }

    fn act(&mut self, y: f64) -> f64 {
        let m = &self.model;
        let u = (m.c() * &self.xi)[0] + m.d()[(0, 0)] * y;
        self.scratch.gemv(1.0, m.a(), &self.xi, 0.0);
        self.scratch.axpy(y, &m.b().column(0), 1.0);
        std::mem::swap(&mut self.xi, &mut self.scratch);
        u
    }
}

/// Adapts a closure `y -> u` (stateless).
pub struct FnController<F>(pub F);

impl<F: FnMut(f64) -> f64> Controller for FnController<F> {
    fn reset(&mut self) {}

    fn act(&mut self, y: f64) -> f64 {
        (self.0)(y)
    }
}
