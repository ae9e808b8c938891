use nalgebra::{DMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::linalg::StateSpaceModel;
use crate::{Error, Result};

/// Physical constants of the cartpole plus the sensor fixation height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Cart mass (kg).
    pub cart_mass: f64,
    /// Pole mass (kg).
    pub pole_mass: f64,
    /// Pole length (m).
    pub pole_length: f64,
    /// Gravity (m/s^2).
    pub gravity: f64,
    /// Integration step (s).
    pub tau: f64,
    /// Fixation point along the pole (m), `0 < ell0 <= pole_length`.
    pub ell0: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_length: 1.0,
            gravity: 9.81,
            tau: 0.02,
            ell0: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn with_fixation(ell0: f64) -> Result<Self> {
        let p = Self {
            ell0,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("pole_length", self.pole_length),
            ("tau", self.tau),
            ("ell0", self.ell0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.gravity.is_finite() {
            return Err(Error::InvalidParameter("gravity must be finite".into()));
        }
        if self.ell0 > self.pole_length {
            return Err(Error::InvalidParameter(format!(
                "fixation {} exceeds pole length {}",
                self.ell0, self.pole_length
            )));
        }
        Ok(())
    }

    /// Open-loop unstable pole of the Euler-discretized linearization,
    /// `1 + tau sqrt((M + m) g / (M l))`.
    pub fn unstable_pole(&self) -> f64 {
        1.0 + self.tau * ((self.cart_mass + self.pole_mass) * self.gravity / (self.cart_mass * self.pole_length)).sqrt()
    }

    /// Non-minimum-phase zero `1 + tau sqrt(g / (l - l0))`, absent when `l0 = l`.
    pub fn unstable_zero(&self) -> Option<f64> {
        let gap = self.pole_length - self.ell0;
        (gap > 0.0).then(|| 1.0 + self.tau * (self.gravity / gap).sqrt())
    }
}

/// Cartpole state; `theta = 0` is upright.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub h: f64,
    pub h_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl SimState {
    pub fn new(h: f64, h_dot: f64, theta: f64, theta_dot: f64) -> Self {
        Self {
            h,
            h_dot,
            theta,
            theta_dot,
        }
    }

    pub fn upright_with_angle(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.h, self.h_dot, self.theta, self.theta_dot)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn as_array(self) -> [f64; 4] {
        [self.h, self.h_dot, self.theta, self.theta_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// `(h'', theta'')` solving the two equations of motion.
pub fn accelerations(params: &PhysicalParams, state: &SimState, u: f64) -> Result<(f64, f64)> {
    let PhysicalParams {
        cart_mass: big_m,
        pole_mass: m,
        pole_length: l,
        gravity: g,
        ..
    } = *params;
    let (s, c) = state.theta.sin_cos();
    // [[M + m, m l], [cos, l]] [h''; theta''] = [u + m l theta'^2 sin; g sin]
    let rhs0 = u + m * l * state.theta_dot * state.theta_dot * s;
    let rhs1 = g * s;
    let det = (big_m + m) * l - m * l * c;
    if det.abs() <= f64::EPSILON * (big_m + m) * l {
        return Err(Error::Numerical("singular cartpole mass matrix".into()));
    }
    let h_ddot = (l * rhs0 - m * l * rhs1) / det;
    let theta_ddot = ((big_m + m) * rhs1 - c * rhs0) / det;
    Ok((h_ddot, theta_ddot))
}

/// One explicit-Euler step: positions advance with the old velocities,
/// velocities with the accelerations at the pre-step state.
pub fn step(params: &PhysicalParams, state: &SimState, u: f64) -> Result<SimState> {
    let (h_ddot, theta_ddot) = accelerations(params, state, u)?;
    let tau = params.tau;
    Ok(SimState {
        h: state.h + tau * state.h_dot,
        h_dot: state.h_dot + tau * h_ddot,
        theta: state.theta + tau * state.theta_dot,
        theta_dot: state.theta_dot + tau * theta_ddot,
    })
}

/// Applies the input sequence `inputs` in order.
pub fn step_n(params: &PhysicalParams, state: &SimState, inputs: &[f64]) -> Result<SimState> {
    inputs.iter().try_fold(*state, |s, &u| step(params, &s, u))
}

/// Euler-consistent linearization about the upright equilibrium with the
/// fixation-point readout `C = [1, 0, l0, 0]`.
pub fn linearize(params: &PhysicalParams) -> Result<StateSpaceModel> {
    params.validate()?;
    let PhysicalParams {
        cart_mass: big_m,
        pole_mass: m,
        pole_length: l,
        gravity: g,
        tau,
        ell0,
    } = *params;
    // At the origin: h'' = (u - m g theta) / M, theta'' = ((M + m) g theta - u) / (M l)
    #[rustfmt::skip]
    let a_c = DMatrix::from_row_slice(4, 4, &[
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, -m * g / big_m, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, (big_m + m) * g / (big_m * l), 0.0,
    ]);
    let b_c = DMatrix::from_column_slice(4, 1, &[0.0, 1.0 / big_m, 0.0, -1.0 / (big_m * l)]);
    let a_d = DMatrix::identity(4, 4) + a_c * tau;
    let b_d = b_c * tau;
    let c = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, ell0, 0.0]);
    StateSpaceModel::new(a_d, b_d, c, DMatrix::zeros(1, 1), tau)
}
