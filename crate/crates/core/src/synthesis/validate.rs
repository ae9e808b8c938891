use serde::{Deserialize, Serialize};

use crate::harness::{max_stabilized_angle, AngleSearch, LtiController, MaxAngle};
use crate::limits::{closed_loop, hinf_norm, plant_bound, DEFAULT_GRID_SIZE};
use crate::linalg::StateSpaceModel;
use crate::plant::{linearize, PhysicalParams, SensorSpec};
use crate::Result;

/// Tolerance of the `||T|| >= bound` comparison.
pub const BOUND_TOLERANCE: f64 = 1e-3;

/// How a controller synthesized on an identified model behaves on the true plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ell0: f64,
    /// Closed loop with the true linearization is internally stable.
    pub internally_stable: bool,
    pub spectral_radius: f64,
    /// `||T||_inf` on the true linearization, when the loop is stable.
    pub t_norm: Option<f64>,
    pub bound: f64,
    /// `t_norm >= bound - BOUND_TOLERANCE`; `None` for unstable loops.
    pub bound_respected: Option<bool>,
    /// Bisection on the nonlinear simulator.
    pub max_angle: MaxAngle,
}

/// Checks `controller` (acting as `u = K(y)`) against the true plant at `params`.
pub fn validate_controller(
    controller: &StateSpaceModel,
    params: &PhysicalParams,
    sensor: &SensorSpec,
    search: &AngleSearch,
) -> Result<ValidationReport> {
    let plant = linearize(params)?;
    // closed_loop uses u_p = r - C(y)
    let cl = closed_loop(&plant, &controller.negated())?;
    let bound = plant_bound(&plant)?.value;
    let t_norm = if cl.internally_stable {
        Some(hinf_norm(&cl.t, DEFAULT_GRID_SIZE)?)
    } else {
        None
    };
    let mut k = LtiController::new(controller.clone())?;
    let max_angle = max_stabilized_angle(&mut k, params, sensor, search)?;
    Ok(ValidationReport {
        ell0: params.ell0,
        internally_stable: cl.internally_stable,
        spectral_radius: cl.spectral_radius,
        t_norm,
        bound,
        bound_respected: t_norm.map(|t| t >= bound - BOUND_TOLERANCE),
        max_angle,
    })
}
