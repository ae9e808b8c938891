use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{step, PhysicalParams, SensorSpec, SimState};
use crate::harness::Controller;
use crate::rng::substream;
use crate::Result;

/// Episode semantics: horizon, initialization box and termination box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    /// Each state variable starts uniform in `[-init_halfwidth, init_halfwidth]`.
    pub init_halfwidth: f64,
    /// Cart position limit (m).
    pub h_limit: f64,
    /// Pole angle limit (rad).
    pub theta_limit: f64,
    /// Reference force added to the control input; fixed to zero in every experiment.
    pub reference: f64,
    pub seed: u64,
    /// Overrides the random initial state when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<SimState>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: 500,
            init_halfwidth: 0.05,
            h_limit: 0.6,
            theta_limit: 15f64.to_radians(),
            reference: 0.0,
            seed: 0,
            initial_state: None,
        }
    }
}

impl EpisodeConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn starting_at(mut self, state: SimState) -> Self {
        self.initial_state = Some(state);
        self
    }

    pub fn sample_initial_state(&self) -> SimState {
        if let Some(s) = self.initial_state {
            return s;
        }
        let w = self.init_halfwidth;
        let mut rng = substream(self.seed, "init", 0);
        let mut draw = || rng.random_range(-w..=w);
        SimState::new(draw(), draw(), draw(), draw())
    }

    pub fn in_bounds(&self, s: &SimState) -> bool {
        s.h.abs() <= self.h_limit && s.theta.abs() <= self.theta_limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Survived the full horizon.
    Timeout,
    CartLimit,
    AngleLimit,
    /// Controller returned a non-finite input.
    ControllerFault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Survived steps; equals the episode reward.
    pub steps: usize,
    pub success: bool,
    pub termination: Termination,
    pub seed: u64,
}

impl EpisodeResult {
    pub fn reward(&self) -> f64 {
        self.steps as f64
    }
}

/// Time-indexed input/output record. `z` holds the measured fixation-point
/// position (the true position plus sensor noise).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_full: Option<Vec<SimState>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn push(&mut self, state: SimState, z: f64, u: f64) {
        self.z.push(z);
        self.u.push(u);
        self.x_full.get_or_insert_with(Vec::new).push(state);
    }

    /// First `len` samples.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            z: self.z[..len].to_vec(),
            u: self.u[..len].to_vec(),
            x_full: self.x_full.as_ref().map(|x| x[..len].to_vec()),
        }
    }
}

/// Simulates one episode under `controller`.
///
/// At step `t` the sensor reads `x_t`, the controller returns `u_t`, and the
/// plant advances; the step counts as survived when `x_{t+1}` stays inside
/// the termination box. The trajectory records `(x_t, y_t, u_t)` for every
/// executed step.
pub fn run_episode(
    params: &PhysicalParams,
    config: &EpisodeConfig,
    controller: &mut dyn Controller,
    sensor: &SensorSpec,
) -> Result<(EpisodeResult, Trajectory)> {
    params.validate()?;
    let mut sensor = sensor.instance(config.seed);
    let mut state = config.sample_initial_state();
    let mut traj = Trajectory::default();
    controller.reset();
    let mut termination = Termination::Timeout;
    let mut survived = 0;
    for _ in 0..config.max_steps {
        let y = sensor.observe(params, &state);
        let u = controller.act(y);
        if !u.is_finite() {
            traj.push(state, y, u);
            termination = Termination::ControllerFault;
            break;
        }
        traj.push(state, y, u);
        let next = step(params, &state, u + config.reference)?;
        if next.h.abs() > config.h_limit || !next.h.is_finite() {
            termination = Termination::CartLimit;
            break;
        }
        if next.theta.abs() > config.theta_limit || !next.theta.is_finite() {
            termination = Termination::AngleLimit;
            break;
        }
        survived += 1;
        state = next;
    }
    let result = EpisodeResult {
        steps: survived,
        success: survived == config.max_steps,
        termination,
        seed: config.seed,
    };
    Ok((result, traj))
}
