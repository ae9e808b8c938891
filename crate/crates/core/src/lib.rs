//! Occluded cartpole benchmark toolkit.
//!
//! The crate studies how the fixation point of a partially occluded
//! inverted pendulum (and the noise level of the sensor reading it) limits
//! the closed-loop performance of two families of learned controllers:
//!
//! - [`sysid`] + [`synthesis`]: ARX least squares followed by a Ho-Kalman
//!   realization, then a weighted discrete-time H-infinity output-feedback
//!   controller.
//! - [`rl`]: soft actor-critic over a sliding window of observations.
//!
//! [`limits`] computes the analytic lower bound on the complementary
//! sensitivity peak that every stabilizing linear controller must respect,
//! and [`harness`] runs the evaluation protocol (average reward, success
//! rate, maximum stabilized angle, data-budget sweeps).
//!
//! Runnable walkthroughs live in `crates/core/examples/`; the `occball`
//! binary exposes the same pipeline from the command line.

pub mod error;
pub mod harness;
pub mod limits;
pub mod linalg;
pub mod plant;
pub mod rl;
pub mod rng;
pub mod synthesis;
pub mod sysid;

pub use error::{Error, Result};
pub use linalg::{PoleZeroSet, StateSpaceModel};
pub use plant::{PhysicalParams, SensorSpec, SensorTier, SimState};
