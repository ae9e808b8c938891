//! Nonlinear cartpole with a fixation-point observation.
//!
//! Dynamics (reference force folded into `u`):
//!
//! ```text
//! (M + m) h'' + m l (theta'' - theta'^2 sin theta) = u
//! m (h'' cos theta + l theta'' - g sin theta)      = 0
//! z = h + l0 sin theta,   y = z + n
//! ```
//!
//! integrated with explicit Euler at step `tau`.

mod dynamics;
mod episode;
mod io;
mod sensor;

pub use dynamics::{accelerations, linearize, step, step_n, PhysicalParams, SimState};
pub use episode::{run_episode, EpisodeConfig, EpisodeResult, Termination, Trajectory};
pub use io::{read_trajectory_csv, write_episode_metadata, write_trajectory, write_trajectory_csv, EpisodeMetadata};
pub use sensor::{fixation_position, Sensor, SensorSpec, SensorTier};
