//! Evaluation protocol and experiment orchestration.

mod controller;
mod eval;
mod stats;
mod sweep;

pub use controller::{Controller, FnController, LtiController, ZeroController};
pub use eval::{bisect_angle, episode_seed, evaluate, max_stabilized_angle, AngleSearch, Evaluation, MaxAngle};
pub use stats::{median, quantile, Summary};
pub use sweep::{
    run_sweep, CellRecord, CellStatus, CurveRow, ExperimentSpec, MaxAngleRow, RewardRow, RlSettings, SweepMethod,
    SweepResult, SummaryRow,
};
