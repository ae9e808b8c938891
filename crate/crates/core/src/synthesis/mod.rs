//! Weighted H-infinity output-feedback synthesis on an identified model.

mod artifact;
mod generalized;
mod hinf;
mod validate;

pub use artifact::ControllerArtifact;
pub use generalized::{build_generalized_plant, GeneralizedPlant};
pub use hinf::{
    controller_at_gamma, hinf_synthesize, GammaFailure, SynthesisDiagnostics, SynthesisOptions, SynthesizedController,
};
pub use validate::{validate_controller, ValidationReport, BOUND_TOLERANCE};

use crate::plant::SensorTier;

/// Control-effort weight used for each sensor tier.
pub fn default_epsilon(tier: SensorTier) -> f64 {
    match tier {
        SensorTier::NoiseFree => 5e-3,
        SensorTier::DepthLike | SensorTier::RgbLike => 1e-6,
    }
}
