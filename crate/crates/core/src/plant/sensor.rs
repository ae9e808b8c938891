use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{PhysicalParams, SimState};
use crate::rng::{substream, StreamRng};

/// Observation quality tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorTier {
    /// Exact fixation-point position.
    #[serde(rename = "true_z", alias = "noise_free")]
    NoiseFree,
    /// Noise level of a perception map trained on depth images.
    #[serde(rename = "depth", alias = "depth_like")]
    DepthLike,
    /// Noise level of a perception map trained on RGB images.
    #[serde(rename = "rgb", alias = "rgb_like")]
    RgbLike,
}

impl SensorTier {
    pub const ALL: [SensorTier; 3] = [SensorTier::NoiseFree, SensorTier::DepthLike, SensorTier::RgbLike];

    /// Normalized RMSE of the perception map (fraction of the z range).
    pub fn noise_frac(self) -> f64 {
        match self {
            SensorTier::NoiseFree => 0.0,
            SensorTier::DepthLike => 0.0003,
            SensorTier::RgbLike => 0.0025,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorTier::NoiseFree => "true_z",
            SensorTier::DepthLike => "depth",
            SensorTier::RgbLike => "rgb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "true_z" | "noise_free" | "none" => Some(SensorTier::NoiseFree),
            "depth" | "depth_like" => Some(SensorTier::DepthLike),
            "rgb" | "rgb_like" => Some(SensorTier::RgbLike),
            _ => None,
        }
    }
}

impl std::fmt::Display for SensorTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Noise model of the fixation-point sensor: `y = z + N(0, sigma^2)` with
/// `sigma = noise_frac * z_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub tier: SensorTier,
    pub noise_frac: f64,
    /// Range of `z` over the termination box, `2 (h_limit + l0 sin theta_limit)`.
    pub z_range: f64,
}

impl SensorSpec {
    pub fn new(tier: SensorTier, ell0: f64, h_limit: f64, theta_limit: f64) -> Self {
        Self {
            tier,
            noise_frac: tier.noise_frac(),
            z_range: 2.0 * (h_limit + ell0 * theta_limit.sin()),
        }
    }

    /// Sensor for the default termination box (0.6 m, 15 degrees).
    pub fn for_params(tier: SensorTier, params: &PhysicalParams) -> Self {
        let cfg = super::EpisodeConfig::default();
        Self::new(tier, params.ell0, cfg.h_limit, cfg.theta_limit)
    }

    pub fn sigma(&self) -> f64 {
        self.noise_frac * self.z_range
    }

    /// Sensor instance drawing noise from the `"sensor"` substream of `seed`.
    pub fn instance(&self, seed: u64) -> Sensor {
        self.instance_on(substream(seed, "sensor", 0))
    }

    pub fn instance_on(&self, rng: StreamRng) -> Sensor {
        Sensor {
            spec: *self,
            noise: Normal::new(0.0, self.sigma()).expect("sigma is finite and non-negative"),
            rng,
        }
    }
}

/// Noise-free fixation-point position `h + l0 sin theta`.
pub fn fixation_position(params: &PhysicalParams, state: &SimState) -> f64 {
    state.h + params.ell0 * state.theta.sin()
}

/// A sensor with its own noise stream.
#[derive(Debug, Clone)]
pub struct Sensor {
    spec: SensorSpec,
    noise: Normal<f64>,
    rng: StreamRng,
}

impl Sensor {
    pub fn spec(&self) -> &SensorSpec {
        &self.spec
    }

    pub fn observe(&mut self, params: &PhysicalParams, state: &SimState) -> f64 {
        let z = fixation_position(params, state);
        if self.spec.sigma() == 0.0 {
            z
        } else {
            z + self.noise.sample(&mut self.rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_reads_cart_position() {
        let p = PhysicalParams::default();
        let mut s = SensorSpec::for_params(SensorTier::NoiseFree, &p).instance(1);
        assert_eq!(s.observe(&p, &SimState::new(0.1, 0.0, 0.0, 0.0)), 0.1);
    }

    #[test]
    fn tilted_fixation_point() {
        let p = PhysicalParams::with_fixation(0.9).unwrap();
        let y = fixation_position(&p, &SimState::upright_with_angle(15f64.to_radians()));
        assert!((y - 0.232937).abs() < 1e-6);
    }

    #[test]
    fn depth_noise_level() {
        let spec = SensorSpec::for_params(SensorTier::DepthLike, &PhysicalParams::default());
        assert!((spec.z_range - 1.717638).abs() < 1e-6);
        assert!((spec.sigma() - 5.153e-4).abs() < 1e-6);
    }

    #[test]
    fn empirical_noise_matches_sigma() {
        let p = PhysicalParams::default();
        let spec = SensorSpec::for_params(SensorTier::RgbLike, &p);
        let mut s = spec.instance(3);
        let n = 20000;
        let var = (0..n).map(|_| s.observe(&p, &SimState::default()).powi(2)).sum::<f64>() / n as f64;
        assert!((var.sqrt() / spec.sigma() - 1.0).abs() < 0.03);
    }

    #[test]
    fn tier_names_roundtrip() {
        for t in SensorTier::ALL {
            assert_eq!(SensorTier::parse(t.name()), Some(t));
            let js = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<SensorTier>(&js).unwrap(), t);
        }
    }
}
