use serde::{Deserialize, Serialize};

use super::Controller;
use crate::plant::{run_episode, EpisodeConfig, EpisodeResult, PhysicalParams, SensorSpec, SimState};
use crate::rng::derive_seed;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub avg_reward: f64,
    pub success_rate: f64,
    pub episodes: Vec<EpisodeResult>,
}

impl Evaluation {
    pub fn from_episodes(episodes: Vec<EpisodeResult>) -> Self {
        let n = episodes.len().max(1) as f64;
        Self {
            avg_reward: episodes.iter().map(EpisodeResult::reward).sum::<f64>() / n,
            success_rate: episodes.iter().filter(|e| e.success).count() as f64 / n,
            episodes,
        }
    }
}

/// Seed of evaluation episode `index`.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, "eval", index as u64)
}

/// Runs `n_episodes` from random initial states.
pub fn evaluate(
    controller: &mut dyn Controller,
    params: &PhysicalParams,
    sensor: &SensorSpec,
    n_episodes: usize,
    seed: u64,
) -> Result<Evaluation> {
    let episodes = (0..n_episodes.max(1))
        .map(|i| {
            let cfg = EpisodeConfig::with_seed(episode_seed(seed, i));
            run_episode(params, &cfg, controller, sensor).map(|(r, _)| r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation::from_episodes(episodes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSearch {
    /// Bisection stops when the bracket is narrower than this (degrees).
    pub tol_deg: f64,
    pub max_deg: f64,
    /// Noise seed shared by every probe.
    pub seed: u64,
}

impl Default for AngleSearch {
    fn default() -> Self {
        Self {
            tol_deg: 0.01,
            max_deg: 15.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxAngle {
    pub degrees: f64,
    /// A probe above the returned angle survived.
    pub non_monotone: bool,
    pub probes: usize,
}

/// Largest initial tilt (all other states zero) the controller holds for the
/// full horizon, by bisection on `[0, max_deg]`.
pub fn max_stabilized_angle(
    controller: &mut dyn Controller,
    params: &PhysicalParams,
    sensor: &SensorSpec,
    search: &AngleSearch,
) -> Result<MaxAngle> {
    bisect_angle(search, |deg| {
        let cfg = EpisodeConfig::with_seed(search.seed).starting_at(SimState::upright_with_angle(deg.to_radians()));
        Ok(run_episode(params, &cfg, controller, sensor)?.0.success)
    })
}

/// Bisection on a survival predicate assumed monotone in the angle. Returns
/// 0 when the upright start already fails; afterwards probes three angles
/// above the result and flags the search when any of them survives.
pub fn bisect_angle(search: &AngleSearch, mut survives: impl FnMut(f64) -> Result<bool>) -> Result<MaxAngle> {
    let mut probes = 0;
    let mut probe = |deg: f64| {
        probes += 1;
        survives(deg)
    };
    let (degrees, non_monotone) = if !probe(0.0)? {
        (0.0, false)
    } else if probe(search.max_deg)? {
        (search.max_deg, false)
    } else {
        let (mut lo, mut hi) = (0.0, search.max_deg);
        while hi - lo >= search.tol_deg {
            let mid = 0.5 * (lo + hi);
            if probe(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut flagged = false;
        for k in 1..=3 {
            flagged |= probe(hi + k as f64 * (search.max_deg - hi) / 4.0)?;
        }
        (lo, flagged)
    };
    Ok(MaxAngle {
        degrees,
        non_monotone,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ZeroController;
    use crate::plant::SensorTier;

    fn noise_free() -> SensorSpec {
        SensorSpec::for_params(SensorTier::NoiseFree, &PhysicalParams::default())
    }

    #[test]
    fn success_rate_arithmetic() {
        let mk = |steps| EpisodeResult {
            steps,
            success: steps == 500,
            termination: crate::plant::Termination::Timeout,
            seed: 0,
        };
        let eps: Vec<_> = (0..100).map(|i| mk(if i < 31 { 500 } else { 100 })).collect();
        let e = Evaluation::from_episodes(eps);
        assert!((e.success_rate - 0.31).abs() < 1e-15);
        assert!((e.avg_reward - (31.0 * 500.0 + 69.0 * 100.0) / 100.0).abs() < 1e-12);
        let all = Evaluation::from_episodes((0..10).map(|_| mk(500)).collect());
        assert_eq!((all.avg_reward, all.success_rate), (500.0, 1.0));
    }

    #[test]
    fn zero_controller_stabilizes_nothing() {
        let m = max_stabilized_angle(
            &mut ZeroController,
            &PhysicalParams::default(),
            &noise_free(),
            &AngleSearch::default(),
        )
        .unwrap();
        // theta0 = 0 is an exact equilibrium, any tilt falls
        assert!(m.degrees < 0.01, "{m:?}");
    }

    #[test]
    fn bisection_finds_known_threshold() {
        let search = AngleSearch::default();
        for star in [0.0, 0.004, 6.37, 14.999] {
            let m = bisect_angle(&search, |d| Ok(d <= star)).unwrap();
            assert!((m.degrees - star).abs() < search.tol_deg, "{star}: {m:?}");
            assert!(m.degrees <= star);
            assert!(!m.non_monotone);
        }
        assert_eq!(bisect_angle(&search, |_| Ok(true)).unwrap().degrees, 15.0);
        assert_eq!(bisect_angle(&search, |_| Ok(false)).unwrap().degrees, 0.0);
    }

    #[test]
    fn non_monotone_basin_is_flagged() {
        // survives below 3 degrees and again in [8, 10]
        let m = bisect_angle(&AngleSearch::default(), |d| Ok(d <= 3.0 || (8.0..=10.0).contains(&d))).unwrap();
        assert!(m.non_monotone, "{m:?}");
    }
}
