use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::history::History;
use super::replay::ReplayBuffer;
use super::sac::{SacAgent, SacConfig, UpdateStats};
use crate::plant::{step, EpisodeConfig, PhysicalParams, SensorSpec};
use crate::rng::{derive_seed, substream};
use crate::Result;

/// Episode budget and early-stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_episodes: usize,
    /// Episodes in the running mean.
    pub running_window: usize,
    /// Stop when the running mean has not improved by more than
    /// `plateau_min_gain` for this many episodes.
    pub plateau_episodes: usize,
    pub plateau_min_gain: f64,
    /// Stop once the running mean reaches this value.
    pub reward_ceiling: f64,
    pub max_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_episodes: 2000,
            running_window: 100,
            plateau_episodes: 500,
            plateau_min_gain: 1.0,
            reward_ceiling: 500.0,
            max_steps: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpisodeBudget,
    Ceiling,
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub reward: f64,
    pub running_reward: f64,
    pub steps_cumulative: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: SacAgent,
    pub curve: Vec<CurvePoint>,
    pub stop: StopReason,
    pub last_update: Option<UpdateStats>,
}

impl TrainOutcome {
    pub fn final_running_reward(&self) -> f64 {
        self.curve.last().map_or(0.0, |p| p.running_reward)
    }
}

/// Trains a SAC agent on the nonlinear plant observed through `sensor`.
///
/// Reward is 1 for every step that stays inside the limits. Leaving the
/// limits is terminal; reaching `max_steps` is not.
pub fn train(
    params: &PhysicalParams,
    sensor: &SensorSpec,
    sac: &SacConfig,
    cfg: &TrainConfig,
    mut on_episode: impl FnMut(&CurvePoint),
) -> Result<TrainOutcome> {
    params.validate()?;
    let mut agent = SacAgent::new(sac.clone())?;
    let mut buffer = ReplayBuffer::new(sac.buffer_capacity, sac.history_len);
    let mut history = History::new(sac.history_len);
    let mut act_rng = substream(sac.seed, "train-action", 0);
    let mut update_rng = substream(sac.seed, "train-update", 0);
    let limit = sac.action_limit;

    let mut curve: Vec<CurvePoint> = Vec::with_capacity(cfg.max_episodes);
    let mut total_steps = 0;
    let mut last_update = None;
    let mut best_running = f64::NEG_INFINITY;
    let mut best_episode = 0;
    let mut stop = StopReason::EpisodeBudget;
    let mut state_buf = Vec::with_capacity(sac.history_len);

    for episode in 0..cfg.max_episodes {
        let ep_cfg = EpisodeConfig {
            max_steps: cfg.max_steps,
            ..EpisodeConfig::with_seed(derive_seed(sac.seed, "train-episode", episode as u64))
        };
        let mut sensor = sensor.instance(ep_cfg.seed);
        let mut state = ep_cfg.sample_initial_state();
        history.reset();
        let y0 = sensor.observe(params, &state);
        history.push(y0);
        buffer.begin_episode(y0);
        let mut reward = 0.0;
        for t in 0..ep_cfg.max_steps {
            history.write_state(&mut state_buf);
            let a = if total_steps < sac.warmup_steps {
                act_rng.random_range(-limit..=limit)
            } else {
                agent.policy.sample(&state_buf, &mut act_rng)
            };
            let next = step(params, &state, a)?;
            let failed = !ep_cfg.in_bounds(&next);
            let r = if failed { 0.0 } else { 1.0 };
            let y = sensor.observe(params, &next);
            history.push(y);
            buffer.push(a, r, y, failed);
            reward += r;
            total_steps += 1;
            if total_steps >= sac.warmup_steps && buffer.len() >= sac.batch_size {
                for _ in 0..sac.updates_per_step {
                    let batch = buffer.sample(sac.batch_size, &mut update_rng);
                    last_update = Some(agent.update(&batch, &mut update_rng)?);
                }
            }
            state = next;
            if failed || t + 1 == ep_cfg.max_steps {
                break;
            }
        }
        let from = curve.len().saturating_sub(cfg.running_window - 1);
        let window: f64 = curve[from..].iter().map(|p| p.reward).sum::<f64>() + reward;
        let point = CurvePoint {
            episode,
            reward,
            running_reward: window / (curve.len() - from + 1) as f64,
            steps_cumulative: total_steps,
        };
        on_episode(&point);
        curve.push(point);
        if point.running_reward > best_running + cfg.plateau_min_gain {
            best_running = point.running_reward;
            best_episode = episode;
        }
        if curve.len() >= cfg.running_window && point.running_reward >= cfg.reward_ceiling {
            stop = StopReason::Ceiling;
            break;
        }
        if episode - best_episode >= cfg.plateau_episodes {
            stop = StopReason::Plateau;
            break;
        }
    }
    Ok(TrainOutcome {
        agent,
        curve,
        stop,
        last_update,
    })
}

/// Learning curve as CSV with columns `episode,running_reward,steps_cumulative`.
pub fn write_curve<W: Write>(writer: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["episode", "running_reward", "steps_cumulative"])?;
    for p in curve {
        w.write_record([
            p.episode.to_string(),
            p.running_reward.to_string(),
            p.steps_cumulative.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    write_curve(std::io::BufWriter::new(std::fs::File::create(path)?), curve)
}
