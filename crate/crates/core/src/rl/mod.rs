//! Soft Actor-Critic over fixed-length observation histories.

mod checkpoint;
mod history;
mod network;
mod replay;
mod sac;
mod train;

pub use checkpoint::{load_policy, policy_sha256, save_policy, CheckpointHeader};
pub use history::{make_history_state, History};
pub use network::{Activation, Adam, Dense, ForwardCache, Gradients, Mlp};
pub use replay::{Batch, ReplayBuffer};
pub use sac::{
    CriticGradients, Policy, PolicyGradients, PolicySample, SacAgent, SacConfig, UpdateStats, LOG_STD_MAX, LOG_STD_MIN,
};
pub use train::{train, write_curve, write_curve_csv, CurvePoint, StopReason, TrainConfig, TrainOutcome};

use crate::harness::Controller;

/// Deterministic (squashed-mean) policy acting on its own observation history.
#[derive(Debug, Clone)]
pub struct PolicyController {
    policy: Policy,
    history: History,
    state: Vec<f64>,
}

impl PolicyController {
    pub fn new(policy: Policy, history_len: usize) -> Self {
        Self {
            policy,
            history: History::new(history_len),
            state: Vec::with_capacity(history_len),
        }
    }
}

impl Controller for PolicyController {
    fn reset(&mut self) {
        self.history.reset();
    }

    fn act(&mut self, y: f64) -> f64 {
        self.history.push(y);
        self.history.write_state(&mut self.state);
        self.policy.act_deterministic(&self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn controller_uses_history_window() {
        let cfg = SacConfig {
            history_len: 3,
            hidden_widths: vec![4],
            ..SacConfig::default()
        };
        let agent = SacAgent::new(cfg).unwrap();
        let mut k = PolicyController::new(agent.policy.clone(), 3);
        let ys = [0.1, -0.2, 0.05, 0.3];
        let mut us = Vec::new();
        for y in ys {
            us.push(k.act(y));
        }
        assert_eq!(us[3], agent.policy.act_deterministic(&[-0.2, 0.05, 0.3]));
        assert_eq!(us[0], agent.policy.act_deterministic(&[0.1, 0.1, 0.1]));
        k.reset();
        assert_eq!(k.act(0.1), us[0]);
    }

    #[test]
    fn actions_respect_limit() {
        let mut rng = substream(0, "rl-bound", 0);
        for i in 0..200 {
            let cfg = SacConfig {
                history_len: 3,
                hidden_widths: vec![4],
                seed: i,
                ..SacConfig::default()
            };
            let mut agent = SacAgent::new(cfg).unwrap();
            // blow the weights up to saturate the squashing
            let scaled: Vec<f64> = agent.policy.net.flatten().iter().map(|v| v * 1e3).collect();
            agent.policy.net.set_flat(&scaled);
            for _ in 0..50 {
                let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(agent.policy.act_deterministic(&s).abs() <= 10.0);
                assert!(agent.policy.sample(&s, &mut rng).abs() <= 10.0);
            }
        }
    }
}
