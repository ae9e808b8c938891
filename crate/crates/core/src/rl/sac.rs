use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::network::{Activation, Adam, Gradients, Mlp};
use super::replay::Batch;
use crate::plant::SensorTier;
use crate::rng::{substream, StreamRng};
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    pub history_len: usize,
    pub alpha: f64,
    pub tau_target: f64,
    pub gamma_discount: f64,
    pub learning_rate: f64,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub action_limit: f64,
    pub updates_per_step: usize,
    /// Uniformly random actions for this many initial environment steps.
    pub warmup_steps: usize,
    pub seed: u64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            history_len: 200,
            alpha: 0.2,
            tau_target: 0.005,
            gamma_discount: 0.99,
            learning_rate: 3e-4,
            hidden_widths: vec![256, 256],
            activation: Activation::Relu,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            action_limit: 10.0,
            updates_per_step: 1,
            warmup_steps: 1000,
            seed: 0,
        }
    }
}

impl SacConfig {
    /// Defaults with the temperature used for `tier`.
    pub fn for_tier(tier: SensorTier) -> Self {
        Self {
            alpha: if tier == SensorTier::RgbLike { 0.01 } else { 0.2 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.history_len == 0 {
            return bad("history_len must be at least 1");
        }
        if !(self.tau_target > 0.0 && self.tau_target <= 1.0) {
            return bad("tau_target must be in (0, 1]");
        }
        if !(self.gamma_discount > 0.0 && self.gamma_discount < 1.0) {
            return bad("gamma_discount must be in (0, 1)");
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return bad("alpha must be positive");
        }
        if !(self.learning_rate > 0.0 && self.action_limit > 0.0) {
            return bad("learning_rate and action_limit must be positive");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.hidden_widths.is_empty() {
            return bad("batch_size, buffer_capacity and hidden_widths must be non-empty");
        }
        Ok(())
    }

    pub fn policy_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.history_len];
        s.extend(&self.hidden_widths);
        s.push(2);
        s
    }

    pub fn critic_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.history_len + 1];
        s.extend(&self.hidden_widths);
        s.push(1);
        s
    }
}

/// Gaussian policy squashed by `tanh` and scaled to the action limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub net: Mlp,
    pub action_limit: f64,
}

/// Per-sample quantities of a reparameterized draw.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    /// Pre-squash values `mean + std * noise`.
    pub pre_tanh: Vec<f64>,
}

fn clamp_log_std(v: f64) -> f64 {
    v.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

/// `log(1 - tanh(u)^2)`, stable for large `|u|`.
fn log_sech2(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

impl Policy {
    pub fn act_deterministic(&self, state: &[f64]) -> f64 {
        let out = self.net.predict(&DMatrix::from_column_slice(state.len(), 1, state));
        self.action_limit * out[(0, 0)].tanh()
    }

    /// Squashed sample with log-density, given standard normal `noise` per column.
    pub fn sample_with_noise(&self, states: &DMatrix<f64>, noise: &[f64]) -> PolicySample {
        let out = self.net.predict(states);
        let n = states.ncols();
        let mut s = PolicySample {
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            pre_tanh: Vec::with_capacity(n),
        };
        for j in 0..n {
            let (mean, log_std) = (out[(0, j)], clamp_log_std(out[(1, j)]));
            let u = mean + log_std.exp() * noise[j];
            s.actions.push(self.action_limit * u.tanh());
            s.log_probs.push(self.log_prob_pre_tanh(noise[j], log_std, u));
            s.pre_tanh.push(u);
        }
        s
    }

    fn log_prob_pre_tanh(&self, noise: f64, log_std: f64, u: f64) -> f64 {
        -0.5 * noise * noise - log_std - 0.5 * LN_2PI - self.action_limit.ln() - log_sech2(u)
    }

    /// Density of action `a` under the policy at `state`.
    pub fn log_prob(&self, state: &[f64], a: f64) -> f64 {
        let out = self.net.predict(&DMatrix::from_column_slice(state.len(), 1, state));
        let (mean, log_std) = (out[(0, 0)], clamp_log_std(out[(1, 0)]));
        let x = (a / self.action_limit).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        let u = x.atanh();
        self.log_prob_pre_tanh((u - mean) / log_std.exp(), log_std, u)
    }

    pub fn sample(&self, state: &[f64], rng: &mut StreamRng) -> f64 {
        let noise: f64 = StandardNormal.sample(rng);
        self.sample_with_noise(&DMatrix::from_column_slice(state.len(), 1, state), &[noise])
            .actions[0]
    }
}

/// Critic input `[s; a / action_limit]`.
fn critic_input(states: &DMatrix<f64>, actions: &[f64], action_limit: f64) -> DMatrix<f64> {
    let (h, n) = states.shape();
    let mut x = DMatrix::zeros(h + 1, n);
    x.view_mut((0, 0), (h, n)).copy_from(states);
    for (j, a) in actions.iter().enumerate() {
        x[(h, j)] = a / action_limit;
    }
    x
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub config: SacConfig,
    pub policy: Policy,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    opt_policy: Adam,
    opt_q1: Adam,
    opt_q2: Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub mean_log_prob: f64,
}

/// Critic-loss gradients for both online critics.
#[derive(Debug, Clone)]
pub struct CriticGradients {
    pub loss: f64,
    pub q1: Gradients,
    pub q2: Gradients,
}

#[derive(Debug, Clone)]
pub struct PolicyGradients {
    pub loss: f64,
    pub mean_log_prob: f64,
    pub policy: Gradients,
}

impl SacAgent {
    pub fn new(config: SacConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = substream(config.seed, "sac-init", 0);
        let policy = Policy {
            net: Mlp::new(&config.policy_sizes(), config.activation, &mut rng),
            action_limit: config.action_limit,
        };
        let q1 = Mlp::new(&config.critic_sizes(), config.activation, &mut rng);
        let q2 = Mlp::new(&config.critic_sizes(), config.activation, &mut rng);
        Ok(Self::from_networks(config, policy, q1, q2))
    }

    /// Agent with given networks; targets start as copies of the critics.
    pub fn from_networks(config: SacConfig, policy: Policy, q1: Mlp, q2: Mlp) -> Self {
        let lr = config.learning_rate;
        Self {
            opt_policy: Adam::new(&policy.net, lr),
            opt_q1: Adam::new(&q1, lr),
            opt_q2: Adam::new(&q2, lr),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            config,
            policy,
            q1,
            q2,
        }
    }

    /// Soft Bellman targets `r + gamma (1 - done) (min Q_target(s', a') - alpha log pi(a'|s'))`.
    pub fn critic_targets(&self, batch: &Batch, next_noise: &[f64]) -> Vec<f64> {
        let next = self.policy.sample_with_noise(&batch.next_states, next_noise);
        let x = critic_input(&batch.next_states, &next.actions, self.config.action_limit);
        let t1 = self.q1_target.predict(&x);
        let t2 = self.q2_target.predict(&x);
        (0..batch.len())
            .map(|j| {
                let cont = if batch.dones[j] { 0.0 } else { 1.0 };
                let soft = t1[(0, j)].min(t2[(0, j)]) - self.config.alpha * next.log_probs[j];
                batch.rewards[j] + self.config.gamma_discount * cont * soft
            })
            .collect()
    }

    /// `mean((Q1 - y)^2) + mean((Q2 - y)^2)` and its gradients.
    pub fn critic_gradients(&self, batch: &Batch, targets: &[f64]) -> CriticGradients {
        let x = critic_input(&batch.states, batch.actions.as_slice(), self.config.action_limit);
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(2);
        for q in [&self.q1, &self.q2] {
            let cache = q.forward(&x);
            let out = cache.output();
            let mut d = DMatrix::zeros(1, batch.len());
            for j in 0..batch.len() {
                let e = out[(0, j)] - targets[j];
                loss += e * e / n;
                d[(0, j)] = 2.0 * e / n;
            }
            grads.push(q.backward(&cache, &d).0);
        }
        let q2 = grads.pop().expect("two critics");
        let q1 = grads.pop().expect("two critics");
        CriticGradients { loss, q1, q2 }
    }

    /// `mean(alpha log pi(a|s) - min(Q1, Q2)(s, a))` with `a` reparameterized by `noise`.
    pub fn policy_gradients(&self, states: &DMatrix<f64>, noise: &[f64]) -> PolicyGradients {
        let (alpha, limit) = (self.config.alpha, self.config.action_limit);
        let n = states.ncols();
        let cache = self.policy.net.forward(states);
        let out = cache.output().clone();
        let sample = self.policy.sample_with_noise(states, noise);
        let x = critic_input(states, &sample.actions, limit);
        let c1 = self.q1.forward(&x);
        let c2 = self.q2.forward(&x);
        let h = states.nrows();
        // which critic is the minimum, per sample
        let use_first: Vec<bool> = (0..n).map(|j| c1.output()[(0, j)] <= c2.output()[(0, j)]).collect();
        let mut d1 = DMatrix::zeros(1, n);
        let mut d2 = DMatrix::zeros(1, n);
        let mut loss = 0.0;
        for j in 0..n {
            let q = if use_first[j] {
                c1.output()[(0, j)]
            } else {
                c2.output()[(0, j)]
            };
            loss += (alpha * sample.log_probs[j] - q) / n as f64;
            if use_first[j] {
                d1[(0, j)] = 1.0;
            } else {
                d2[(0, j)] = 1.0;
            }
        }
        // dQ/d(critic action input), critic parameters are held fixed
        let (_, g1) = self.q1.backward(&c1, &d1);
        let (_, g2) = self.q2.backward(&c2, &d2);
        let mut d_out = DMatrix::zeros(2, n);
        for j in 0..n {
            let raw_log_std = out[(1, j)];
            let log_std = clamp_log_std(raw_log_std);
            let std = log_std.exp();
            let u = sample.pre_tanh[j];
            let t = u.tanh();
            let dq_dx = g1[(h, j)] + g2[(h, j)];
            let dq_du = dq_dx * (1.0 - t * t);
            // d log pi / du = 2 tanh(u); d log pi / d log_std (direct) = -1
            let dl_du = alpha * 2.0 * t - dq_du;
            let dmean = dl_du;
            let dlog_std = dl_du * std * noise[j] - alpha;
            d_out[(0, j)] = dmean / n as f64;
            d_out[(1, j)] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_log_std) {
                dlog_std / n as f64
            } else {
                0.0
            };
        }
        let (policy, _) = self.policy.net.backward(&cache, &d_out);
        PolicyGradients {
            loss,
            mean_log_prob: sample.log_probs.iter().sum::<f64>() / n as f64,
            policy,
        }
    }

    /// One critic step, one policy step, then target smoothing.
    pub fn update(&mut self, batch: &Batch, rng: &mut StreamRng) -> Result<UpdateStats> {
        let n = batch.len();
        let next_noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let targets = self.critic_targets(batch, &next_noise);
        let cg = self.critic_gradients(batch, &targets);
        if !(cg.loss.is_finite() && cg.q1.is_finite() && cg.q2.is_finite()) {
            return Err(Error::Numerical(format!("non-finite critic loss {}", cg.loss)));
        }
        self.opt_q1.step(&mut self.q1, &cg.q1);
        self.opt_q2.step(&mut self.q2, &cg.q2);
        let pg = self.policy_gradients(&batch.states, &noise);
        if !(pg.loss.is_finite() && pg.policy.is_finite()) {
            return Err(Error::Numerical(format!("non-finite policy loss {}", pg.loss)));
        }
        self.opt_policy.step(&mut self.policy.net, &pg.policy);
        let tau = self.config.tau_target;
        self.q1_target.soft_update(&self.q1, tau);
        self.q2_target.soft_update(&self.q2, tau);
        Ok(UpdateStats {
            critic_loss: cg.loss,
            policy_loss: pg.loss,
            mean_log_prob: pg.mean_log_prob,
        })
    }
}
