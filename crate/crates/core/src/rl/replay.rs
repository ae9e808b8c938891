use nalgebra::DMatrix;
use rand::Rng;

use super::history::make_history_state;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy)]
struct Transition {
    /// Global index of the observation that ends the state.
    obs: u64,
    /// Global index of the episode's first observation.
    episode_start: u64,
    action: f64,
    reward: f64,
    done: bool,
}

/// Sampled minibatch; states are columns.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub rewards: Vec<f64>,
    pub next_states: DMatrix<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Ring buffer of transitions over history states.
///
/// Observations are stored once in a second ring and the history states are
/// rebuilt on sampling, so memory grows with the number of steps rather than
/// steps times history length.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    history_len: usize,
    capacity: usize,
    transitions: Vec<Transition>,
    cursor: usize,
    obs: Vec<f64>,
    obs_total: u64,
    episode_start: Option<u64>,
    scratch: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, history_len: usize) -> Self {
        assert!(capacity >= 1 && history_len >= 1);
        Self {
            history_len,
            capacity,
            transitions: Vec::new(),
            cursor: 0,
            // every transition adds one observation and every episode one extra
            obs: vec![0.0; 2 * capacity + history_len + 2],
            obs_total: 0,
            episode_start: None,
            scratch: vec![0.0; history_len],
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    fn push_obs(&mut self, y: f64) -> u64 {
        let n = self.obs.len() as u64;
        self.obs[(self.obs_total % n) as usize] = y;
        self.obs_total += 1;
        self.obs_total - 1
    }

    /// Starts an episode with its first observation.
    pub fn begin_episode(&mut self, y0: f64) {
        let idx = self.push_obs(y0);
        self.episode_start = Some(idx);
    }

    /// Records `(s, a, r, s', done)` where `s` ends at the previous observation
    /// and `s'` ends at `next_y`.
    pub fn push(&mut self, action: f64, reward: f64, next_y: f64, done: bool) {
        let start = self.episode_start.expect("begin_episode must be called first");
        let t = Transition {
            obs: self.obs_total - 1,
            episode_start: start,
            action,
            reward,
            done,
        };
        self.push_obs(next_y);
        if self.transitions.len() < self.capacity {
            self.transitions.push(t);
        } else {
            self.transitions[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Uniformly sampled transition indices.
    pub fn sample_indices(&self, batch_size: usize, rng: &mut StreamRng) -> Vec<usize> {
        assert!(!self.is_empty(), "sampling from an empty buffer");
        (0..batch_size)
            .map(|_| rng.random_range(0..self.transitions.len()))
            .collect()
    }

    fn fill_state(&mut self, end: u64, start: u64, out: &mut [f64]) {
        let n = self.obs.len() as u64;
        let lo = start.max((end + 1).saturating_sub(self.history_len as u64));
        // when lo > start the window is full and no fill is needed
        let len = (end - lo + 1) as usize;
        let scratch = &mut self.scratch[..len];
        for (k, s) in scratch.iter_mut().enumerate() {
            *s = self.obs[((lo + k as u64) % n) as usize];
        }
        make_history_state(scratch, 0, len - 1, self.history_len, out);
    }

    pub fn sample(&mut self, batch_size: usize, rng: &mut StreamRng) -> Batch {
        let idx = self.sample_indices(batch_size, rng);
        let h = self.history_len;
        let mut states = DMatrix::zeros(h, batch_size);
        let mut next_states = DMatrix::zeros(h, batch_size);
        let mut actions = DMatrix::zeros(1, batch_size);
        let mut rewards = Vec::with_capacity(batch_size);
        let mut dones = Vec::with_capacity(batch_size);
        let mut col = vec![0.0; h];
        for (j, &i) in idx.iter().enumerate() {
            let t = self.transitions[i];
            self.fill_state(t.obs, t.episode_start, &mut col);
            states.column_mut(j).copy_from_slice(&col);
            self.fill_state(t.obs + 1, t.episode_start, &mut col);
            next_states.column_mut(j).copy_from_slice(&col);
            actions[(0, j)] = t.action;
            rewards.push(t.reward);
            dones.push(t.done);
        }
        Batch {
            states,
            actions,
            rewards,
            next_states,
            dones,
        }
    }
}
