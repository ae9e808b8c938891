use std::collections::VecDeque;

/// Sliding window of the last `H` observations.
#[derive(Debug, Clone)]
pub struct History {
    len: usize,
    first: Option<f64>,
    window: VecDeque<f64>,
}

impl History {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "history length must be at least 1");
        Self {
            len,
            first: None,
            window: VecDeque::with_capacity(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// No observation seen since the last reset.
    pub fn is_empty(&self) -> bool {
        self.first.is_none()
    }

    pub fn reset(&mut self) {
        self.first = None;
        self.window.clear();
    }

    pub fn push(&mut self, y: f64) {
        self.first.get_or_insert(y);
        if self.window.len() == self.len {
            self.window.pop_front();
        }
        self.window.push_back(y);
    }

    /// Oldest first; slots before the first observation repeat it.
    pub fn state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len);
        self.write_state(&mut out);
        out
    }

    pub fn write_state(&self, out: &mut Vec<f64>) {
        let first = self.first.expect("history state requested before any observation");
        out.clear();
        out.extend(std::iter::repeat_n(first, self.len - self.window.len()));
        out.extend(self.window.iter());
    }
}

/// History state ending at `obs[end]` for an episode whose observations start
/// at `obs[start]`.
pub fn make_history_state(obs: &[f64], start: usize, end: usize, len: usize, out: &mut [f64]) {
    debug_assert!(start <= end && out.len() == len);
    for (k, slot) in out.iter_mut().enumerate() {
        let back = len - 1 - k;
        *slot = if end - start >= back {
            obs[end - back]
        } else {
            obs[start]
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_rule_and_window() {
        let mut h = History::new(3);
        h.push(7.0);
        assert_eq!(h.state(), vec![7.0, 7.0, 7.0]);
        for y in [2.0, 3.0, 4.0] {
            h.push(y);
        }
        assert_eq!(h.state(), vec![2.0, 3.0, 4.0]);
        h.reset();
        assert!(h.is_empty());
        h.push(1.0);
        h.push(2.0);
        assert_eq!(h.state(), vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn constant_stream() {
        let mut h = History::new(5);
        for _ in 0..9 {
            h.push(0.25);
        }
        assert_eq!(h.state(), vec![0.25; 5]);
    }

    #[test]
    fn slice_form_agrees() {
        let obs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mut out = [0.0; 3];
        let mut h = History::new(3);
        for end in 0..obs.len() {
            h.push(obs[end]);
            make_history_state(&obs, 0, end, 3, &mut out);
            assert_eq!(out.to_vec(), h.state());
        }
        make_history_state(&obs, 2, 3, 3, &mut out);
        assert_eq!(out, [3.0, 3.0, 4.0]);
    }
}
