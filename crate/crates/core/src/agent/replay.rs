use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Knowledge vectors behind each refreshed state row, so the actor update
/// can re-pool them with current attention parameters.
pub type PoolInputs = Vec<Option<Vec<Vec<f64>>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub pool_inputs: Option<PoolInputs>,
}

/// FIFO ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `k` distinct transitions drawn uniformly.
    pub fn sample(&self, k: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        if k == 0 {
            return Err(Error::Empty("replay sample"));
        }
        if k > self.items.len() {
            return Err(Error::invalid(format!(
                "replay sample of {k} exceeds buffer fill {}",
                self.items.len()
            )));
        }
        Ok(rng
            .sample_indices(self.items.len(), k)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: f64) -> Transition {
        Transition {
            state: vec![r],
            action: vec![1.0],
            reward: r,
            next_state: vec![r],
            pool_inputs: None,
        }
    }

    #[test]
    fn fifo_eviction_and_capacity() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(t(i as f64));
            assert!(b.len() <= 3);
        }
        let rewards: Vec<f64> = b.iter().map(|x| x.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sample_bounds() {
        let mut b = ReplayBuffer::new(10);
        b.push(t(0.0));
        b.push(t(1.0));
        let mut rng = Rng::new(0);
        assert!(b.sample(3, &mut rng).is_err());
        assert!(b.sample(0, &mut rng).is_err());
        let s = b.sample(2, &mut rng).unwrap();
        assert_ne!(s[0].reward, s[1].reward);
    }
}
