use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Last step of an episode; no bootstrapping past it.
    pub done: bool,
}

/// Fixed-capacity FIFO experience memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { entries: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// `n` distinct entries chosen uniformly. Returns `None` if fewer than
    /// `n` are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if n > self.entries.len() {
            return None;
        }
        Some(index::sample(rng, self.entries.len(), n).into_iter().map(|i| &self.entries[i]).collect())
    }
}
