use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next_state: Vec<f64>,
    /// One reward per task.
    pub rewards: Vec<f64>,
    /// The episode ended in a terminal state. Running out of steps is not terminal.
    pub done: bool,
}

/// A sampled minibatch, one transition per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub next_states: Array2<f64>,
    pub rewards: Array2<f64>,
    pub done: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_transitions(items: &[&Transition]) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyReplay {
            requested: 0,
            available: 0,
        })?;
        let n = items.len();
        let (sd, ad, k) = (first.state.len(), first.action.len(), first.rewards.len());
        let mut b = Batch {
            states: Array2::zeros((n, sd)),
            actions: Array2::zeros((n, ad)),
            next_states: Array2::zeros((n, sd)),
            rewards: Array2::zeros((n, k)),
            done: Array1::zeros(n),
        };
        for (row, t) in items.iter().enumerate() {
            if t.state.len() != sd || t.next_state.len() != sd || t.action.len() != ad || t.rewards.len() != k {
                return Err(Error::Dimension {
                    context: "transition in batch",
                    expected: sd,
                    actual: t.state.len(),
                });
            }
            b.states.row_mut(row).assign(&Array1::from(t.state.clone()));
            b.actions.row_mut(row).assign(&Array1::from(t.action.clone()));
            b.next_states.row_mut(row).assign(&Array1::from(t.next_state.clone()));
            b.rewards.row_mut(row).assign(&Array1::from(t.rewards.clone()));
            b.done[row] = if t.done { 1.0 } else { 0.0 };
        }
        Ok(b)
    }
}

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity: capacity.max(1),
            next: 0,
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
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// Indices of `n` distinct stored transitions, uniformly at random.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n == 0 || n > self.items.len() {
            return Err(Error::EmptyReplay {
                requested: n,
                available: self.items.len(),
            });
        }
        Ok(rand::seq::index::sample(rng, self.items.len(), n).into_vec())
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        let items: Vec<&Transition> = idx.iter().map(|&i| &self.items[i]).collect();
        Batch::from_transitions(&items)
    }
}
