use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::RobotModel;

/// How compound-action slots split into per-task sub-actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPartition {
    dim: usize,
    shared: Vec<usize>,
    exclusive: Vec<Vec<usize>>,
    tasks: Vec<Vec<usize>>,
}

impl ActionPartition {
    pub fn new(dim: usize, shared: Vec<usize>, exclusive: Vec<Vec<usize>>) -> Result<Self> {
        if exclusive.is_empty() {
            return Err(Error::Model("partition needs at least one task".into()));
        }
        let mut seen = vec![false; dim];
        for &s in shared.iter().chain(exclusive.iter().flatten()) {
            if s >= dim {
                return Err(Error::Model(format!("action slot {s} out of range for dimension {dim}")));
            }
            if seen[s] {
                return Err(Error::Model(format!("action slot {s} assigned twice")));
            }
            seen[s] = true;
        }
        if let Some(missing) = seen.iter().position(|&b| !b) {
            return Err(Error::Model(format!("action slot {missing} belongs to no task")));
        }
        let mut shared = shared;
        shared.sort_unstable();
        let exclusive: Vec<Vec<usize>> = exclusive
            .into_iter()
            .map(|mut e| {
                e.sort_unstable();
                e
            })
            .collect();
        let tasks = exclusive
            .iter()
            .map(|e| {
                let mut t: Vec<usize> = shared.iter().chain(e).copied().collect();
                t.sort_unstable();
                t
            })
            .collect();
        Ok(Self {
            dim,
            shared,
            exclusive,
            tasks,
        })
    }

    /// One task per chain; action slot `j` drives joint `j`.
    pub fn from_model(model: &RobotModel) -> Result<Self> {
        let exclusive = (0..model.num_chains()).map(|i| model.exclusive_joints(i).to_vec()).collect();
        Self::new(model.dof(), model.shared_joints().to_vec(), exclusive)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn shared(&self) -> &[usize] {
        &self.shared
    }

    pub fn exclusive(&self, task: usize) -> &[usize] {
        &self.exclusive[task]
    }

    /// Slots of sub-action `a_i`: shared plus task-exclusive, ascending.
    pub fn task(&self, task: usize) -> &[usize] {
        &self.tasks[task]
    }

    pub fn check_task(&self, task: usize) -> Result<()> {
        if task < self.tasks.len() {
            Ok(())
        } else {
            Err(Error::TaskIndex {
                index: task,
                tasks: self.tasks.len(),
            })
        }
    }

    pub fn gather(&self, a: &[f64], slots: &[usize]) -> Vec<f64> {
        slots.iter().map(|&j| a[j]).collect()
    }

    /// Inverse of gathering the shared view and every exclusive view.
    pub fn assemble(&self, shared: &[f64], exclusive: &[Vec<f64>]) -> Result<Vec<f64>> {
        if shared.len() != self.shared.len() {
            return Err(Error::Dimension {
                context: "shared action view",
                expected: self.shared.len(),
                actual: shared.len(),
            });
        }
        if exclusive.len() != self.exclusive.len() {
            return Err(Error::Dimension {
                context: "exclusive action views",
                expected: self.exclusive.len(),
                actual: exclusive.len(),
            });
        }
        let mut a = vec![0.0; self.dim];
        for (&j, &v) in self.shared.iter().zip(shared) {
            a[j] = v;
        }
        for (slots, vals) in self.exclusive.iter().zip(exclusive) {
            if slots.len() != vals.len() {
                return Err(Error::Dimension {
                    context: "exclusive action view",
                    expected: slots.len(),
                    actual: vals.len(),
                });
            }
            for (&j, &v) in slots.iter().zip(vals) {
                a[j] = v;
            }
        }
        Ok(a)
    }
}
