//! Multi-task actor-critic with differential policy gradients.
//!
//! One compound actor drives every joint. The critic sees the state, the
//! action restricted to one task's slots and a task one-hot, and has one
//! output head per task. Slots shared by several tasks are updated either
//! with the sum of the per-task gradients or with their average.

mod agent;
mod noise;
mod partition;
mod replay;
mod train;

pub use agent::{soft_update, ActorCritic, CriticStep, NetworkConfig, PolicyGradient, TargetUpdate};
pub use noise::NoiseSchedule;
pub use partition::ActionPartition;
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{rollout, train, EpisodeRecord, Rollout, TrainConfig, Trainer};
