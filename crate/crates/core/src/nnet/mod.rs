//! Dense networks with hand-written backpropagation.
//!
//! Batches are row-major: one sample per row. Layers cover what the learner
//! needs (dense, CReLU, batch normalization, dropout, tanh) and nothing more.

mod adam;
mod checkpoint;
mod gradcheck;
mod network;

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, RngState};
pub use gradcheck::{finite_difference_check, relative_error, GradCheckReport, REL_FLOOR};
pub use network::{
    add_l2_grad, crelu, l2_penalty, l2_penalty_grad, Gradients, Init, Layer, LayerSpec, Mode, Network, Trace,
    BN_EPS, BN_MOMENTUM,
};
