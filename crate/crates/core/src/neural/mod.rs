//! Neural training: a small MLP, Adam, full-space and chart-constrained
//! training loops, and the linearized model.

pub mod adam;
pub mod data;
pub mod linearize;
pub mod mlp;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use data::{make_blobs, parse_idx, Dataset};
pub use linearize::{LinearizedModel, DEFAULT_JACOBIAN_LIMIT};
pub use mlp::{evaluate, init_params, logits, loss_and_grad, FlatParams, MlpArchitecture, MlpObjective};
pub use train::{
    burn_in_offset, train_chart, train_full, train_in_subspace, Chart, FullChart, RunLabel, StepRecord,
    TrainOutput, TrainRecord,
};

/// Loss (and accuracy when the objective is a classifier) over all examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: Option<f64>,
}

/// A differentiable training objective over flat parameters.
pub trait Objective {
    fn num_params(&self) -> usize;

    /// Examples available for minibatching. Full-batch objectives report 1.
    fn num_examples(&self) -> usize;

    /// Mean loss over `batch`; overwrites `grad` with its gradient.
    fn loss_and_grad(&self, w: &[f64], batch: &[usize], grad: &mut [f64]) -> f64;

    fn evaluate(&self, w: &[f64]) -> Evaluation;
}
