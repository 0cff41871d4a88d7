//! Minibatch Adam over an arbitrary chart `x ↦ w(x)` of parameter space.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::{Evaluation, Objective};
use crate::error::{Error, Result};
use crate::landscapes::SubspaceBasis;
use crate::sweep::{RunOutcome, SubspaceKind};

/// A smooth map from trainable coordinates to full parameters.
pub trait Chart {
    /// Number of trainable coordinates.
    fn dim(&self) -> usize;

    fn ambient_dim(&self) -> usize;

    fn point_into(&self, x: &[f64], w: &mut [f64]);

    /// Gradient with respect to `x` given the gradient with respect to `w`.
    fn pullback_into(&self, grad_w: &[f64], grad_x: &mut [f64]);
}

/// The identity chart.
#[derive(Debug, Clone, Copy)]
pub struct FullChart(pub usize);

impl Chart for FullChart {
    fn dim(&self) -> usize {
        self.0
    }

    fn ambient_dim(&self) -> usize {
        self.0
    }

    fn point_into(&self, x: &[f64], w: &mut [f64]) {
        w.copy_from_slice(x);
    }

    fn pullback_into(&self, grad_w: &[f64], grad_x: &mut [f64]) {
        grad_x.copy_from_slice(grad_w);
    }
}

impl Chart for SubspaceBasis {
    fn dim(&self) -> usize {
        SubspaceBasis::dim(self)
    }

    fn ambient_dim(&self) -> usize {
        SubspaceBasis::ambient_dim(self)
    }

    fn point_into(&self, x: &[f64], w: &mut [f64]) {
        SubspaceBasis::point_into(self, x, w)
    }

    fn pullback_into(&self, grad_w: &[f64], grad_x: &mut [f64]) {
        SubspaceBasis::pullback_into(self, grad_w, grad_x)
    }
}

/// Identifies a run inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLabel {
    pub kind: SubspaceKind,
    pub d: usize,
    pub t: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub accuracy: Option<f64>,
}

/// Evaluations of one training run and the best values among them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub label: RunLabel,
    pub steps: Vec<StepRecord>,
    pub best_loss: f64,
    pub best_accuracy: Option<f64>,
}

impl TrainRecord {
    fn new(label: RunLabel) -> Self {
        Self { label, steps: Vec::new(), best_loss: f64::INFINITY, best_accuracy: None }
    }

    fn push(&mut self, step: usize, e: Evaluation) {
        self.steps.push(StepRecord { step, loss: e.loss, accuracy: e.accuracy });
        self.best_loss = self.best_loss.min(e.loss);
        if let Some(a) = e.accuracy {
            self.best_accuracy = Some(self.best_accuracy.map_or(a, |b| b.max(a)));
        }
    }

    pub fn to_outcome(&self, run: usize) -> RunOutcome {
        RunOutcome {
            kind: self.label.kind,
            t: self.label.t,
            d: self.label.d,
            run,
            seed: self.label.seed,
            best_loss: self.best_loss,
            best_accuracy: self.best_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub record: TrainRecord,
    /// Full parameters at step 0, every `snapshot_every` steps, and the end.
    pub trajectory: Vec<Vec<f64>>,
    pub final_params: Vec<f64>,
}

struct Batches {
    order: Vec<usize>,
    at: usize,
    size: usize,
}

impl Batches {
    fn new(n: usize, size: usize) -> Self {
        Self { order: (0..n).collect(), at: n, size }
    }

    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[usize] {
        if self.at >= self.order.len() {
            self.order.shuffle(rng);
            self.at = 0;
        }
        let start = self.at;
        self.at = (start + self.size).min(self.order.len());
        &self.order[start..self.at]
    }
}

/// Runs `steps` Adam updates on the chart coordinates starting at `x0`.
/// Batches come from a fresh shuffle of the examples at every epoch.
/// `snapshot_every = 0` disables the trajectory.
#[allow(clippy::too_many_arguments)]
pub fn train_chart<O, C, R>(
    objective: &O,
    chart: &C,
    x0: Vec<f64>,
    config: &AdamConfig,
    steps: usize,
    snapshot_every: usize,
    label: RunLabel,
    rng: &mut R,
) -> Result<TrainOutput>
where
    O: Objective + ?Sized,
    C: Chart + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let dim = objective.num_params();
    if chart.ambient_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: chart.ambient_dim() });
    }
    if x0.len() != chart.dim() {
        return Err(Error::DimensionMismatch { expected: chart.dim(), found: x0.len() });
    }
    let steps = if chart.dim() == 0 { 0 } else { steps };
    let mut x = x0;
    let mut w = vec![0.0; dim];
    let mut grad_w = vec![0.0; dim];
    let mut grad_x = vec![0.0; x.len()];
    let mut adam = AdamState::new(x.len());
    let mut batches = Batches::new(objective.num_examples(), config.batch_size);
    let mut record = TrainRecord::new(label);
    let mut trajectory = Vec::new();

    chart.point_into(&x, &mut w);
    for step in 0..=steps {
        if step > 0 {
            let batch = batches.next(rng);
            objective.loss_and_grad(&w, batch, &mut grad_w);
            chart.pullback_into(&grad_w, &mut grad_x);
            adam_step(&mut adam, &mut x, &grad_x, config);
            chart.point_into(&x, &mut w);
        }
        if step % config.eval_every == 0 || step == steps {
            record.push(step, objective.evaluate(&w));
        }
        if snapshot_every > 0 && (step % snapshot_every == 0 || step == steps) {
            trajectory.push(w.clone());
        }
    }
    Ok(TrainOutput { record, trajectory, final_params: w })
}

/// Full-space training for `config.epochs` epochs.
pub fn train_full<O, R>(
    objective: &O,
    params0: &[f64],
    config: &AdamConfig,
    snapshot_every: usize,
    seed: u64,
    rng: &mut R,
) -> Result<TrainOutput>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let steps = config.total_steps(objective.num_examples());
    let label = RunLabel { kind: SubspaceKind::Full, d: params0.len(), t: 0, seed };
    train_chart(
        objective,
        &FullChart(params0.len()),
        params0.to_vec(),
        config,
        steps,
        snapshot_every,
        label,
        rng,
    )
}

/// Trains `θ` from zero in `w = Aθ + offset`.
pub fn train_in_subspace<O, R>(
    objective: &O,
    basis: &SubspaceBasis,
    config: &AdamConfig,
    label: RunLabel,
    rng: &mut R,
) -> Result<TrainRecord>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let steps = config.total_steps(objective.num_examples());
    let x0 = vec![0.0; basis.dim()];
    Ok(train_chart(objective, basis, x0, config, steps, 0, label, rng)?.record)
}

/// Parameters after `t` full-space Adam steps from `params0`.
pub fn burn_in_offset<O, R>(
    objective: &O,
    params0: &[f64],
    t: usize,
    config: &AdamConfig,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    if t == 0 {
        return Ok(params0.to_vec());
    }
    let label = RunLabel { kind: SubspaceKind::Full, d: params0.len(), t, seed: 0 };
    let cfg = AdamConfig { eval_every: t, ..*config };
    let out = train_chart(objective, &FullChart(params0.len()), params0.to_vec(), &cfg, t, 0, label, rng)?;
    Ok(out.final_params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{make_bimodal_spectrum, min_loss_in_subspace_exact, QuadraticWell};
    use crate::neural::{init_params, make_blobs, MlpArchitecture, MlpObjective};
    use crate::numerics::RngStream;

    fn label(kind: SubspaceKind, d: usize) -> RunLabel {
        RunLabel { kind, d, t: 0, seed: 0 }
    }

    #[test]
    fn two_blob_full_training_separates() {
        let data = make_blobs(2, 200, 4, 6.0, &mut RngStream::new(1, 0).rng()).unwrap();
        let arch = MlpArchitecture::new(4, &[16], 2).unwrap();
        let obj = MlpObjective::new(&arch, &data).unwrap();
        let w0 = init_params(&arch, &mut RngStream::new(2, 0).rng());
        let cfg = AdamConfig { batch_size: 32, ..AdamConfig::default() };
        let out = train_full(&obj, &w0, &cfg, 1, 0, &mut RngStream::new(3, 0).rng()).unwrap();
        let steps = cfg.total_steps(data.len());
        assert_eq!(out.trajectory.len(), steps + 1);
        assert!(out.record.best_loss <= out.record.steps[0].loss);
        assert!(out.record.best_accuracy.unwrap() >= 0.95);
        assert_eq!(out.trajectory[0], w0);
        assert_eq!(out.trajectory[steps], out.final_params);
    }

    #[test]
    fn subspace_start_matches_offset_and_zero_dim_is_static() {
        let data = make_blobs(3, 30, 5, 3.0, &mut RngStream::new(1, 0).rng()).unwrap();
        let arch = MlpArchitecture::new(5, &[8], 3).unwrap();
        let obj = MlpObjective::new(&arch, &data).unwrap();
        let w0 = init_params(&arch, &mut RngStream::new(2, 0).rng());
        let at_offset = obj.evaluate(&w0);
        let cfg = AdamConfig { batch_size: 16, epochs: 2, ..AdamConfig::default() };
        let mut rng = RngStream::new(3, 0).rng();
        let basis = SubspaceBasis::random(w0.clone(), 6, &mut rng).unwrap();
        let rec = train_in_subspace(&obj, &basis, &cfg, label(SubspaceKind::Random, 6), &mut rng).unwrap();
        assert_eq!(rec.steps[0].loss, at_offset.loss);
        let empty = SubspaceBasis::random(w0.clone(), 0, &mut rng).unwrap();
        let rec = train_in_subspace(&obj, &empty, &cfg, label(SubspaceKind::Random, 0), &mut rng).unwrap();
        assert_eq!(rec.steps.len(), 1);
        assert_eq!(rec.best_loss, at_offset.loss);
        assert_eq!(rec.best_accuracy, at_offset.accuracy);
    }

    #[test]
    fn burn_in_zero_is_identity_and_descends() {
        let arch = MlpArchitecture::new(4, &[8], 2).unwrap();
        let cfg = AdamConfig { batch_size: 32, ..AdamConfig::default() };
        let mut improved = 0.0;
        for s in 0..10 {
            let data = make_blobs(2, 100, 4, 4.0, &mut RngStream::new(s, 0).rng()).unwrap();
            let obj = MlpObjective::new(&arch, &data).unwrap();
            let w0 = init_params(&arch, &mut RngStream::new(s, 1).rng());
            let same = burn_in_offset(&obj, &w0, 0, &cfg, &mut RngStream::new(s, 2).rng()).unwrap();
            assert_eq!(same, w0);
            let w4 = burn_in_offset(&obj, &w0, 4, &cfg, &mut RngStream::new(s, 2).rng()).unwrap();
            improved += obj.evaluate(&w0).loss - obj.evaluate(&w4).loss;
        }
        assert!(improved > 0.0);
    }

    #[test]
    fn deterministic_records() {
        let data = make_blobs(3, 20, 5, 3.0, &mut RngStream::new(1, 0).rng()).unwrap();
        let arch = MlpArchitecture::new(5, &[8], 3).unwrap();
        let obj = MlpObjective::new(&arch, &data).unwrap();
        let w0 = init_params(&arch, &mut RngStream::new(2, 0).rng());
        let cfg = AdamConfig { batch_size: 7, epochs: 3, ..AdamConfig::default() };
        let a = train_full(&obj, &w0, &cfg, 0, 0, &mut RngStream::new(3, 0).rng()).unwrap();
        let b = train_full(&obj, &w0, &cfg, 0, 0, &mut RngStream::new(3, 0).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adam_approaches_exact_quadratic_minimum() {
        let well = QuadraticWell::new(make_bimodal_spectrum(30, 15, 0.5, 5.0).unwrap());
        let mut rng = RngStream::new(9, 0).rng();
        let offset = crate::landscapes::sample_offset_at_distance(30, 1.0, &mut rng).unwrap();
        let basis = SubspaceBasis::random(offset, 5, &mut rng).unwrap();
        let exact = min_loss_in_subspace_exact(&well, &basis).unwrap().loss;
        let cfg = AdamConfig { epochs: 2000, ..AdamConfig::default() };
        let rec = train_in_subspace(&well, &basis, &cfg, label(SubspaceKind::Random, 5), &mut rng).unwrap();
        assert!(rec.best_loss - exact <= 1e-3 * (1.0 + exact), "{} vs {exact}", rec.best_loss);
    }
}
