//! Fully connected ReLU network with a softmax cross-entropy head.
//!
//! Parameters live in one flat vector. Each layer contributes its weights
//! (`out × in`, row-major) followed by its biases, layers in order.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::data::Dataset;
use super::{Evaluation, Objective};
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot};

/// All weights and biases, flattened in layer order.
pub type FlatParams = Vec<f64>;

/// Location of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlice {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub biases: usize,
}

impl LayerSlice {
    pub fn end(&self) -> usize {
        self.biases + self.fan_out
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.weights..self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpArchitecture {
    widths: Vec<usize>,
    layers: Vec<LayerSlice>,
}

impl MlpArchitecture {
    /// `input → hidden[0] → … → classes`, ReLU between layers.
    pub fn new(input: usize, hidden: &[usize], classes: usize) -> Result<Self> {
        if hidden.is_empty() {
            return Err(Error::invalid("hidden", "need at least one hidden layer"));
        }
        if input == 0 || classes < 2 || hidden.contains(&0) {
            return Err(Error::invalid("widths", "widths must be positive and classes >= 2"));
        }
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(classes);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        let mut at = 0;
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            layers.push(LayerSlice { fan_in, fan_out, weights: at, biases: at + fan_in * fan_out });
            at += fan_in * fan_out + fan_out;
        }
        Ok(Self { widths, layers })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn layers(&self) -> &[LayerSlice] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layers.last().unwrap().end()
    }

    /// Index of the layer owning flat parameter `index`.
    pub fn layer_of(&self, index: usize) -> Option<usize> {
        self.layers.iter().position(|l| l.range().contains(&index))
    }

    fn check(&self, params: &[f64], data: &Dataset) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::DimensionMismatch { expected: self.num_params(), found: params.len() });
        }
        if data.input_dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: data.input_dim() });
        }
        if data.num_classes() != self.num_classes() {
            return Err(Error::DimensionMismatch { expected: self.num_classes(), found: data.num_classes() });
        }
        Ok(())
    }

    /// Activations of every layer for a batch: index 0 holds the inputs, the
    /// last entry holds the logits. Each is `batch × width`, row-major.
    pub(crate) fn forward(&self, params: &[f64], data: &Dataset, batch: &[usize]) -> Vec<Vec<f64>> {
        let b = batch.len();
        let mut acts = Vec::with_capacity(self.widths.len());
        let mut x = Vec::with_capacity(b * self.input_dim());
        for &i in batch {
            x.extend_from_slice(data.input(i));
        }
        acts.push(x);
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let prev = &acts[li];
            let w = &params[l.weights..l.biases];
            let bias = &params[l.biases..l.end()];
            let mut z = vec![0.0; b * l.fan_out];
            for r in 0..b {
                let a = &prev[r * l.fan_in..(r + 1) * l.fan_in];
                let zr = &mut z[r * l.fan_out..(r + 1) * l.fan_out];
                for (o, zo) in zr.iter_mut().enumerate() {
                    let v = dot(&w[o * l.fan_in..(o + 1) * l.fan_in], a) + bias[o];
                    *zo = if li < last { v.max(0.0) } else { v };
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Accumulates `Σ_r δ_rᵀ ∂logits_r/∂w` into `grad`, where `delta` holds
    /// one row of output sensitivities per batch row. `delta` is consumed.
    pub(crate) fn backward(&self, params: &[f64], acts: &[Vec<f64>], mut delta: Vec<f64>, grad: &mut [f64]) {
        let b = delta.len() / self.num_classes();
        for li in (0..self.layers.len()).rev() {
            let l = self.layers[li];
            let a = &acts[li];
            let w = &params[l.weights..l.biases];
            let (gw, gb) = grad[l.weights..l.end()].split_at_mut(l.fan_in * l.fan_out);
            for r in 0..b {
                let dr = &delta[r * l.fan_out..(r + 1) * l.fan_out];
                let ar = &a[r * l.fan_in..(r + 1) * l.fan_in];
                for (o, &d) in dr.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, ar, &mut gw[o * l.fan_in..(o + 1) * l.fan_in]);
                        gb[o] += d;
                    }
                }
            }
            if li == 0 {
                break;
            }
            let mut prev = vec![0.0; b * l.fan_in];
            for r in 0..b {
                let dr = &delta[r * l.fan_out..(r + 1) * l.fan_out];
                let pr = &mut prev[r * l.fan_in..(r + 1) * l.fan_in];
                for (o, &d) in dr.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &w[o * l.fan_in..(o + 1) * l.fan_in], pr);
                    }
                }
                // ReLU mask from the stored post-activations
                for (p, &ar) in pr.iter_mut().zip(&a[r * l.fan_in..(r + 1) * l.fan_in]) {
                    if ar <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
    }
}

/// Softmax cross-entropy of one logit row; writes `softmax − onehot` into
/// `delta` when given. Returns `(loss, argmax == label)`.
pub(crate) fn softmax_xent(logits: &[f64], label: usize, delta: Option<&mut [f64]>) -> (f64, bool) {
    let mut top = 0;
    for (j, &z) in logits.iter().enumerate() {
        if z > logits[top] {
            top = j;
        }
    }
    let m = logits[top];
    let sum: f64 = logits.iter().map(|&z| (z - m).exp()).sum();
    let lse = m + sum.ln();
    if let Some(delta) = delta {
        for (j, (d, &z)) in delta.iter_mut().zip(logits).enumerate() {
            *d = (z - lse).exp() - if j == label { 1.0 } else { 0.0 };
        }
    }
    (lse - logits[label], top == label)
}

/// Weights `N(0, 1/fan_in)`, biases zero.
pub fn init_params<R: Rng + ?Sized>(arch: &MlpArchitecture, rng: &mut R) -> FlatParams {
    let mut w = vec![0.0; arch.num_params()];
    for l in arch.layers() {
        let std = 1.0 / (l.fan_in as f64).sqrt();
        for x in &mut w[l.weights..l.biases] {
            let g: f64 = StandardNormal.sample(rng);
            *x = std * g;
        }
    }
    w
}

/// Per-example logits, `N × C` row-major.
pub fn logits(arch: &MlpArchitecture, params: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    arch.check(params, data)?;
    let all: Vec<usize> = (0..data.len()).collect();
    Ok(arch.forward(params, data, &all).pop().unwrap())
}

/// Mean cross-entropy over `data` and its gradient.
pub fn loss_and_grad(arch: &MlpArchitecture, params: &[f64], data: &Dataset) -> Result<(f64, Vec<f64>)> {
    arch.check(params, data)?;
    let all: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let loss = batch_loss_and_grad(arch, params, data, &all, &mut grad);
    Ok((loss, grad))
}

pub(crate) fn batch_loss_and_grad(
    arch: &MlpArchitecture,
    params: &[f64],
    data: &Dataset,
    batch: &[usize],
    grad: &mut [f64],
) -> f64 {
    grad.fill(0.0);
    let acts = arch.forward(params, data, batch);
    let c = arch.num_classes();
    let out = acts.last().unwrap();
    let scale = 1.0 / batch.len() as f64;
    let mut delta = vec![0.0; out.len()];
    let mut loss = 0.0;
    for (r, &i) in batch.iter().enumerate() {
        let d = &mut delta[r * c..(r + 1) * c];
        loss += softmax_xent(&out[r * c..(r + 1) * c], data.labels()[i], Some(d)).0;
        d.iter_mut().for_each(|x| *x *= scale);
    }
    arch.backward(params, &acts, delta, grad);
    loss * scale
}

/// Mean loss and accuracy over the whole dataset.
pub fn evaluate(arch: &MlpArchitecture, params: &[f64], data: &Dataset) -> Result<Evaluation> {
    let z = logits(arch, params, data)?;
    Ok(evaluate_logits(&z, data))
}

pub(crate) fn evaluate_logits(z: &[f64], data: &Dataset) -> Evaluation {
    let c = data.num_classes();
    let (mut loss, mut hits) = (0.0, 0usize);
    for (i, &label) in data.labels().iter().enumerate() {
        let (l, hit) = softmax_xent(&z[i * c..(i + 1) * c], label, None);
        loss += l;
        hits += usize::from(hit);
    }
    let n = data.len() as f64;
    Evaluation { loss: loss / n, accuracy: Some(hits as f64 / n) }
}

/// An MLP bound to its training set.
#[derive(Debug, Clone, Copy)]
pub struct MlpObjective<'a> {
    pub arch: &'a MlpArchitecture,
    pub data: &'a Dataset,
}

impl<'a> MlpObjective<'a> {
    pub fn new(arch: &'a MlpArchitecture, data: &'a Dataset) -> Result<Self> {
        arch.check(&vec![0.0; arch.num_params()], data)?;
        Ok(Self { arch, data })
    }
}

impl Objective for MlpObjective<'_> {
    fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    fn num_examples(&self) -> usize {
        self.data.len()
    }

    fn loss_and_grad(&self, w: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        batch_loss_and_grad(self.arch, w, self.data, batch, grad)
    }

    fn evaluate(&self, w: &[f64]) -> Evaluation {
        let all: Vec<usize> = (0..self.data.len()).collect();
        let z = self.arch.forward(w, self.data, &all).pop().unwrap();
        evaluate_logits(&z, self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::data::make_blobs;
    use crate::numerics::RngStream;

    #[test]
    fn parameter_layout() {
        let a = MlpArchitecture::new(3, &[4], 2).unwrap();
        assert_eq!(a.num_params(), 3 * 4 + 4 + 4 * 2 + 2);
        assert_eq!(a.layers()[1].weights, 16);
        assert_eq!(a.layer_of(15), Some(0));
        assert_eq!(a.layer_of(16), Some(1));
        assert_eq!(a.layer_of(26), None);
        assert!(MlpArchitecture::new(3, &[], 2).is_err());
    }

    #[test]
    fn init_statistics() {
        let a = MlpArchitecture::new(256, &[40], 2).unwrap();
        let w = init_params(&a, &mut RngStream::new(1, 0).rng());
        let l = a.layers()[0];
        let ws = &w[l.weights..l.biases];
        let var = ws.iter().map(|x| x * x).sum::<f64>() / ws.len() as f64;
        let target = 1.0 / 16.0;
        assert!((var.sqrt() - target).abs() < 0.1 * target);
        assert!(a.layers().iter().all(|l| w[l.biases..l.end()].iter().all(|&b| b == 0.0)));
        assert_eq!(w, init_params(&a, &mut RngStream::new(1, 0).rng()));
    }

    #[test]
    fn zero_head_gives_log_classes() {
        let a = MlpArchitecture::new(5, &[7], 4).unwrap();
        let data = make_blobs(4, 3, 5, 1.0, &mut RngStream::new(2, 0).rng()).unwrap();
        let mut w = init_params(&a, &mut RngStream::new(3, 0).rng());
        w[a.layers()[1].range()].fill(0.0);
        let (loss, _) = loss_and_grad(&a, &w, &data).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn duplicated_data_same_loss_and_grad() {
        let a = MlpArchitecture::new(5, &[6, 3], 3).unwrap();
        let data = make_blobs(3, 4, 5, 2.0, &mut RngStream::new(2, 0).rng()).unwrap();
        let w = init_params(&a, &mut RngStream::new(4, 0).rng());
        let idx: Vec<usize> = (0..data.len()).chain(0..data.len()).collect();
        let (l1, g1) = loss_and_grad(&a, &w, &data).unwrap();
        let (l2, g2) = loss_and_grad(&a, &w, &data.subset(&idx).unwrap()).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        assert!(g1.iter().zip(&g2).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let a = MlpArchitecture::new(4, &[5, 3], 3).unwrap();
        let data = make_blobs(3, 3, 4, 2.0, &mut RngStream::new(5, 0).rng()).unwrap();
        let w = init_params(&a, &mut RngStream::new(6, 0).rng());
        let (_, g) = loss_and_grad(&a, &w, &data).unwrap();
        let h = 1e-6;
        for i in 0..w.len() {
            let mut wp = w.clone();
            wp[i] += h;
            let mut wm = w.clone();
            wm[i] -= h;
            let fd = (loss_and_grad(&a, &wp, &data).unwrap().0 - loss_and_grad(&a, &wm, &data).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 + 1e-4 * fd.abs(), "coord {i}: {fd} vs {}", g[i]);
        }
    }
}
