//! First-order Taylor model of an MLP around a reference point:
//! `logits(w) = logits(w_opt) + J (w − w_opt)`.

use alloc::vec;
use alloc::vec::Vec;

use super::data::Dataset;
use super::mlp::{evaluate_logits, softmax_xent, MlpArchitecture};
use super::{Evaluation, Objective};
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, Matrix};

/// Default cap on the dense Jacobian, in bytes.
pub const DEFAULT_JACOBIAN_LIMIT: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedModel {
    reference: Vec<f64>,
    /// `N × C`, row-major.
    reference_logits: Vec<f64>,
    /// Row `n·C + c` is `∂logit_c(x_n)/∂w` at the reference.
    jacobian: Matrix,
    data: Dataset,
}

impl LinearizedModel {
    /// Materializes logits and the `N·C × D` logit Jacobian at `w_opt`.
    /// Fails when the Jacobian would exceed `limit_bytes`.
    pub fn linearize(
        arch: &MlpArchitecture,
        w_opt: &[f64],
        data: &Dataset,
        limit_bytes: u64,
    ) -> Result<Self> {
        let (n, c, dim) = (data.len(), arch.num_classes(), arch.num_params());
        let required_bytes = (n as u64).saturating_mul(c as u64).saturating_mul(dim as u64).saturating_mul(8);
        if required_bytes > limit_bytes {
            return Err(Error::MemoryGuard { required_bytes, limit_bytes });
        }
        let reference_logits = super::mlp::logits(arch, w_opt, data)?;
        let mut jac = vec![0.0; n * c * dim];
        for i in 0..n {
            let acts = arch.forward(w_opt, data, &[i]);
            for k in 0..c {
                let mut delta = vec![0.0; c];
                delta[k] = 1.0;
                let row = (i * c + k) * dim;
                arch.backward(w_opt, &acts, delta, &mut jac[row..row + dim]);
            }
        }
        Ok(Self {
            reference: w_opt.to_vec(),
            reference_logits,
            jacobian: Matrix::from_vec_unchecked(n * c, dim, jac),
            data: data.clone(),
        })
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn jacobian(&self) -> &Matrix {
        &self.jacobian
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Linearized logits of example `i`.
    fn example_logits(&self, i: usize, dw: &[f64], out: &mut [f64]) {
        let c = self.data.num_classes();
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.reference_logits[i * c + k] + dot(self.jacobian.row(i * c + k), dw);
        }
    }

    fn displacement(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.reference).map(|(a, b)| a - b).collect()
    }

    /// All linearized logits, `N × C`.
    pub fn logits(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.reference.len() {
            return Err(Error::DimensionMismatch { expected: self.reference.len(), found: w.len() });
        }
        let c = self.data.num_classes();
        let dw = self.displacement(w);
        let mut z = vec![0.0; self.data.len() * c];
        for i in 0..self.data.len() {
            self.example_logits(i, &dw, &mut z[i * c..(i + 1) * c]);
        }
        Ok(z)
    }
}

impl Objective for LinearizedModel {
    fn num_params(&self) -> usize {
        self.reference.len()
    }

    fn num_examples(&self) -> usize {
        self.data.len()
    }

    fn loss_and_grad(&self, w: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let c = self.data.num_classes();
        let dw = self.displacement(w);
        let scale = 1.0 / batch.len() as f64;
        let (mut z, mut delta) = (vec![0.0; c], vec![0.0; c]);
        let mut loss = 0.0;
        for &i in batch {
            self.example_logits(i, &dw, &mut z);
            loss += softmax_xent(&z, self.data.labels()[i], Some(&mut delta)).0;
            for (k, &d) in delta.iter().enumerate() {
                axpy(d * scale, self.jacobian.row(i * c + k), grad);
            }
        }
        loss * scale
    }

    fn evaluate(&self, w: &[f64]) -> Evaluation {
        let z = self.logits(w).expect("dimension checked by caller");
        evaluate_logits(&z, &self.data)
    }
}
