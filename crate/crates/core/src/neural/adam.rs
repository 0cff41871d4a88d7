//! Bias-corrected Adam.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Optimizer and schedule settings shared by every training mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Full-dataset evaluation cadence in steps. Step 0 and the final step
    /// are always evaluated.
    pub eval_every: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            batch_size: 128,
            epochs: 1,
            eval_every: 1,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::invalid("beta", "betas must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::invalid("batch_size", "batch size and eval cadence must be positive"));
        }
        Ok(())
    }

    /// Minibatch steps in one pass over `n` examples.
    pub fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size).max(1)
    }

    pub fn total_steps(&self, n: usize) -> usize {
        self.epochs * self.steps_per_epoch(n)
    }
}

/// First and second moment buffers plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self { m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64], config: &AdamConfig) {
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(state.t.min(i32::MAX as u64) as i32);
    let c2 = 1.0 - b2.powi(state.t.min(i32::MAX as u64) as i32);
    for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p -= config.learning_rate * mhat / (vhat.sqrt() + config.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_noop() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(3);
        let mut p = vec![1.0, -2.0, 3.0];
        adam_step(&mut s, &mut p, &[0.0; 3], &cfg);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(3);
        let mut p = vec![0.0; 3];
        adam_step(&mut s, &mut p, &[0.3, -7.0, 1e3], &cfg);
        // lr·g/(|g| + ε)
        for (x, g) in p.iter().zip([0.3f64, -7.0, 1e3]) {
            let expected = -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((x - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_equivariance() {
        let cfg = AdamConfig::default();
        let grads = [[0.5, -1.0], [2.0, 0.1], [-0.3, 0.7]];
        let (mut a, mut b) = (AdamState::new(2), AdamState::new(2));
        let (mut pa, mut pb) = (vec![0.0; 2], vec![0.0; 2]);
        for g in grads {
            adam_step(&mut a, &mut pa, &g, &cfg);
            adam_step(&mut b, &mut pb, &[-g[0], -g[1]], &cfg);
        }
        assert_eq!(pa, pb.iter().map(|x| -x).collect::<Vec<_>>());
    }

    #[test]
    fn schedule_counts() {
        let cfg = AdamConfig { epochs: 3, ..AdamConfig::default() };
        assert_eq!(cfg.steps_per_epoch(2000), 16);
        assert_eq!(cfg.total_steps(2000), 48);
        assert_eq!(cfg.steps_per_epoch(1), 1);
        assert!(AdamConfig { beta1: 1.0, ..cfg }.validate().is_err());
    }
}
