use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First and second moment estimates with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One descent step on `params` along `grads`.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim("optimizer state", self.m.len(), grads.len()));
        }
        if let Some(g) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {g}")));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut opt = Adam::new(3);
        let mut p = vec![1.0, -2.0, 3.0];
        for _ in 0..10 {
            opt.update(&mut p, &[0.0; 3], 0.1).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        // Recurrence simulated independently: with bias correction both moment
        // estimates equal g and g^2 exactly, so every step is lr * g / (|g| + eps).
        for g in [1e-3, 0.5, 40.0] {
            let mut opt = Adam::new(1);
            let mut p = vec![0.0];
            let lr = 0.01;
            let mut last = 0.0;
            for _ in 0..200 {
                let before = p[0];
                opt.update(&mut p, &[g], lr).unwrap();
                last = before - p[0];
            }
            let expected = lr * g / (g + 1e-8);
            assert!((last - expected).abs() < 1e-12, "g {g}: step {last}");
            assert!((last - lr).abs() < 1e-7);
        }
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut opt = Adam::new(2);
            let mut p = vec![0.3, -0.1];
            for i in 0..50 {
                let g = [(i as f64).sin(), (i as f64 * 0.3).cos()];
                opt.update(&mut p, &g, 1e-3).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut opt = Adam::new(1);
        assert!(opt.update(&mut [0.0], &[f64::NAN], 0.1).is_err());
    }
}
