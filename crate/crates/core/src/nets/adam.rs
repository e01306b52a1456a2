use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam with bias correction over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Adam {
    /// `beta1 = 0.5`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn new(n_params: usize, rate: f64) -> Self {
        Self::with_betas(n_params, rate, 0.5, 0.999)
    }

    pub fn with_betas(n_params: usize, rate: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            rate,
            beta1,
            beta2,
            eps: 1e-8,
            step: 0,
            first: vec![0.0; n_params],
            second: vec![0.0; n_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        for len in [params.len(), grads.len()] {
            if len != self.first.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.first.len(),
                    got: len,
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.rate * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut adam = Adam::new(3, 2e-4);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_rate_against_sign() {
        let mut adam = Adam::new(3, 2e-4);
        let mut p = vec![0.0; 3];
        adam.step(&mut p, &[3.0, -0.25, 40.0]).unwrap();
        // m_hat = g, v_hat = g^2, so the step is rate * g / (|g| + eps)
        for (x, s) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 2e-4).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_states_give_identical_results() {
        let mut a = Adam::new(2, 1e-3);
        let mut b = a.clone();
        let mut pa = vec![0.3, 0.4];
        let mut pb = pa.clone();
        for g in [[0.1, -0.2], [0.5, 0.5]] {
            a.step(&mut pa, &g).unwrap();
            b.step(&mut pb, &g).unwrap();
        }
        assert_eq!(pa, pb);
        assert_eq!(a, b);
    }

    #[test]
    fn shape_mismatch() {
        let mut adam = Adam::new(2, 1e-3);
        assert!(matches!(
            adam.step(&mut [0.0; 3], &[0.0; 3]),
            Err(Error::ShapeMismatch { expected: 2, got: 3 })
        ));
    }
}
