use crate::error::{Error, Result};
use crate::scalar::Real;

/// Adam optimizer state for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<S> {
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    m: Vec<S>,
    v: Vec<S>,
    steps: i32,
}

impl<S: Real> Adam<S> {
    /// Zeroed moments with the usual defaults `(0.9, 0.999, 1e-8)`.
    pub fn new(dim: usize) -> Self {
        Self {
            beta1: S::lit(0.9),
            beta2: S::lit(0.999),
            eps: S::lit(1e-8),
            m: vec![S::zero(); dim],
            v: vec![S::zero(); dim],
            steps: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn steps(&self) -> usize {
        self.steps as usize
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [S], grads: &[S], lr: S) -> Result<()> {
        if params.len() != self.dim() || grads.len() != self.dim() {
            return Err(Error::Shape(format!(
                "optimizer holds {} moments, got {} parameters and {} gradients",
                self.dim(),
                params.len(),
                grads.len()
            )));
        }
        self.steps += 1;
        let one = S::one();
        let c1 = one - self.beta1.powi(self.steps);
        let c2 = one - self.beta2.powi(self.steps);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
