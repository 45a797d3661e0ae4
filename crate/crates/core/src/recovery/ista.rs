use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::prior::soft;
use crate::scalar::Real;
use crate::sensing::SensingSystem;

use super::{check_batch, guard_divergence, run_single, zeros_like_batch, BatchOutcome, RecoveryTrace, Recovery, Snapshot};

/// Proximal gradient descent with a fixed step and soft threshold.
#[derive(Debug, Clone, Copy)]
pub struct Ista<S> {
    pub step: S,
    pub threshold: S,
    pub iterations: usize,
}

impl<S: Real> Ista<S> {
    /// Step `1 / sigma_max(A)^2`, inside the convergence region.
    pub fn with_default_step(system: &SensingSystem<S>, threshold: S, iterations: usize) -> Self {
        let smax = system.sigma_max();
        Self {
            step: (smax * smax).recip(),
            threshold,
            iterations,
        }
    }
}

impl<S: Real> Recovery<S> for Ista<S> {
    fn name(&self) -> &'static str {
        "ista"
    }

    fn iterations(&self) -> usize {
        self.iterations
    }

    fn run_batch(
        &self,
        system: &SensingSystem<S>,
        y: ArrayView2<S>,
        observer: &mut dyn FnMut(&Snapshot<S>),
    ) -> Result<BatchOutcome> {
        check_batch(system, &y)?;
        if self.threshold < S::zero() {
            return Err(Error::domain("ISTA threshold must be >= 0"));
        }
        let a = system.a();
        let mut outcome = BatchOutcome::new(y.ncols());
        let mut s = zeros_like_batch(system, &y);
        observer(&Snapshot { t: 0, s: &s, r: None, v2: None, tau2: None });
        for t in 0..self.iterations {
            let mut resid = y.to_owned();
            ndarray::linalg::general_mat_mul(-S::one(), a, &s, S::one(), &mut resid);
            let mut r = s;
            ndarray::linalg::general_mat_mul(self.step, &a.t(), &resid, S::one(), &mut r);
            s = r.mapv(|v| soft(v, self.threshold));
            guard_divergence(&mut s, t + 1, &mut outcome);
            observer(&Snapshot { t: t + 1, s: &s, r: Some(&r), v2: None, tau2: None });
        }
        Ok(outcome)
    }
}

/// `r_t = s_t + beta A^T (y - A s_t)`, `s_{t+1} = soft(r_t; tau)`, `s_0 = 0`.
pub fn run_ista<S: Real>(system: &SensingSystem<S>, y: ArrayView1<S>, iterations: usize, step: S, threshold: S) -> Result<RecoveryTrace<S>> {
    let engine = Ista { step, threshold, iterations };
    run_single(&engine, system, y)
}

