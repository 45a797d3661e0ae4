use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::prior::soft;
use crate::scalar::Real;
use crate::sensing::SensingSystem;

use super::{check_batch, guard_divergence, run_single, zeros_like_batch, BatchOutcome, RecoveryTrace, Recovery, Snapshot};

/// Approximate message passing with soft thresholding and the
/// `tau_t = theta ||r_t|| / sqrt(M)` threshold rule.
#[derive(Debug, Clone, Copy)]
pub struct Amp<S> {
    pub theta: S,
    pub iterations: usize,
}

impl<S: Real> Recovery<S> for Amp<S> {
    fn name(&self) -> &'static str {
        "amp"
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
        if !(self.theta >= S::zero()) {
            return Err(Error::domain("AMP threshold scale must be >= 0"));
        }
        let a = system.a();
        let m = S::lit(system.m() as f64);
        let batch = y.ncols();
        let mut outcome = BatchOutcome::new(batch);
        let mut s = zeros_like_batch(system, &y);
        let mut r_prev: Array2<S> = Array2::zeros((system.m(), batch));
        observer(&Snapshot { t: 0, s: &s, r: None, v2: None, tau2: None });
        for t in 0..self.iterations {
            // Onsager coefficient b_t = ||s_t||_0 / M
            let onsager: Array1<S> = s
                .axis_iter(Axis(1))
                .map(|col| S::lit(col.iter().filter(|v| **v != S::zero()).count() as f64) / m)
                .collect();
            let mut r = y.to_owned();
            ndarray::linalg::general_mat_mul(-S::one(), a, &s, S::one(), &mut r);
            r += &(&r_prev * &onsager.view().insert_axis(Axis(0)));
            let tau: Array1<S> = r
                .axis_iter(Axis(1))
                .map(|col| self.theta * col.dot(&col).sqrt() / m.sqrt())
                .collect();
            let mut pseudo = s;
            ndarray::linalg::general_mat_mul(S::one(), &a.t(), &r, S::one(), &mut pseudo);
            s = pseudo.clone();
            for mut row in s.axis_iter_mut(Axis(0)) {
                row.iter_mut().zip(&tau).for_each(|(v, &th)| *v = soft(*v, th));
            }
            guard_divergence(&mut s, t + 1, &mut outcome);
            for (b, d) in outcome.diverged_at.iter().enumerate() {
                if d.is_some() {
                    r.column_mut(b).fill(S::zero());
                }
            }
            observer(&Snapshot { t: t + 1, s: &s, r: Some(&pseudo), v2: None, tau2: None });
            r_prev = r;
        }
        Ok(outcome)
    }
}

/// AMP with `s_0 = 0` and `r_{-1} = 0`.
pub fn run_amp<S: Real>(system: &SensingSystem<S>, y: ArrayView1<S>, iterations: usize, theta: S) -> Result<RecoveryTrace<S>> {
    run_single(&Amp { theta, iterations }, system, y)
}
