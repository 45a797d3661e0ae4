use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::Result;
use crate::prior::{BgChannel, BgDenoiser, SparseSignalPrior};
use crate::scalar::Real;
use crate::sensing::SensingSystem;

use super::{check_batch, guard_divergence, run_single, v2_from_residual, zeros_like_batch, BatchOutcome, RecoveryTrace, Recovery, Snapshot};

/// Orthogonal AMP with a divergence-free Bernoulli-Gaussian MMSE denoiser.
///
/// The denoiser is `C (eta(r) - <eta'> r)` with `C = 1 / (1 - <eta'>)` and
/// `<eta'>` the mean analytic derivative over the entries of `r_t`.
///
/// With `decorrelated` the linear step uses `g W` with `g = N / tr(W A)`,
/// so that `tr(I - g W A) = 0`; otherwise `W` is used as given.
#[derive(Debug, Clone, Copy)]
pub struct Oamp<S> {
    pub denoiser: BgDenoiser<S>,
    pub iterations: usize,
    pub epsilon: S,
    pub decorrelated: bool,
}

impl<S: Real> Oamp<S> {
    /// De-correlated OAMP.
    pub fn new(denoiser: BgDenoiser<S>, iterations: usize, epsilon: S) -> Self {
        Self {
            denoiser,
            iterations,
            epsilon,
            decorrelated: true,
        }
    }

    /// Scale applied to the front end's `W`.
    pub fn gain(&self, system: &SensingSystem<S>) -> S {
        if self.decorrelated {
            S::lit(system.n() as f64) / system.tr_z()
        } else {
            S::one()
        }
    }
}

impl<S: Real> Recovery<S> for Oamp<S> {
    fn name(&self) -> &'static str {
        "oamp"
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
        let n = S::lit(system.n() as f64);
        let g = self.gain(system);
        let bbt = (n - S::lit(2.0) * g * system.tr_z() + g * g * system.tr_zzt()) / n;
        let noise = g * g * system.tr_wwt() * system.noise_var() / n;
        let mut outcome = BatchOutcome::new(y.ncols());
        let mut s = zeros_like_batch(system, &y);
        observer(&Snapshot { t: 0, s: &s, r: None, v2: None, tau2: None });
        for t in 0..self.iterations {
            let c = system.residual(y, s.view());
            let (_, v2) = v2_from_residual(system, &c, self.epsilon);
            let tau2 = v2.mapv(|v| bbt * v + noise);
            let mut r = s;
            ndarray::linalg::general_mat_mul(g, system.w(), &c, S::one(), &mut r);
            s = divergence_free(&self.denoiser, &r, &tau2);
            guard_divergence(&mut s, t + 1, &mut outcome);
            observer(&Snapshot { t: t + 1, s: &s, r: Some(&r), v2: Some(&v2), tau2: Some(&tau2) });
        }
        Ok(outcome)
    }
}

fn divergence_free<S: Real>(denoiser: &BgDenoiser<S>, r: &Array2<S>, tau2: &Array1<S>) -> Array2<S> {
    let chans: Vec<BgChannel<S>> = tau2.iter().map(|&v| denoiser.at(v)).collect();
    let mut out = Array2::zeros(r.raw_dim());
    let mut mean_slope = vec![S::zero(); chans.len()];
    for (mut orow, rrow) in out.axis_iter_mut(Axis(0)).zip(r.axis_iter(Axis(0))) {
        for (b, (o, &v)) in orow.iter_mut().zip(rrow).enumerate() {
            *o = chans[b].value(v);
            mean_slope[b] += chans[b].dy(v);
        }
    }
    let n = S::lit(r.nrows() as f64);
    for d in &mut mean_slope {
        *d = *d / n;
    }
    for (mut orow, rrow) in out.axis_iter_mut(Axis(0)).zip(r.axis_iter(Axis(0))) {
        for (b, (o, &v)) in orow.iter_mut().zip(rrow).enumerate() {
            let d = mean_slope[b];
            *o = (*o - d * v) / (S::one() - d);
        }
    }
    out
}

/// OAMP on one observation with the prior's Bernoulli-Gaussian denoiser.
pub fn run_oamp<S: Real>(
    system: &SensingSystem<S>,
    y: ArrayView1<S>,
    iterations: usize,
    prior: &SparseSignalPrior<S>,
    epsilon: S,
) -> Result<RecoveryTrace<S>> {
    let engine = Oamp::new(BgDenoiser::from_prior(prior)?, iterations, epsilon);
    run_single(&engine, system, y)
}
