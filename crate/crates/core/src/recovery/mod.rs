//! Iterative recovery engines and the error-variance estimators they share.
//!
//! Every engine runs on a batch of observations laid out as columns of an
//! `M x B` matrix, so the per-iteration work is a pair of matrix products
//! plus elementwise shrinkage. Single-vector entry points wrap a batch of
//! one and return a [`RecoveryTrace`].

mod amp;
mod ista;
mod oamp;
mod tista;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

pub use amp::{run_amp, Amp};
pub use ista::{run_ista, Ista};
pub use oamp::{run_oamp, Oamp};
pub(crate) use tista::{tista_layer, TistaLayer};
pub use tista::{parse_params, run_tista, run_tista_mr, Tista, TistaParams};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sensing::SensingSystem;

/// Lower clamp for the signal-error variance estimate.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// An estimate whose sup-norm exceeds this is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Reported NMSE for exact recovery.
pub const NMSE_FLOOR_DB: f64 = -120.0;

/// State handed to observers after each iteration. `t` indexes the
/// estimate `s_t`; `r`, `v2`, `tau2` belong to the step that produced it
/// and are absent for `t = 0`.
pub struct Snapshot<'a, S> {
    pub t: usize,
    pub s: &'a Array2<S>,
    pub r: Option<&'a Array2<S>>,
    pub v2: Option<&'a Array1<S>>,
    pub tau2: Option<&'a Array1<S>>,
}

/// Per-column divergence record of a batch run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchOutcome {
    pub diverged_at: Vec<Option<usize>>,
}

impl BatchOutcome {
    fn new(batch: usize) -> Self {
        Self {
            diverged_at: vec![None; batch],
        }
    }

    pub fn diverged(&self) -> usize {
        self.diverged_at.iter().filter(|d| d.is_some()).count()
    }
}

/// A recovery algorithm with its hyperparameters bound.
pub trait Recovery<S: Real>: Sync {
    fn name(&self) -> &'static str;

    fn iterations(&self) -> usize;

    /// Runs on the columns of `y`, reporting `s_0 .. s_T` to `observer`.
    fn run_batch(
        &self,
        system: &SensingSystem<S>,
        y: ArrayView2<S>,
        observer: &mut dyn FnMut(&Snapshot<S>),
    ) -> Result<BatchOutcome>;
}

/// Marks columns whose estimate left the finite range and zeroes them so
/// they do not poison later matrix products.
pub(crate) fn guard_divergence<S: Real>(s: &mut Array2<S>, t: usize, outcome: &mut BatchOutcome) {
    let limit = S::lit(DIVERGENCE_LIMIT);
    for (b, mut col) in s.axis_iter_mut(Axis(1)).enumerate() {
        let bad = col.iter().any(|v| !(v.abs() <= limit));
        if bad || outcome.diverged_at[b].is_some() {
            if outcome.diverged_at[b].is_none() {
                outcome.diverged_at[b] = Some(t);
            }
            col.fill(S::zero());
        }
    }
}

pub(crate) fn check_batch<S: Real>(system: &SensingSystem<S>, y: &ArrayView2<S>) -> Result<()> {
    if y.nrows() != system.m() {
        return Err(Error::Shape(format!(
            "observation has {} rows, system has M = {}",
            y.nrows(),
            system.m()
        )));
    }
    Ok(())
}

/// `max((||y - A s||^2 - M sigma^2) / tr(A^T A), epsilon)` for one sample.
pub fn estimate_v2<S: Real>(system: &SensingSystem<S>, y: ArrayView1<S>, s: ArrayView1<S>, epsilon: S) -> Result<S> {
    if y.len() != system.m() || s.len() != system.n() {
        return Err(Error::Shape("estimate_v2 dimension mismatch".into()));
    }
    let y2 = y.insert_axis(Axis(1));
    let s2 = s.insert_axis(Axis(1));
    let c = system.residual(y2, s2);
    Ok(v2_from_residual(system, &c, epsilon).1[0])
}

/// Unclamped and clamped signal-error variance per column of the residual.
pub(crate) fn v2_from_residual<S: Real>(system: &SensingSystem<S>, c: &Array2<S>, epsilon: S) -> (Array1<S>, Array1<S>) {
    let noise = S::lit(system.m() as f64) * system.noise_var();
    let raw: Array1<S> = c
        .axis_iter(Axis(1))
        .map(|col| (col.dot(&col) - noise) / system.tr_ata())
        .collect();
    let clamped = raw.mapv(|v| if v > epsilon { v } else { epsilon });
    (raw, clamped)
}

/// Coefficient of `v2` in the scalar-channel variance estimate.
#[inline]
pub(crate) fn tau2_slope<S: Real>(system: &SensingSystem<S>, gamma: S) -> S {
    let n = S::lit(system.n() as f64);
    let m = S::lit(system.m() as f64);
    (n + (gamma * gamma - S::lit(2.0) * gamma) * m) / n
}

#[inline]
pub(crate) fn tau2_noise<S: Real>(system: &SensingSystem<S>, gamma: S) -> S {
    gamma * gamma * system.noise_var() * system.tr_wwt() / S::lit(system.n() as f64)
}

/// `(v2 / N)(N + (gamma^2 - 2 gamma) M) + gamma^2 sigma^2 tr(W W^T) / N`.
///
/// Uses `tr(WA) = tr(WA (WA)^T) = M`, exact for the pseudo-inverse front end.
pub fn estimate_tau2<S: Real>(system: &SensingSystem<S>, v2: S, gamma: S) -> Result<S> {
    if !(v2 >= S::zero()) {
        return Err(Error::domain(format!("v2 must be >= 0, got {v2}")));
    }
    let tau2 = v2 * tau2_slope(system, gamma) + tau2_noise(system, gamma);
    if !(tau2 >= S::zero()) {
        return Err(Error::domain(format!("scalar-channel variance estimate is negative: {tau2}")));
    }
    Ok(tau2)
}

/// `10 log10(||s - x||^2 / ||x||^2)`, floored at [`NMSE_FLOOR_DB`].
pub fn nmse_db<S: Real>(estimate: ArrayView1<S>, truth: ArrayView1<S>) -> f64 {
    let err: f64 = estimate.iter().zip(truth).map(|(a, b)| (*a - *b).as_f64().powi(2)).sum();
    let energy: f64 = truth.iter().map(|v| v.as_f64().powi(2)).sum();
    ratio_to_db(err / energy)
}

pub(crate) fn ratio_to_db(ratio: f64) -> f64 {
    if ratio.is_nan() {
        return f64::NAN;
    }
    (10.0 * ratio.log10()).max(NMSE_FLOOR_DB)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<S> {
    pub s: Array1<S>,
    /// Input to the shrinkage that produced `s` (`r_t` for ISTA, OAMP and TISTA,
    /// the pseudo-data `s_t + A^T r_t` for AMP).
    pub r: Option<Array1<S>>,
    pub v2: Option<S>,
    pub tau2: Option<S>,
    pub nmse_db: Option<f64>,
}

/// Per-iteration record of a single recovery, `T + 1` entries starting at `s_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryTrace<S> {
    pub steps: Vec<TraceStep<S>>,
}

impl<S: Real> RecoveryTrace<S> {
    pub fn estimate(&self) -> &Array1<S> {
        &self.steps.last().expect("trace holds s_0").s
    }

    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    /// Fills `nmse_db` against the true signal.
    pub fn attach_truth(&mut self, x: ArrayView1<S>) {
        for step in &mut self.steps {
            step.nmse_db = Some(nmse_db(step.s.view(), x));
        }
    }

    /// CSV with columns `iter,v2_est,tau2_est,nmse_db`; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,v2_est,tau2_est,nmse_db\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6e}")).unwrap_or_default();
        for (t, step) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t},{},{},{}",
                opt(step.v2.map(Real::as_f64)),
                opt(step.tau2.map(Real::as_f64)),
                opt(step.nmse_db)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Runs `engine` on a single observation.
pub fn run_single<S: Real>(engine: &dyn Recovery<S>, system: &SensingSystem<S>, y: ArrayView1<S>) -> Result<RecoveryTrace<S>> {
    let y2 = y.insert_axis(Axis(1));
    let mut steps = Vec::with_capacity(engine.iterations() + 1);
    let outcome = engine.run_batch(system, y2, &mut |snap| {
        steps.push(TraceStep {
            s: snap.s.column(0).to_owned(),
            r: snap.r.map(|r| r.column(0).to_owned()),
            v2: snap.v2.map(|v| v[0]),
            tau2: snap.tau2.map(|v| v[0]),
            nmse_db: None,
        });
    })?;
    if let Some(iteration) = outcome.diverged_at[0] {
        return Err(Error::Divergence { iteration });
    }
    Ok(RecoveryTrace { steps })
}

pub(crate) fn zeros_like_batch<S: Real>(system: &SensingSystem<S>, y: &ArrayView2<S>) -> Array2<S> {
    Array2::zeros((system.n(), y.ncols()))
}
