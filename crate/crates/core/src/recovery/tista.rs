use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::prior::{BgChannel, BgDenoiser, SparseSignalPrior};
use crate::scalar::Real;
use crate::sensing::{FrontEnd, SensingSystem};

use super::{check_batch, guard_divergence, run_single, tau2_noise, tau2_slope, v2_from_residual, zeros_like_batch, BatchOutcome, RecoveryTrace, Recovery, Snapshot};

/// Learnable state of a TISTA network: one step size per round plus the
/// shrinkage prior `(alpha2, p)`, which is trainable when `train_prior`.
#[derive(Debug, Clone, PartialEq)]
pub struct TistaParams<S> {
    pub gammas: Vec<S>,
    pub alpha2: S,
    pub p: S,
    pub train_prior: bool,
}

impl<S: Real> TistaParams<S> {
    /// Step sizes with the prior's true `(alpha2, p)`, frozen.
    pub fn new(gammas: Vec<S>, prior: &SparseSignalPrior<S>) -> Result<Self> {
        let d = BgDenoiser::from_prior(prior)?;
        let params = Self {
            gammas,
            alpha2: d.alpha2,
            p: d.p,
            train_prior: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.gammas.iter().find(|g| !g.is_finite()) {
            return Err(Error::domain(format!("step size {g} is not finite")));
        }
        BgDenoiser::new(self.alpha2, self.p)?;
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.gammas.len()
    }

    /// `T`, or `T + 2` when the prior parameters are trained.
    pub fn trainable_count(&self) -> usize {
        self.gammas.len() + if self.train_prior { 2 } else { 0 }
    }

    pub fn denoiser(&self) -> BgDenoiser<S> {
        BgDenoiser {
            alpha2: self.alpha2,
            p: self.p,
        }
    }

    pub fn cast<T: Real>(&self) -> TistaParams<T> {
        TistaParams {
            gammas: self.gammas.iter().map(|g| T::lit(g.as_f64())).collect(),
            alpha2: T::lit(self.alpha2.as_f64()),
            p: T::lit(self.p.as_f64()),
            train_prior: self.train_prior,
        }
    }

    /// Plain-text form: `gamma[t] = <value>` per round, then `alpha2` and
    /// `p` lines when the prior is trained.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, g) in self.gammas.iter().enumerate() {
            let _ = writeln!(out, "gamma[{t}] = {}", g.as_f64());
        }
        if self.train_prior {
            let _ = writeln!(out, "alpha2 = {}", self.alpha2.as_f64());
            let _ = writeln!(out, "p = {}", self.p.as_f64());
        }
        out
    }
}

/// Reads the format written by [`TistaParams::to_text`]. Missing
/// `alpha2`/`p` fall back to `prior`.
pub fn parse_params<S: Real>(text: &str, prior: &SparseSignalPrior<S>) -> Result<TistaParams<S>> {
    let mut params = TistaParams::new(Vec::new(), prior)?;
    let mut gammas: Vec<Option<S>> = Vec::new();
    let (mut alpha2, mut p) = (None, None);
    let bad = |line: usize, reason: String| Error::config(format!("params line {}", line + 1), reason);
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| bad(ln, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let v: f64 = value.parse().map_err(|_| bad(ln, format!("`{value}` is not a number")))?;
        let v = S::lit(v);
        if let Some(idx) = key.strip_prefix("gamma[").and_then(|k| k.strip_suffix(']')) {
            let t: usize = idx.parse().map_err(|_| bad(ln, format!("bad round index `{idx}`")))?;
            if gammas.len() <= t {
                gammas.resize(t + 1, None);
            }
            if gammas[t].replace(v).is_some() {
                return Err(bad(ln, format!("gamma[{t}] given twice")));
            }
        } else if key == "alpha2" {
            alpha2 = Some(v);
        } else if key == "p" {
            p = Some(v);
        } else {
            return Err(bad(ln, format!("unknown key `{key}`")));
        }
    }
    params.gammas = gammas
        .into_iter()
        .enumerate()
        .map(|(t, g)| g.ok_or_else(|| Error::config("params", format!("gamma[{t}] missing"))))
        .collect::<Result<_>>()?;
    if alpha2.is_some() || p.is_some() {
        params.train_prior = true;
        params.alpha2 = alpha2.unwrap_or(params.alpha2);
        params.p = p.unwrap_or(params.p);
    }
    params.validate()?;
    Ok(params)
}

/// Intermediates of one TISTA round on a batch, kept for the backward pass.
pub(crate) struct TistaLayer<S> {
    /// Residual `y - A s_t` (centered for mean-removed systems), M x B.
    pub c: Array2<S>,
    /// `W c`, N x B.
    pub wc: Array2<S>,
    pub r: Array2<S>,
    pub v2_raw: Array1<S>,
    pub v2: Array1<S>,
    pub tau2: Array1<S>,
}

/// One round: `r_t = s_t + gamma W (y - A s_t)`, `s_{t+1} = eta(r_t; tau_t^2)`.
pub(crate) fn tista_layer<S: Real>(
    system: &SensingSystem<S>,
    y: ArrayView2<S>,
    s: &Array2<S>,
    gamma: S,
    denoiser: &BgDenoiser<S>,
    epsilon: S,
) -> (TistaLayer<S>, Array2<S>) {
    let c = system.residual(y, s.view());
    let (v2_raw, v2) = v2_from_residual(system, &c, epsilon);
    let slope = tau2_slope(system, gamma);
    let noise = tau2_noise(system, gamma);
    let tau2 = v2.mapv(|v| v * slope + noise);
    let wc = system.w().dot(&c);
    let mut r = wc.clone();
    r.zip_mut_with(s, |rv, &sv| *rv = sv + gamma * *rv);

    let chans: Vec<BgChannel<S>> = tau2.iter().map(|&v| denoiser.at(v)).collect();
    let mut next = Array2::zeros(r.raw_dim());
    for (mut orow, rrow) in next.axis_iter_mut(Axis(0)).zip(r.axis_iter(Axis(0))) {
        for ((o, &v), ch) in orow.iter_mut().zip(rrow).zip(&chans) {
            *o = ch.value(v);
        }
    }
    (TistaLayer { c, wc, r, v2_raw, v2, tau2 }, next)
}

/// TISTA engine. The same recursion serves the mean-removed and the
/// regularized-inverse variants; only the system differs.
#[derive(Debug, Clone, Copy)]
pub struct Tista<'a, S> {
    pub params: &'a TistaParams<S>,
    pub iterations: usize,
    pub epsilon: S,
}

impl<'a, S: Real> Tista<'a, S> {
    /// Runs all rounds present in `params`.
    pub fn new(params: &'a TistaParams<S>, epsilon: S) -> Self {
        Self {
            params,
            iterations: params.rounds(),
            epsilon,
        }
    }
}

impl<S: Real> Recovery<S> for Tista<'_, S> {
    fn name(&self) -> &'static str {
        "tista"
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
        if self.iterations > self.params.rounds() {
            return Err(Error::config(
                "iterations",
                format!("{} rounds requested but only {} step sizes given", self.iterations, self.params.rounds()),
            ));
        }
        if !(self.epsilon > S::zero()) {
            return Err(Error::domain("epsilon must be positive"));
        }
        if system.front_end() == FrontEnd::Transpose {
            return Err(Error::config("front_end", "TISTA needs a pseudo-inverse or regularized-inverse front end"));
        }
        let denoiser = self.params.denoiser();
        let mut outcome = BatchOutcome::new(y.ncols());
        let mut s = zeros_like_batch(system, &y);
        observer(&Snapshot { t: 0, s: &s, r: None, v2: None, tau2: None });
        for (t, &gamma) in self.params.gammas[..self.iterations].iter().enumerate() {
            let (layer, mut next) = tista_layer(system, y, &s, gamma, &denoiser, self.epsilon);
            guard_divergence(&mut next, t + 1, &mut outcome);
            s = next;
            observer(&Snapshot {
                t: t + 1,
                s: &s,
                r: Some(&layer.r),
                v2: Some(&layer.v2),
                tau2: Some(&layer.tau2),
            });
        }
        Ok(outcome)
    }
}

/// TISTA on one observation, all rounds of `params`.
pub fn run_tista<S: Real>(
    system: &SensingSystem<S>,
    y: ArrayView1<S>,
    params: &TistaParams<S>,
    epsilon: S,
) -> Result<RecoveryTrace<S>> {
    run_single(&Tista::new(params, epsilon), system, y)
}

/// TISTA with mean removal; `system` must come from
/// [`mean_removed_system`](crate::sensing::mean_removed_system).
pub fn run_tista_mr<S: Real>(
    system: &SensingSystem<S>,
    y: ArrayView1<S>,
    params: &TistaParams<S>,
    epsilon: S,
) -> Result<RecoveryTrace<S>> {
    if system.front_end() != FrontEnd::PseudoInverse {
        return Err(Error::config("front_end", "mean-removed TISTA needs the pseudo-inverse of A - mu"));
    }
    run_tista(system, y, params, epsilon)
}
