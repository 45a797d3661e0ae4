//! Sparse signal priors, scalar shrinkage functions and noise calibration.
//!
//! The Bernoulli-Gaussian MMSE denoiser is evaluated through the log of the
//! spike-to-slab likelihood ratio, so it stays finite for any finite input
//! and any positive channel variance.

use ndarray::{Array1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum PriorKind<S> {
    /// Nonzero entries are `N(0, alpha2)`.
    BernoulliGaussian { alpha2: S },
    /// Nonzero entries are uniform over a finite support.
    FiniteDiscrete { support: Vec<S> },
}

/// Spike-and-slab prior `(1 - p) delta(x) + p * P_nonzero(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignalPrior<S> {
    p: S,
    kind: PriorKind<S>,
}

impl<S: Real> SparseSignalPrior<S> {
    pub fn bernoulli_gaussian(p: S, alpha2: S) -> Result<Self> {
        check_p(p)?;
        if !(alpha2 > S::zero()) || !alpha2.is_finite() {
            return Err(Error::domain(format!("alpha2 must be positive, got {alpha2}")));
        }
        Ok(Self {
            p,
            kind: PriorKind::BernoulliGaussian { alpha2 },
        })
    }

    pub fn finite_discrete(p: S, support: Vec<S>) -> Result<Self> {
        check_p(p)?;
        if support.is_empty() {
            return Err(Error::domain("discrete support is empty"));
        }
        for (i, a) in support.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::domain(format!("support value {a} is not finite")));
            }
            if support[..i].contains(a) {
                return Err(Error::domain(format!("support value {a} is duplicated")));
            }
        }
        Ok(Self {
            p,
            kind: PriorKind::FiniteDiscrete { support },
        })
    }

    pub fn p(&self) -> S {
        self.p
    }

    pub fn kind(&self) -> &PriorKind<S> {
        &self.kind
    }

    /// Variance of the nonzero component, when Bernoulli-Gaussian.
    pub fn alpha2(&self) -> Option<S> {
        match self.kind {
            PriorKind::BernoulliGaussian { alpha2 } => Some(alpha2),
            PriorKind::FiniteDiscrete { .. } => None,
        }
    }

    /// `E[X^2]` of a single entry.
    pub fn second_moment(&self) -> S {
        match &self.kind {
            PriorKind::BernoulliGaussian { alpha2 } => self.p * *alpha2,
            PriorKind::FiniteDiscrete { support } => {
                let n = S::lit(support.len() as f64);
                self.p * support.iter().map(|&s| s * s).sum::<S>() / n
            }
        }
    }

    pub fn cast<T: Real>(&self) -> SparseSignalPrior<T> {
        let kind = match &self.kind {
            PriorKind::BernoulliGaussian { alpha2 } => PriorKind::BernoulliGaussian {
                alpha2: T::lit(alpha2.as_f64()),
            },
            PriorKind::FiniteDiscrete { support } => PriorKind::FiniteDiscrete {
                support: support.iter().map(|s| T::lit(s.as_f64())).collect(),
            },
        };
        SparseSignalPrior {
            p: T::lit(self.p.as_f64()),
            kind,
        }
    }

    /// Draws a single entry.
    pub fn sample_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let u: f64 = rng.random();
        if u >= self.p.as_f64() {
            return S::zero();
        }
        match &self.kind {
            PriorKind::BernoulliGaussian { alpha2 } => {
                let z: f64 = StandardNormal.sample(rng);
                S::lit(z) * alpha2.sqrt()
            }
            PriorKind::FiniteDiscrete { support } => support[rng.random_range(0..support.len())],
        }
    }
}

fn check_p<S: Real>(p: S) -> Result<()> {
    if p > S::zero() && p <= S::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("p must lie in (0, 1], got {p}")))
    }
}

/// Variance of a virtual additive Gaussian noise channel `Y = X + N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarChannel<S> {
    noise_var: S,
}

impl<S: Real> ScalarChannel<S> {
    pub fn new(noise_var: S) -> Result<Self> {
        if noise_var >= S::zero() && noise_var.is_finite() {
            Ok(Self { noise_var })
        } else {
            Err(Error::domain(format!("channel variance must be >= 0, got {noise_var}")))
        }
    }

    pub fn noise_var(&self) -> S {
        self.noise_var
    }

    /// Shrinkage needs a strictly positive variance.
    pub fn shrinkage_var(&self) -> Result<S> {
        if self.noise_var > S::zero() {
            Ok(self.noise_var)
        } else {
            Err(Error::domain("shrinkage requires a positive channel variance"))
        }
    }
}

/// Draws `n` i.i.d. entries from `prior`.
pub fn sample_signal<S: Real, R: Rng + ?Sized>(
    prior: &SparseSignalPrior<S>,
    n: usize,
    rng: &mut R,
) -> Result<Array1<S>> {
    if n == 0 {
        return Err(Error::domain("signal dimension must be at least 1"));
    }
    Ok((0..n).map(|_| prior.sample_entry(rng)).collect())
}

#[inline]
pub(crate) fn soft<S: Real>(r: S, tau: S) -> S {
    let mag = r.abs() - tau;
    if mag > S::zero() {
        mag.copysign(r)
    } else {
        S::zero()
    }
}

/// Soft thresholding `sign(r) * max(|r| - tau, 0)`.
pub fn eta_soft<S: Real>(r: S, tau: S) -> Result<S> {
    if tau < S::zero() || tau.is_nan() {
        return Err(Error::domain(format!("threshold must be >= 0, got {tau}")));
    }
    Ok(soft(r, tau))
}

/// Elementwise [`eta_soft`].
pub fn eta_soft_vec<S: Real>(r: &Array1<S>, tau: S) -> Result<Array1<S>> {
    eta_soft(S::zero(), tau)?;
    Ok(r.mapv(|v| soft(v, tau)))
}

/// `(logistic(-l), logistic(l))` from a single exponential.
#[inline]
fn logistic_pair<S: Real>(l: S) -> (S, S) {
    let e = (-l.abs()).exp();
    let inv = (S::one() + e).recip();
    if l >= S::zero() {
        (e * inv, inv)
    } else {
        (inv, e * inv)
    }
}

/// Bernoulli-Gaussian MMSE shrinkage with fixed prior parameters.
///
/// The prior parameters are stored unchecked beyond construction so that
/// the training loop can evaluate it with trainable `(alpha2, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgDenoiser<S> {
    pub alpha2: S,
    pub p: S,
}

/// Partial derivatives of the denoiser output at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgPartials<S> {
    pub value: S,
    pub dy: S,
    pub dvar: S,
    pub dalpha2: S,
    pub dp: S,
}

impl<S: Real> BgDenoiser<S> {
    pub fn new(alpha2: S, p: S) -> Result<Self> {
        SparseSignalPrior::bernoulli_gaussian(p, alpha2)?;
        Ok(Self { alpha2, p })
    }

    pub fn from_prior(prior: &SparseSignalPrior<S>) -> Result<Self> {
        match prior.alpha2() {
            Some(alpha2) => Ok(Self { alpha2, p: prior.p() }),
            None => Err(Error::domain("Bernoulli-Gaussian denoiser needs a Bernoulli-Gaussian prior")),
        }
    }

    /// Specializes the denoiser to channel variance `var > 0`.
    pub fn at(&self, var: S) -> BgChannel<S> {
        let half = S::lit(0.5);
        let xi = self.alpha2 + var;
        let log_odds = if self.p >= S::one() {
            S::neg_infinity()
        } else {
            ((S::one() - self.p) / self.p).ln()
        };
        BgChannel {
            var,
            xi,
            alpha2: self.alpha2,
            p: self.p,
            gain: self.alpha2 / xi,
            offset: log_odds + half * (xi / var).ln(),
            curv: half * (var.recip() - xi.recip()),
        }
    }
}

/// [`BgDenoiser`] evaluated at a fixed channel variance.
///
/// With `L(y) = ln((1-p)/p) + ln(xi/var)/2 - curv * y^2` the output is
/// `y * gain * logistic(-L(y))`.
#[derive(Debug, Clone, Copy)]
pub struct BgChannel<S> {
    var: S,
    xi: S,
    alpha2: S,
    p: S,
    gain: S,
    offset: S,
    curv: S,
}

impl<S: Real> BgChannel<S> {
    #[inline]
    fn log_ratio(&self, y: S) -> S {
        self.offset - self.curv * y * y
    }

    /// Posterior probability that the entry is nonzero.
    #[inline]
    pub fn slab_weight(&self, y: S) -> S {
        logistic_pair(self.log_ratio(y)).0
    }

    #[inline]
    pub fn value(&self, y: S) -> S {
        y * self.gain * self.slab_weight(y)
    }

    #[inline]
    pub fn dy(&self, y: S) -> S {
        let (w, w_spike) = logistic_pair(self.log_ratio(y));
        self.gain * (w + S::lit(2.0) * w * w_spike * self.curv * y * y)
    }

    pub fn partials(&self, y: S) -> BgPartials<S> {
        let half = S::lit(0.5);
        let (w, w_spike) = logistic_pair(self.log_ratio(y));
        let ww = w * w_spike;
        let y2 = y * y;
        let xi2 = self.xi * self.xi;
        let gy = self.gain * y;

        let dl_dvar = half * (self.xi.recip() - self.var.recip())
            + half * y2 * ((self.var * self.var).recip() - xi2.recip());
        let dl_dalpha2 = half / self.xi - half * y2 / xi2;
        let dl_dp = -(self.p * (S::one() - self.p)).recip();

        BgPartials {
            value: gy * w,
            dy: self.gain * (w + S::lit(2.0) * ww * self.curv * y2),
            dvar: y * (-(self.alpha2 / xi2) * w - self.gain * ww * dl_dvar),
            dalpha2: y * ((self.var / xi2) * w - self.gain * ww * dl_dalpha2),
            dp: if ww == S::zero() { S::zero() } else { -gy * ww * dl_dp },
        }
    }
}

/// Posterior mean `E[X | y]` under a Bernoulli-Gaussian prior observed
/// through a Gaussian channel of variance `noise_var`.
pub fn eta_mmse_bg<S: Real>(y: S, noise_var: S, prior: &SparseSignalPrior<S>) -> Result<S> {
    let var = ScalarChannel::new(noise_var)?.shrinkage_var()?;
    Ok(BgDenoiser::from_prior(prior)?.at(var).value(y))
}

/// Posterior mean `E[X | y]` under a spike plus uniform finite-support prior.
pub fn eta_mmse_discrete<S: Real>(y: S, noise_var: S, prior: &SparseSignalPrior<S>) -> Result<S> {
    let var = ScalarChannel::new(noise_var)?.shrinkage_var()?;
    let support = match prior.kind() {
        PriorKind::FiniteDiscrete { support } => support,
        PriorKind::BernoulliGaussian { .. } => {
            return Err(Error::domain("discrete denoiser needs a finite-discrete prior"))
        }
    };
    let p = prior.p();
    let scale = -(S::lit(2.0) * var).recip();
    let per_atom = p.ln() - S::lit(support.len() as f64).ln();
    let spike = if p >= S::one() {
        S::neg_infinity()
    } else {
        (S::one() - p).ln() + scale * y * y
    };
    let logs: Vec<S> = support
        .iter()
        .map(|&s| per_atom + scale * (y - s) * (y - s))
        .collect();
    let peak = logs.iter().copied().fold(spike, S::max);
    let mut num = S::zero();
    let mut den = (spike - peak).exp();
    for (&s, &l) in support.iter().zip(&logs) {
        let w = (l - peak).exp();
        num += s * w;
        den += w;
    }
    Ok(num / den)
}

/// Noise variance giving `E||Ax||^2 / E||w||^2 = 10^(snr_db / 10)` for the
/// realized matrix `a` (M x N).
pub fn calibrate_noise_var<S: Real>(
    a: ArrayView2<S>,
    prior: &SparseSignalPrior<S>,
    snr_db: S,
) -> Result<S> {
    if !snr_db.is_finite() {
        return Err(Error::domain(format!("SNR must be finite, got {snr_db}")));
    }
    let m = a.nrows();
    if m == 0 {
        return Err(Error::Shape("sensing matrix has no rows".into()));
    }
    let tr_ata: S = a.iter().map(|&v| v * v).sum();
    let snr = S::lit(10.0).powf(snr_db / S::lit(10.0));
    Ok(prior.second_moment() * tr_ata / (S::lit(m as f64) * snr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bg(p: f64, alpha2: f64) -> SparseSignalPrior<f64> {
        SparseSignalPrior::bernoulli_gaussian(p, alpha2).unwrap()
    }

    /// Posterior mean by brute-force trapezoid quadrature of x * prior * likelihood.
    fn quadrature_posterior_mean(y: f64, var: f64, p: f64, alpha2: f64) -> f64 {
        let xi = alpha2 + var;
        let centre = y * alpha2 / xi;
        let spread = (alpha2 * var / xi).sqrt();
        let n = 20_000;
        let (lo, hi) = (centre - 12.0 * spread, centre + 12.0 * spread);
        let h = (hi - lo) / n as f64;
        let log_slab = |x: f64| {
            (p / (2.0 * std::f64::consts::PI * alpha2).sqrt()).ln() - x * x / (2.0 * alpha2)
                - (y - x) * (y - x) / (2.0 * var)
                - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
        };
        let log_spike = (1.0 - p).ln() - y * y / (2.0 * var) - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        let peak = (0..=n).map(|k| log_slab(lo + k as f64 * h)).fold(log_spike, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=n {
            let x = lo + k as f64 * h;
            let wt = if k == 0 || k == n { 0.5 } else { 1.0 };
            let f = (log_slab(x) - peak).exp() * wt * h;
            num += x * f;
            den += f;
        }
        den += (log_spike - peak).exp();
        num / den
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(eta_soft(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(eta_soft(-0.5, 1.0).unwrap(), 0.0);
        assert_eq!(eta_soft(-3.0, 1.0).unwrap(), -2.0);
        assert_eq!(eta_soft(0.37, 0.0).unwrap(), 0.37);
        assert!(matches!(eta_soft(1.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn mmse_bg_examples() {
        let prior = bg(0.1, 1.0);
        for var in [0.01, 0.2, 2.0] {
            assert_eq!(eta_mmse_bg(0.0, var, &prior).unwrap(), 0.0);
        }
        let full = bg(1.0, 1.3);
        for y in [-4.0, -0.3, 0.7, 9.0] {
            assert_relative_eq!(eta_mmse_bg(y, 0.4, &full).unwrap(), y * 1.3 / 1.7, max_relative = 1e-14);
        }
        let got = eta_mmse_bg(2.0, 0.2, &prior).unwrap();
        let want = quadrature_posterior_mean(2.0, 0.2, 0.1, 1.0);
        assert_relative_eq!(got, want, max_relative = 1e-8);
        assert!(matches!(eta_mmse_bg(1.0, 0.0, &prior), Err(Error::Domain(_))));
    }

    #[test]
    fn mmse_bg_matches_quadrature_on_grid() {
        let prior = bg(0.1, 1.0);
        for var in [0.01, 0.2, 0.8, 2.0] {
            for k in -40..=40 {
                let y = k as f64 * 0.25;
                let got = eta_mmse_bg(y, var, &prior).unwrap();
                let want = quadrature_posterior_mean(y, var, 0.1, 1.0);
                if k == 0 {
                    assert_eq!(got, 0.0);
                    continue;
                }
                let rel = (got - want).abs() / want.abs();
                assert!(rel < 1e-8, "y={y} var={var}: {got} vs {want} (rel {rel:e})");
                assert!(got.abs() < y.abs() / (1.0 + var) + 1e-12);
            }
        }
    }

    #[test]
    fn mmse_bg_finite_at_extreme_inputs() {
        let prior = bg(0.1, 1.0);
        for y in [1e3, -1e6, 1e150] {
            for var in [1e-9, 1e-3, 1e3] {
                let v = eta_mmse_bg(y, var, &prior).unwrap();
                assert!(v.is_finite(), "y={y} var={var}");
            }
        }
    }

    #[test]
    fn mmse_bg_smooth_across_origin() {
        // The soft threshold has a kink at |r| = tau; the MMSE shrinkage has
        // a continuous central-difference slope everywhere, including y = 0.
        let ch = BgDenoiser::new(1.0, 0.1).unwrap().at(0.2);
        let h = 1e-6;
        let slope = |y: f64| (ch.value(y + h) - ch.value(y - h)) / (2.0 * h);
        let (left, mid, right) = (slope(-1e-4), slope(0.0), slope(1e-4));
        assert!((left - mid).abs() < 1e-6 && (right - mid).abs() < 1e-6);
        assert_relative_eq!(ch.dy(0.0), mid, max_relative = 1e-6);
    }

    #[test]
    fn partials_match_finite_differences() {
        let h = 1e-6;
        for &(y, var, alpha2, p) in &[
            (0.8, 0.2, 1.0, 0.1),
            (-2.5, 0.05, 3.7, 0.08),
            (0.1, 1.5, 0.6, 0.45),
            (4.0, 0.01, 1.0, 0.3),
        ] {
            let d = BgDenoiser { alpha2, p };
            let pt = d.at(var).partials(y);
            let f = |y: f64, var: f64, alpha2: f64, p: f64| BgDenoiser { alpha2, p }.at(var).value(y);
            let fd = [
                (f(y + h, var, alpha2, p) - f(y - h, var, alpha2, p)) / (2.0 * h),
                (f(y, var + h, alpha2, p) - f(y, var - h, alpha2, p)) / (2.0 * h),
                (f(y, var, alpha2 + h, p) - f(y, var, alpha2 - h, p)) / (2.0 * h),
                (f(y, var, alpha2, p + h) - f(y, var, alpha2, p - h)) / (2.0 * h),
            ];
            let an = [pt.dy, pt.dvar, pt.dalpha2, pt.dp];
            for (a, b) in an.iter().zip(fd) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{an:?} vs {fd:?}");
            }
            assert_eq!(pt.value, f(y, var, alpha2, p));
            assert_relative_eq!(pt.dy, d.at(var).dy(y), max_relative = 1e-14);
        }
    }

    /// Posterior mean by explicit Bayes summation over the atoms.
    fn summation_posterior_mean(y: f64, var: f64, p: f64, support: &[f64]) -> f64 {
        let lik = |x: f64| (-(y - x) * (y - x) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let m = support.len() as f64;
        let mut num = 0.0;
        let mut den = (1.0 - p) * lik(0.0);
        for &s in support {
            num += s * p / m * lik(s);
            den += p / m * lik(s);
        }
        num / den
    }

    #[test]
    fn mmse_discrete_examples() {
        let pm1 = SparseSignalPrior::finite_discrete(0.5, vec![-1.0, 1.0]).unwrap();
        assert_eq!(eta_mmse_discrete(0.0, 0.3, &pm1).unwrap(), 0.0);
        let got = eta_mmse_discrete(0.7, 0.25, &pm1).unwrap();
        assert_relative_eq!(got, summation_posterior_mean(0.7, 0.25, 0.5, &[-1.0, 1.0]), max_relative = 1e-12);

        let single = SparseSignalPrior::finite_discrete(1.0, vec![2.5]).unwrap();
        assert_eq!(eta_mmse_discrete(-0.4, 0.1, &single).unwrap(), 2.5);
        let near_one = SparseSignalPrior::finite_discrete(1.0 - 1e-12, vec![2.5]).unwrap();
        assert_relative_eq!(eta_mmse_discrete(0.3, 0.5, &near_one).unwrap(), 2.5, max_relative = 1e-9);

        let skew = SparseSignalPrior::finite_discrete(0.2, vec![-1.0, 0.5, 3.0]).unwrap();
        for y in [-2.0, -0.1, 0.4, 1.9, 3.3] {
            assert_relative_eq!(
                eta_mmse_discrete(y, 0.4, &skew).unwrap(),
                summation_posterior_mean(y, 0.4, 0.2, &[-1.0, 0.5, 3.0]),
                max_relative = 1e-12
            );
        }
        assert!(eta_mmse_discrete(0.0, 1.0, &bg(0.1, 1.0)).is_err());
    }

    #[test]
    fn prior_validation() {
        assert!(SparseSignalPrior::bernoulli_gaussian(0.0, 1.0).is_err());
        assert!(SparseSignalPrior::bernoulli_gaussian(1.2, 1.0).is_err());
        assert!(SparseSignalPrior::bernoulli_gaussian(0.5, 0.0).is_err());
        assert!(SparseSignalPrior::<f64>::finite_discrete(0.5, vec![]).is_err());
        assert!(SparseSignalPrior::finite_discrete(0.5, vec![1.0, -1.0, 1.0]).is_err());
        assert!(ScalarChannel::new(-1.0).is_err());
        assert!(ScalarChannel::new(0.0).unwrap().shrinkage_var().is_err());
    }

    #[test]
    fn sample_signal_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;

        let x = sample_signal(&bg(1.0, 1.0), n, &mut rng).unwrap();
        assert_eq!(x.iter().filter(|v| **v == 0.0).count(), 0);
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        // standard error of the second moment of N(0,1) is sqrt(2/n)
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());

        let x = sample_signal(&bg(0.1, 1.0), n, &mut rng).unwrap();
        let frac = x.iter().filter(|v| **v != 0.0).count() as f64 / n as f64;
        assert!((frac - 0.1).abs() < 1e-3, "{frac}");
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((m2 - 0.1).abs() < 3.0 * (0.1f64 * 3.0 - 0.01).sqrt() / (n as f64).sqrt(), "{m2}");

        let pm1 = SparseSignalPrior::<f64>::finite_discrete(0.5, vec![-1.0, 1.0]).unwrap();
        let x = sample_signal(&pm1, n, &mut rng).unwrap();
        assert!(x.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        assert!(x.mean().unwrap().abs() < 3.0 * (0.5 / n as f64).sqrt());

        assert!(sample_signal(&pm1, 0, &mut rng).is_err());
    }

    #[test]
    fn sample_signal_reproducible() {
        let prior = bg(0.1, 1.0);
        let a = sample_signal(&prior, 1000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_signal(&prior, 1000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn calibration_examples() {
        // tr(A^T A) = M with p * alpha2 = 1 at 0 dB gives unit noise.
        let a = Array2::from_shape_fn((4, 9), |(i, j)| if j == i { 1.0 } else { 0.0 });
        let prior = bg(1.0, 1.0);
        assert_relative_eq!(calibrate_noise_var(a.view(), &prior, 0.0).unwrap(), 1.0);
        let s0 = calibrate_noise_var(a.view(), &prior, 17.0).unwrap();
        let s1 = calibrate_noise_var(a.view(), &prior, 17.0 + 10.0 * 2f64.log10()).unwrap();
        assert_relative_eq!(s0 / s1, 2.0, max_relative = 1e-12);
        assert!(calibrate_noise_var(a.view(), &prior, f64::INFINITY).is_err());
    }
}
