use ndarray::{linalg::general_mat_mul, Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::prior::{BgChannel, BgDenoiser, SparseSignalPrior};
use crate::recovery::{tau2_slope, tista_layer, TistaLayer, TistaParams};
use crate::scalar::Real;
use crate::sensing::{center_columns, observe_batch, SensingSystem};

/// Training samples as columns: `x` is N x B, `y` is M x B.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<S> {
    pub x: Array2<S>,
    pub y: Array2<S>,
}

impl<S: Real> Batch<S> {
    pub fn new(x: Array2<S>, y: Array2<S>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::Shape(format!("{} signals but {} observations", x.ncols(), y.ncols())));
        }
        if x.ncols() == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        Ok(Self { x, y })
    }

    /// Fresh pairs `(x, A x + w)` with `x` drawn from `prior`.
    pub fn sample<R: Rng + ?Sized>(
        system: &SensingSystem<S>,
        prior: &SparseSignalPrior<S>,
        size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let x = Array2::from_shape_simple_fn((system.n(), size), || prior.sample_entry(rng));
        let y = observe_batch(system, x.view(), rng)?;
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Forward pass of the first `t` rounds with every intermediate retained.
pub struct GradientTape<S> {
    layers: Vec<TistaLayer<S>>,
    output: Array2<S>,
    gammas: Vec<S>,
    train_prior: bool,
    denoiser: BgDenoiser<S>,
    epsilon: S,
}

impl<S: Real> GradientTape<S> {
    pub fn record(
        system: &SensingSystem<S>,
        batch: &Batch<S>,
        params: &TistaParams<S>,
        generation: usize,
        epsilon: S,
    ) -> Result<Self> {
        if generation > params.rounds() {
            return Err(Error::config(
                "generation",
                format!("generation {generation} exceeds the {} available rounds", params.rounds()),
            ));
        }
        if batch.x.nrows() != system.n() || batch.y.nrows() != system.m() {
            return Err(Error::Shape("batch does not match the sensing system".into()));
        }
        let denoiser = params.denoiser();
        let mut s = Array2::zeros(batch.x.raw_dim());
        let mut layers = Vec::with_capacity(generation);
        for &gamma in &params.gammas[..generation] {
            let (layer, next) = tista_layer(system, batch.y.view(), &s, gamma, &denoiser, epsilon);
            layers.push(layer);
            s = next;
        }
        Ok(Self {
            layers,
            output: s,
            gammas: params.gammas[..generation].to_vec(),
            train_prior: params.train_prior,
            denoiser,
            epsilon,
        })
    }

    pub fn output(&self) -> &Array2<S> {
        &self.output
    }

    /// Number of trainable scalars at this depth.
    pub fn gradient_len(&self) -> usize {
        self.gammas.len() + if self.train_prior { 2 } else { 0 }
    }

    /// Batch mean of `||s_t - x||^2`.
    pub fn loss(&self, x: &Array2<S>) -> S {
        let sum = self
            .output
            .iter()
            .zip(x)
            .fold(S::zero(), |acc, (&s, &v)| acc + (s - v) * (s - v));
        sum / S::lit(x.ncols() as f64)
    }

    /// Loss and its gradient, ordered `gamma_0 .. gamma_{t-1}` then
    /// `alpha2, p` when the prior is trained.
    pub fn backward(&self, system: &SensingSystem<S>, x: &Array2<S>) -> (S, Vec<S>) {
        let loss = self.loss(x);
        let mut grads = vec![S::zero(); self.gradient_len()];
        let depth = self.layers.len();
        if depth == 0 {
            return (loss, grads);
        }
        let two = S::lit(2.0);
        let bsz = x.ncols();
        let m = S::lit(system.m() as f64);
        let n = S::lit(system.n() as f64);
        let denoiser = self.denoiser;
        let (mut d_alpha2, mut d_p) = (S::zero(), S::zero());

        let mut g = &self.output - x;
        g.mapv_inplace(|v| v * two / S::lit(bsz as f64));

        for (t, layer) in self.layers.iter().enumerate().rev() {
            let gamma = self.gammas[t];
            let chans: Vec<BgChannel<S>> = layer.tau2.iter().map(|&v| denoiser.at(v)).collect();
            let mut d_r = Array2::zeros(layer.r.raw_dim());
            let mut d_tau2 = vec![S::zero(); bsz];
            for ((mut drow, rrow), grow) in d_r
                .axis_iter_mut(Axis(0))
                .zip(layer.r.axis_iter(Axis(0)))
                .zip(g.axis_iter(Axis(0)))
            {
                for (b, ((dr, &rv), &gv)) in drow.iter_mut().zip(rrow).zip(grow).enumerate() {
                    let pt = chans[b].partials(rv);
                    *dr = gv * pt.dy;
                    d_tau2[b] += gv * pt.dvar;
                    d_alpha2 += gv * pt.dalpha2;
                    d_p += gv * pt.dp;
                }
            }

            let slope = tau2_slope(system, gamma);
            let dslope = (two * gamma - two) * m / n;
            let dnoise = two * gamma * system.noise_var() * system.tr_wwt() / n;
            let mut d_gamma = sum_of_products(&d_r, &layer.wc);
            let d_v2: Array1<S> = (0..bsz)
                .map(|b| {
                    d_gamma += d_tau2[b] * (layer.v2[b] * dslope + dnoise);
                    d_tau2[b] * slope
                })
                .collect();
            grads[t] = d_gamma;
            if t == 0 {
                break;
            }

            // r = s + gamma W c and v2 = (||c||^2 - M sigma^2) / tr(A^T A), c = P(y - A s).
            let mut d_c = Array2::zeros(layer.c.raw_dim());
            general_mat_mul(gamma, &system.w().t(), &d_r, S::zero(), &mut d_c);
            let scale = two / system.tr_ata();
            for (b, (mut dcol, ccol)) in d_c.axis_iter_mut(Axis(1)).zip(layer.c.axis_iter(Axis(1))).enumerate() {
                if layer.v2_raw[b] > self.epsilon {
                    let k = scale * d_v2[b];
                    dcol.zip_mut_with(&ccol, |d, &c| *d += k * c);
                }
            }
            if system.centers_residual() {
                center_columns(&mut d_c);
            }
            general_mat_mul(-S::one(), &system.a().t(), &d_c, S::one(), &mut d_r);
            g = d_r;
        }
        if self.train_prior {
            let k = self.gammas.len();
            grads[k] = d_alpha2;
            grads[k + 1] = d_p;
        }
        (loss, grads)
    }
}

fn sum_of_products<S: Real>(a: &Array2<S>, b: &Array2<S>) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&u, &v)| acc + u * v)
}

/// Batch-mean squared error after `generation` rounds and its exact
/// gradient with respect to the trainable scalars of that depth.
pub fn loss_and_gradient<S: Real>(
    system: &SensingSystem<S>,
    batch: &Batch<S>,
    params: &TistaParams<S>,
    generation: usize,
    epsilon: S,
) -> Result<(S, Vec<S>)> {
    let tape = GradientTape::record(system, batch, params, generation, epsilon)?;
    let (loss, grads) = tape.backward(system, &batch.x);
    if !loss.is_finite() {
        return Err(Error::TrainingDivergence { generation });
    }
    Ok((loss, grads))
}
