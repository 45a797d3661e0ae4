//! Gradient descent with per-iteration trainable step sizes on the
//! quadratic `f(x1, x2) = x1^2 + 10 x2^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::adam::Adam;
use super::incremental::GenerationLog;

/// Diagonal of the Hessian of the objective.
pub const TGD_CURVATURE: [f64; 2] = [2.0, 20.0];

#[derive(Debug, Clone, PartialEq)]
pub struct TgdConfig {
    pub generations: usize,
    pub minibatch_size: usize,
    pub batches_per_generation: usize,
    pub learning_rate: f64,
    /// Step size given to a freshly appended iteration.
    pub initial_gamma: f64,
    /// Starting points are uniform on `[-start_range, start_range]^2`.
    pub start_range: f64,
    pub seed: u64,
}

impl Default for TgdConfig {
    fn default() -> Self {
        Self {
            generations: 20,
            minibatch_size: 50,
            batches_per_generation: 500,
            learning_rate: 1e-3,
            initial_gamma: 1.0 / TGD_CURVATURE[1],
            start_range: 10.0,
            seed: 0,
        }
    }
}

impl TgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.generations == 0 || self.minibatch_size == 0 || self.batches_per_generation == 0 {
            return Err(Error::config("tgd", "generation, batch and mini-batch counts must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !(self.start_range > 0.0) || !self.initial_gamma.is_finite() {
            return Err(Error::config("tgd", "learning rate and start range must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TgdOutcome {
    pub gammas: Vec<f64>,
    pub log: Vec<GenerationLog>,
}

#[inline]
pub fn gd_step(s: [f64; 2], gamma: f64) -> [f64; 2] {
    [s[0] * (1.0 - gamma * TGD_CURVATURE[0]), s[1] * (1.0 - gamma * TGD_CURVATURE[1])]
}

/// Search points `s_0 .. s_T` from `start`.
pub fn gd_trajectory(gammas: &[f64], start: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(gammas.len() + 1);
    out.push(start);
    for &g in gammas {
        let s = gd_step(*out.last().unwrap(), g);
        out.push(s);
    }
    out
}

fn sample_start<R: Rng + ?Sized>(range: f64, rng: &mut R) -> [f64; 2] {
    [rng.random_range(-range..=range), rng.random_range(-range..=range)]
}

/// Mean of `||s_t||^2` over the batch and its gradient in `gammas`.
fn loss_and_gradient(starts: &[[f64; 2]], gammas: &[f64]) -> (f64, Vec<f64>) {
    let b = starts.len() as f64;
    let mut grads = vec![0.0; gammas.len()];
    let mut loss = 0.0;
    let mut path = Vec::with_capacity(gammas.len() + 1);
    for &start in starts {
        path.clear();
        path.push(start);
        for &g in gammas {
            path.push(gd_step(*path.last().unwrap(), g));
        }
        let end = path[gammas.len()];
        loss += (end[0] * end[0] + end[1] * end[1]) / b;
        let mut adj = [2.0 * end[0] / b, 2.0 * end[1] / b];
        for k in (0..gammas.len()).rev() {
            let s = path[k];
            grads[k] -= adj[0] * TGD_CURVATURE[0] * s[0] + adj[1] * TGD_CURVATURE[1] * s[1];
            adj = [adj[0] * (1.0 - gammas[k] * TGD_CURVATURE[0]), adj[1] * (1.0 - gammas[k] * TGD_CURVATURE[1])];
        }
    }
    (loss, grads)
}

/// Incremental training of the step sizes with Adam.
pub fn tgd_train(config: &TgdConfig) -> Result<TgdOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut gammas = Vec::with_capacity(config.generations);
    let mut log = Vec::with_capacity(config.generations);
    let mut starts = vec![[0.0; 2]; config.minibatch_size];
    for generation in 1..=config.generations {
        gammas.push(config.initial_gamma);
        let mut adam = Adam::new(gammas.len());
        let (mut last, mut total) = (0.0, 0.0);
        for _ in 0..config.batches_per_generation {
            for s in &mut starts {
                *s = sample_start(config.start_range, &mut rng);
            }
            let (loss, grads) = loss_and_gradient(&starts, &gammas);
            if !loss.is_finite() {
                return Err(Error::TrainingDivergence { generation });
            }
            adam.step(&mut gammas, &grads, config.learning_rate)?;
            last = loss;
            total += loss;
        }
        log.push(GenerationLog {
            generation,
            learning_rate: config.learning_rate,
            final_loss: last,
            mean_loss: total / config.batches_per_generation as f64,
        });
    }
    Ok(TgdOutcome { gammas, log })
}

/// `log10` of the mean of `||s_t - s*||^2` over `trials` random starts, for
/// `t = 0 ..= gammas.len()`.
pub fn tgd_error_curve(gammas: &[f64], trials: usize, start_range: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; gammas.len() + 1];
    for _ in 0..trials {
        let start = sample_start(start_range, &mut rng);
        for (acc, s) in sums.iter_mut().zip(gd_trajectory(gammas, start)) {
            *acc += s[0] * s[0] + s[1] * s[1];
        }
    }
    sums.into_iter().map(|v| (v / trials as f64).log10()).collect()
}
