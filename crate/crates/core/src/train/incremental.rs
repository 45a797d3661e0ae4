use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prior::{BgDenoiser, SparseSignalPrior};
use crate::recovery::{TistaParams, DEFAULT_EPSILON};
use crate::scalar::Real;
use crate::sensing::SensingSystem;

use super::adam::Adam;
use super::tape::{loss_and_gradient, Batch, GradientTape};

/// Smallest admissible trained `alpha2`, and distance of a trained `p` from 0 and 1.
const PRIOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub minibatch_size: usize,
    /// Mini-batches per generation.
    pub batches_per_generation: usize,
    /// Number of generations, which is also the depth of the trained network.
    pub max_generation: usize,
    pub lr_early: f64,
    /// Last generation trained with `lr_early`.
    pub lr_switch: usize,
    pub lr_late: f64,
    pub train_alpha_p: bool,
    pub seed: u64,
    /// Step size given to a freshly appended round.
    pub initial_gamma: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            minibatch_size: 1000,
            batches_per_generation: 200,
            max_generation: 12,
            lr_early: 4e-2,
            lr_switch: 10,
            lr_late: 8e-4,
            train_alpha_p: false,
            seed: 0,
            initial_gamma: 1.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch_size == 0 {
            return Err(Error::config("minibatch_size", "must be at least 1"));
        }
        if self.batches_per_generation == 0 {
            return Err(Error::config("batches_per_generation", "must be at least 1"));
        }
        if self.max_generation == 0 {
            return Err(Error::config("max_generation", "must be at least 1"));
        }
        for (field, lr) in [("lr_early", self.lr_early), ("lr_late", self.lr_late)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::config(field, format!("learning rate must be positive, got {lr}")));
            }
        }
        if !self.initial_gamma.is_finite() {
            return Err(Error::config("initial_gamma", "must be finite"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        Ok(())
    }

    /// Learning rate of generation `t` (1-based).
    pub fn learning_rate(&self, generation: usize) -> f64 {
        if generation <= self.lr_switch {
            self.lr_early
        } else {
            self.lr_late
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub learning_rate: f64,
    /// Loss of the last mini-batch of the generation.
    pub final_loss: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub params: TistaParams<S>,
    /// Parameters at the end of each generation; entry `t - 1` has `t` rounds.
    pub history: Vec<TistaParams<S>>,
    pub log: Vec<GenerationLog>,
}

/// Incremental training on freshly sampled pairs `(x, A x + w)`, starting
/// from the prior's own `(alpha2, p)`.
pub fn incremental_train<S: Real>(
    system: &SensingSystem<S>,
    prior: &SparseSignalPrior<S>,
    config: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    let init = BgDenoiser::from_prior(prior)?;
    incremental_train_with(system, init, config, &mut |_, _, rng| {
        Batch::sample(system, prior, config.minibatch_size, rng)
    })
}

/// Incremental training with a caller-supplied batch source, called as
/// `next_batch(generation, index, rng)`.
pub fn incremental_train_with<S: Real>(
    system: &SensingSystem<S>,
    init: BgDenoiser<S>,
    config: &TrainConfig,
    next_batch: &mut dyn FnMut(usize, usize, &mut ChaCha8Rng) -> Result<Batch<S>>,
) -> Result<TrainOutcome<S>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let epsilon = S::lit(config.epsilon);
    let mut params = TistaParams {
        gammas: Vec::with_capacity(config.max_generation),
        alpha2: init.alpha2,
        p: init.p,
        train_prior: config.train_alpha_p,
    };
    let mut history = Vec::with_capacity(config.max_generation);
    let mut log = Vec::with_capacity(config.max_generation);

    for generation in 1..=config.max_generation {
        params.gammas.push(S::lit(config.initial_gamma));
        let lr = config.learning_rate(generation);
        let mut adam = Adam::new(params.trainable_count());
        let mut flat = flatten(&params);
        let (mut last, mut total) = (0.0, 0.0);
        for index in 0..config.batches_per_generation {
            let batch = next_batch(generation, index, &mut rng)?;
            let (loss, grads) = loss_and_gradient(system, &batch, &params, generation, epsilon)?;
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDivergence { generation });
            }
            adam.step(&mut flat, &grads, S::lit(lr))?;
            unflatten(&flat, &mut params);
            last = loss.as_f64();
            total += last;
        }
        log.push(GenerationLog {
            generation,
            learning_rate: lr,
            final_loss: last,
            mean_loss: total / config.batches_per_generation as f64,
        });
        history.push(params.clone());
    }
    Ok(TrainOutcome { params, history, log })
}

fn flatten<S: Real>(params: &TistaParams<S>) -> Vec<S> {
    let mut flat = params.gammas.clone();
    if params.train_prior {
        flat.push(params.alpha2);
        flat.push(params.p);
    }
    flat
}

fn unflatten<S: Real>(flat: &[S], params: &mut TistaParams<S>) {
    let t = params.gammas.len();
    params.gammas.copy_from_slice(&flat[..t]);
    if params.train_prior {
        let floor = S::lit(PRIOR_FLOOR);
        params.alpha2 = flat[t].max(floor);
        params.p = flat[t + 1].max(floor).min(S::one() - floor);
    }
}

/// Mean loss after `depth` rounds on one batch, with its standard error.
pub fn batch_loss<S: Real>(
    system: &SensingSystem<S>,
    batch: &Batch<S>,
    params: &TistaParams<S>,
    depth: usize,
) -> Result<(f64, f64)> {
    let tape = GradientTape::record(system, batch, params, depth, S::lit(DEFAULT_EPSILON))?;
    let per: Vec<f64> = tape
        .output()
        .columns()
        .into_iter()
        .zip(batch.x.columns())
        .map(|(s, x)| s.iter().zip(x).map(|(&a, &b)| (a - b).as_f64().powi(2)).sum())
        .collect();
    let n = per.len() as f64;
    let mean = per.iter().sum::<f64>() / n;
    let var = per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}
