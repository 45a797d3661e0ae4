use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prior::{sample_signal, SparseSignalPrior};
use crate::recovery::{ratio_to_db, Recovery, Tista, TistaParams};
use crate::scalar::Real;
use crate::sensing::{observe, SensingSystem};

/// Trials are processed in blocks of this many columns.
pub const EVAL_CHUNK: usize = 250;

/// Averaged NMSE per iteration, `t = 0 ..= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseCurve {
    pub nmse_db: Vec<f64>,
    /// Fraction of trials that had diverged by iteration `t`.
    pub divergence_fraction: Vec<f64>,
    pub trials: usize,
}

impl NmseCurve {
    pub fn iterations(&self) -> usize {
        self.nmse_db.len() - 1
    }

    pub fn final_divergence(&self) -> f64 {
        *self.divergence_fraction.last().unwrap_or(&0.0)
    }
}

/// RNG of one evaluation trial; independent of how trials are scheduled.
pub fn trial_rng(eval_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
    rng.set_stream(trial);
    rng
}

/// Per-iteration sums of `||s_t - x||^2 / ||x||^2` over the surviving trials of one block.
struct BlockSums {
    ratio: Vec<f64>,
    survivors: usize,
    diverged_by: Vec<usize>,
}

fn run_block<S: Real>(
    system: &SensingSystem<S>,
    engine: &dyn Recovery<S>,
    prior: &SparseSignalPrior<S>,
    eval_seed: u64,
    trials: std::ops::Range<usize>,
) -> Result<BlockSums> {
    let (n, m, b) = (system.n(), system.m(), trials.len());
    let mut x = Array2::zeros((n, b));
    let mut y = Array2::zeros((m, b));
    for (col, trial) in trials.enumerate() {
        let mut rng = trial_rng(eval_seed, trial as u64);
        let xs = sample_signal(prior, n, &mut rng)?;
        let ys = observe(system, xs.view(), &mut rng)?;
        x.column_mut(col).assign(&xs);
        y.column_mut(col).assign(&ys);
    }
    let energy: Vec<f64> = x
        .axis_iter(Axis(1))
        .map(|c| c.iter().map(|v| v.as_f64().powi(2)).sum())
        .collect();

    let t_max = engine.iterations();
    let mut per = Array2::<f64>::zeros((t_max + 1, b));
    let outcome = engine.run_batch(system, y.view(), &mut |snap| {
        for (col, (sc, xc)) in snap.s.axis_iter(Axis(1)).zip(x.axis_iter(Axis(1))).enumerate() {
            let err: f64 = sc.iter().zip(xc).map(|(a, b)| (*a - *b).as_f64().powi(2)).sum();
            per[[snap.t, col]] = if energy[col] > 0.0 { err / energy[col] } else if err == 0.0 { 0.0 } else { f64::INFINITY };
        }
    })?;

    let mut sums = BlockSums {
        ratio: vec![0.0; t_max + 1],
        survivors: 0,
        diverged_by: vec![0; t_max + 1],
    };
    for (col, d) in outcome.diverged_at.iter().enumerate() {
        match d {
            Some(at) => sums.diverged_by[*at..].iter_mut().for_each(|c| *c += 1),
            None => {
                sums.survivors += 1;
                for t in 0..=t_max {
                    sums.ratio[t] += per[[t, col]];
                }
            }
        }
    }
    Ok(sums)
}

/// `10 log10` of the mean normalized error over `trials` fresh `(x, w)`
/// draws on the fixed `system`. Diverged trials are left out of the mean
/// and counted in `divergence_fraction`; the curve is NaN where no trial
/// survived.
pub fn evaluate_nmse<S: Real>(
    system: &SensingSystem<S>,
    engine: &dyn Recovery<S>,
    prior: &SparseSignalPrior<S>,
    trials: usize,
    eval_seed: u64,
) -> Result<NmseCurve> {
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let blocks: Vec<BlockSums> = (0..trials.div_ceil(EVAL_CHUNK))
        .into_par_iter()
        .map(|k| run_block(system, engine, prior, eval_seed, k * EVAL_CHUNK..((k + 1) * EVAL_CHUNK).min(trials)))
        .collect::<Result<_>>()?;

    let t_max = engine.iterations();
    let survivors: usize = blocks.iter().map(|b| b.survivors).sum();
    let nmse_db = (0..=t_max)
        .map(|t| {
            if survivors == 0 {
                return f64::NAN;
            }
            let mean = blocks.iter().map(|b| b.ratio[t]).sum::<f64>() / survivors as f64;
            ratio_to_db(mean)
        })
        .collect();
    let divergence_fraction = (0..=t_max)
        .map(|t| blocks.iter().map(|b| b.diverged_by[t]).sum::<usize>() as f64 / trials as f64)
        .collect();
    Ok(NmseCurve {
        nmse_db,
        divergence_fraction,
        trials,
    })
}

/// NMSE of incrementally trained TISTA where the value at `t` comes from
/// the network of depth `t`, i.e. `history[t - 1]`.
pub fn evaluate_generations<S: Real>(
    system: &SensingSystem<S>,
    history: &[TistaParams<S>],
    prior: &SparseSignalPrior<S>,
    trials: usize,
    eval_seed: u64,
    epsilon: S,
) -> Result<NmseCurve> {
    let mut curve = NmseCurve {
        nmse_db: vec![0.0],
        divergence_fraction: vec![0.0],
        trials,
    };
    for (k, params) in history.iter().enumerate() {
        if params.rounds() != k + 1 {
            return Err(Error::config("history", format!("entry {k} has {} rounds, expected {}", params.rounds(), k + 1)));
        }
        let c = evaluate_nmse(system, &Tista::new(params, epsilon), prior, trials, eval_seed)?;
        curve.nmse_db[0] = c.nmse_db[0];
        curve.nmse_db.push(c.nmse_db[k + 1]);
        curve.divergence_fraction.push(c.divergence_fraction[k + 1]);
    }
    Ok(curve)
}
