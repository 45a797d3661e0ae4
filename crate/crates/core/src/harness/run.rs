use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prior::{calibrate_noise_var, BgDenoiser, SparseSignalPrior};
use crate::recovery::{Amp, Ista, Oamp, Recovery};
use crate::sensing::{build_front_end, generate_matrix, mean_removed_system, FrontEnd, SensingSystem};
use crate::train::{incremental_train, TrainOutcome};

use super::config::{Algorithm, ExperimentConfig, Precision, Snr, SweepKey};
use super::eval::{evaluate_generations, evaluate_nmse, NmseCurve};
use super::table::{ResultRow, ResultTable};

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub table: ResultTable,
    pub trained: Vec<(Algorithm, TrainOutcome<f64>)>,
}

/// The realized sensing matrix for `config.matrix_seed`.
pub fn build_matrix(config: &ExperimentConfig) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.matrix_seed);
    generate_matrix(&config.ensemble_spec()?, &mut rng)
}

pub fn noise_var_for(config: &ExperimentConfig, a: &Array2<f64>) -> Result<f64> {
    match config.snr_db {
        Snr::Db(db) => calibrate_noise_var(a.view(), &config.prior()?, db),
        Snr::Noiseless => Ok(0.0),
    }
}

/// Linear front end used by `algorithm` on the matrix `a`.
pub fn system_for(config: &ExperimentConfig, algorithm: Algorithm, a: &Array2<f64>) -> Result<SensingSystem<f64>> {
    let noise_var = noise_var_for(config, a)?;
    let sys = match algorithm {
        Algorithm::TistaMr => mean_removed_system(a, config.mr_offset)?,
        Algorithm::TistaLmmse => build_front_end(a.clone(), FrontEnd::RegularizedInverse(config.beta_reg))?,
        Algorithm::Ista | Algorithm::Amp => build_front_end(a.clone(), FrontEnd::Transpose)?,
        Algorithm::Oamp | Algorithm::Tista => build_front_end(a.clone(), FrontEnd::PseudoInverse)?,
    };
    sys.with_noise_var(noise_var)
}

/// Incremental training of a trainable algorithm in the configured precision.
pub fn train_algorithm(
    config: &ExperimentConfig,
    system: &SensingSystem<f64>,
    prior: &SparseSignalPrior<f64>,
) -> Result<TrainOutcome<f64>> {
    let train = config.train_config();
    match config.train_precision {
        Precision::F64 => incremental_train(system, prior, &train),
        Precision::F32 => {
            let out = incremental_train(&system.cast::<f32>(), &prior.cast::<f32>(), &train)?;
            Ok(TrainOutcome {
                params: out.params.cast(),
                history: out.history.iter().map(|p| p.cast()).collect(),
                log: out.log,
            })
        }
    }
}

fn fixed_engine(config: &ExperimentConfig, algorithm: Algorithm, system: &SensingSystem<f64>) -> Result<Box<dyn Recovery<f64>>> {
    let t = config.iterations;
    Ok(match algorithm {
        Algorithm::Ista => Box::new(Ista::with_default_step(system, config.ista_threshold, t)),
        Algorithm::Amp => Box::new(Amp {
            theta: config.amp_theta,
            iterations: t,
        }),
        Algorithm::Oamp => Box::new(Oamp::new(BgDenoiser::new(config.alpha2, config.p)?, t, config.epsilon)),
        _ => unreachable!("trainable algorithms are evaluated per generation"),
    })
}

/// Generates the matrix, trains what needs training and evaluates every
/// requested algorithm on the same trial draws.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let a = build_matrix(config)?;
    let prior = config.prior()?;
    let mut table = ResultTable::default();
    let mut trained = Vec::new();
    for &alg in &config.algorithms {
        let start = Instant::now();
        let system = system_for(config, alg, &a)?;
        let curve: NmseCurve = if alg.trainable() {
            let out = train_algorithm(config, &system, &prior)?;
            let curve = evaluate_generations(&system, &out.history, &prior, config.trials, config.eval_seed, config.epsilon)?;
            trained.push((alg, out));
            curve
        } else {
            let engine = fixed_engine(config, alg, &system)?;
            evaluate_nmse(&system, engine.as_ref(), &prior, config.trials, config.eval_seed)?
        };
        let wallclock = if config.record_timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        for (t, (&db, &div)) in curve.nmse_db.iter().zip(&curve.divergence_fraction).enumerate() {
            table.rows.push(ResultRow::new(alg.name(), t, db, div, wallclock));
        }
    }
    Ok(ExperimentResult { table, trained })
}

/// Repeats the experiment over `sweep_values` of `sweep_key`; rows are
/// labelled `<algorithm>@<key>=<value>`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ResultTable> {
    let key = config
        .sweep_key
        .ok_or_else(|| Error::config("sweep_key", "no sweep key given"))?;
    let mut table = ResultTable::default();
    for &v in &config.sweep_values {
        let mut cfg = config.clone();
        let label = match key {
            SweepKey::SnrDb => {
                cfg.snr_db = Snr::Db(v);
                "snr_db"
            }
            SweepKey::Kappa => {
                cfg.kappa = v;
                "kappa"
            }
        };
        for mut row in run_experiment(&cfg)?.table.rows {
            row.algorithm = format!("{}@{label}={v}", row.algorithm);
            table.rows.push(row);
        }
    }
    Ok(table)
}
