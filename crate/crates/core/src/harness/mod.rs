//! Experiment orchestration: configuration, multi-trial NMSE evaluation
//! and CSV result tables.

mod config;
mod eval;
mod run;
mod table;

pub use config::{parse_algorithms, Algorithm, EnsembleName, ExperimentConfig, Precision, Snr, SweepKey};
pub use eval::{evaluate_generations, evaluate_nmse, trial_rng, NmseCurve, EVAL_CHUNK};
pub use run::{build_matrix, noise_var_for, run_experiment, run_sweep, system_for, train_algorithm, ExperimentResult};
pub use table::{emit_csv, read_csv, round_sig, ResultRow, ResultTable, CSV_HEADER};
