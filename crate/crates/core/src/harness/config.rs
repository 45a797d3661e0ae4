use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::SparseSignalPrior;
use crate::recovery::DEFAULT_EPSILON;
use crate::sensing::{EnsembleKind, EnsembleSpec, DEFAULT_BETA};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ista,
    Amp,
    Oamp,
    Tista,
    TistaMr,
    TistaLmmse,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Ista,
        Algorithm::Amp,
        Algorithm::Oamp,
        Algorithm::Tista,
        Algorithm::TistaMr,
        Algorithm::TistaLmmse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ista => "ista",
            Algorithm::Amp => "amp",
            Algorithm::Oamp => "oamp",
            Algorithm::Tista => "tista",
            Algorithm::TistaMr => "tista_mr",
            Algorithm::TistaLmmse => "tista_lmmse",
        }
    }

    pub fn trainable(self) -> bool {
        matches!(self, Algorithm::Tista | Algorithm::TistaMr | Algorithm::TistaLmmse)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::config("algorithms", format!("unknown algorithm `{s}`")))
    }
}

/// Comma-separated algorithm list, e.g. `tista,amp`.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleName {
    Gaussian,
    Binary,
    Conditioned,
}

/// Signal-to-noise ratio in dB, or no noise at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SnrRepr", into = "SnrRepr")]
pub enum Snr {
    Db(f64),
    Noiseless,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SnrRepr {
    Db(f64),
    Word(String),
}

impl TryFrom<SnrRepr> for Snr {
    type Error = String;

    fn try_from(r: SnrRepr) -> std::result::Result<Self, String> {
        match r {
            SnrRepr::Db(v) => Ok(Snr::Db(v)),
            SnrRepr::Word(w) if w == "noiseless" => Ok(Snr::Noiseless),
            SnrRepr::Word(w) => Err(format!("expected a number or \"noiseless\", got \"{w}\"")),
        }
    }
}

impl From<Snr> for SnrRepr {
    fn from(s: Snr) -> Self {
        match s {
            Snr::Db(v) => SnrRepr::Db(v),
            Snr::Noiseless => SnrRepr::Word("noiseless".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKey {
    SnrDb,
    Kappa,
}

/// One experiment, read from a flat TOML table. Every key is optional and
/// defaults to the Gaussian `N(0, 1/M)`, N = 500, M = 250, 40 dB setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleName,
    pub m: usize,
    pub n: usize,
    pub mean: f64,
    /// Entry variance of the Gaussian ensemble; `1 / M` when absent.
    pub variance: Option<f64>,
    pub kappa: f64,
    pub snr_db: Snr,
    pub iterations: usize,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub p: f64,
    pub alpha2: f64,
    pub amp_theta: f64,
    pub ista_threshold: f64,
    pub beta_reg: f64,
    /// Offset removed by `tista_mr`; the empirical entry mean when absent.
    pub mr_offset: Option<f64>,
    pub epsilon: f64,
    pub minibatch_size: usize,
    pub batches_per_generation: usize,
    pub lr_early: f64,
    pub lr_switch: usize,
    pub lr_late: f64,
    pub train_alpha_p: bool,
    pub initial_gamma: f64,
    pub train_precision: Precision,
    pub matrix_seed: u64,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub record_timing: bool,
    pub sweep_key: Option<SweepKey>,
    pub sweep_values: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            ensemble: EnsembleName::Gaussian,
            m: 250,
            n: 500,
            mean: 0.0,
            variance: None,
            kappa: 1.0,
            snr_db: Snr::Db(40.0),
            iterations: 12,
            algorithms: vec![Algorithm::Tista, Algorithm::Amp, Algorithm::Oamp],
            trials: 1000,
            p: 0.1,
            alpha2: 1.0,
            amp_theta: 1.14,
            ista_threshold: 0.01,
            beta_reg: DEFAULT_BETA,
            mr_offset: None,
            epsilon: DEFAULT_EPSILON,
            minibatch_size: train.minibatch_size,
            batches_per_generation: train.batches_per_generation,
            lr_early: train.lr_early,
            lr_switch: train.lr_switch,
            lr_late: train.lr_late,
            train_alpha_p: true,
            initial_gamma: train.initial_gamma,
            train_precision: Precision::F64,
            matrix_seed: 0,
            train_seed: 1,
            eval_seed: 2,
            record_timing: false,
            sweep_key: None,
            sweep_values: Vec::new(),
        }
    }
}

/// Key of the `key = value` line containing byte `offset`.
fn key_at(text: &str, offset: usize) -> String {
    let start = text[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("");
    line.split('=').next().unwrap_or("").trim().to_string()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| key_at(text, s.start)).unwrap_or_else(|| "config".into());
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Matrix, training and evaluation seeds `s, s + 1, s + 2`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.matrix_seed = seed;
        self.train_seed = seed.wrapping_add(1);
        self.eval_seed = seed.wrapping_add(2);
        self
    }

    pub fn seeds(&self) -> (u64, u64, u64) {
        (self.matrix_seed, self.train_seed, self.eval_seed)
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let kind = match self.ensemble {
            EnsembleName::Gaussian => EnsembleKind::GaussianIid {
                mean: self.mean,
                variance: self.variance.unwrap_or(1.0 / self.m as f64),
            },
            EnsembleName::Binary => EnsembleKind::BinaryPm1,
            EnsembleName::Conditioned => EnsembleKind::ConditionedSvd { kappa: self.kappa },
        };
        EnsembleSpec::new(kind, self.m, self.n).map_err(|e| Error::config("ensemble", e.to_string()))
    }

    pub fn prior(&self) -> Result<SparseSignalPrior<f64>> {
        SparseSignalPrior::bernoulli_gaussian(self.p, self.alpha2).map_err(|e| Error::config("p/alpha2", e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            minibatch_size: self.minibatch_size,
            batches_per_generation: self.batches_per_generation,
            max_generation: self.iterations,
            lr_early: self.lr_early,
            lr_switch: self.lr_switch,
            lr_late: self.lr_late,
            train_alpha_p: self.train_alpha_p,
            seed: self.train_seed,
            initial_gamma: self.initial_gamma,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "list is empty"));
        }
        if self.m == 0 || self.n == 0 {
            return Err(Error::config("m/n", "dimensions must be positive"));
        }
        if let Snr::Db(v) = self.snr_db {
            if !v.is_finite() {
                return Err(Error::config("snr_db", format!("must be finite, got {v}")));
            }
        }
        for (field, v) in [("amp_theta", self.amp_theta), ("ista_threshold", self.ista_threshold), ("epsilon", self.epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if self.algorithms.contains(&Algorithm::TistaLmmse) && !(self.beta_reg > 0.0) {
            return Err(Error::config("beta_reg", "must be positive"));
        }
        if self.sweep_key.is_some() && self.sweep_values.is_empty() {
            return Err(Error::config("sweep_values", "a sweep needs at least one value"));
        }
        self.ensemble_spec()?;
        self.prior()?;
        if self.algorithms.iter().any(|a| a.trainable()) {
            self.train_config().validate()?;
        }
        Ok(())
    }
}
