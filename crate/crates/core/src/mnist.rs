//! IDX image files and the handwritten-digit recovery experiment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{s, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::{trial_rng, Precision};
use crate::prior::BgDenoiser;
use crate::recovery::{Oamp, Recovery, Tista, TistaParams, DEFAULT_EPSILON};
use crate::scalar::Real;
use crate::sensing::{build_front_end, generate_matrix, observe_batch, EnsembleSpec, FrontEnd, SensingSystem};
use crate::train::{incremental_train_with, Batch, TrainConfig, TrainOutcome};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
const HEADER_LEN: usize = 16;

/// Images as columns of a 784 x count matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub pixels: Array2<f64>,
}

impl ImageDataset {
    pub fn count(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn image(&self, i: usize) -> ArrayView1<'_, f64> {
        self.pixels.column(i)
    }

    /// The first `count` images.
    pub fn head(&self, count: usize) -> ImageDataset {
        ImageDataset {
            pixels: self.pixels.slice(s![.., ..count.min(self.count())]).to_owned(),
        }
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse {
            offset: bytes.len(),
            reason: "file ends inside the header".into(),
        })
}

/// Parses an IDX3 image file of 28 x 28 unsigned-byte images.
pub fn parse_idx(bytes: &[u8]) -> Result<ImageDataset> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            reason: format!("bad magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    for (offset, dim) in [(8, be_u32(bytes, 8)?), (12, be_u32(bytes, 12)?)] {
        if dim as usize != IMAGE_SIDE {
            return Err(Error::Parse {
                offset,
                reason: format!("image dimension {dim}, expected {IMAGE_SIDE}"),
            });
        }
    }
    let payload = count
        .checked_mul(IMAGE_PIXELS)
        .ok_or_else(|| Error::Parse {
            offset: 4,
            reason: format!("image count {count} overflows"),
        })?;
    let end = HEADER_LEN + payload;
    if bytes.len() < end {
        return Err(Error::Parse {
            offset: bytes.len(),
            reason: format!("truncated payload: {} of {payload} pixel bytes", bytes.len() - HEADER_LEN),
        });
    }
    if bytes.len() > end {
        return Err(Error::Parse {
            offset: end,
            reason: format!("{} trailing bytes", bytes.len() - end),
        });
    }
    let raw = &bytes[HEADER_LEN..end];
    let pixels = Array2::from_shape_fn((IMAGE_PIXELS, count), |(p, i)| f64::from(raw[i * IMAGE_PIXELS + p]) / 255.0);
    Ok(ImageDataset { pixels })
}

pub fn load_idx(path: &Path) -> Result<ImageDataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}

/// IDX3 encoding of `dataset`, pixels rounded to bytes.
pub fn encode_idx(dataset: &ImageDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + dataset.pixels.len());
    for v in [IDX_IMAGE_MAGIC, dataset.count() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in dataset.pixels.axis_iter(Axis(1)) {
        out.extend(img.iter().map(|&v| pixel_byte(v)));
    }
    out
}

fn pixel_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary portable graymap of a 28 x 28 image, clamped to `[0, 1]`.
pub fn encode_pgm(image: ArrayView1<f64>) -> Result<Vec<u8>> {
    if image.len() != IMAGE_PIXELS {
        return Err(Error::Shape(format!("image has {} pixels, expected {IMAGE_PIXELS}", image.len())));
    }
    let mut out = format!("P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n").into_bytes();
    out.extend(image.iter().map(|&v| pixel_byte(v)));
    Ok(out)
}

pub fn write_pgm(path: &Path, image: ArrayView1<f64>) -> Result<()> {
    fs::write(path, encode_pgm(image)?).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistConfig {
    pub m: usize,
    pub noise_var: f64,
    pub generations: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    /// Starting `(alpha2, p)` for TISTA and the fixed prior of OAMP.
    pub init_alpha2: f64,
    pub init_p: f64,
    pub oamp_iterations: usize,
    pub test_count: usize,
    pub train_precision: Precision,
    pub matrix_seed: u64,
    pub train_seed: u64,
    pub eval_seed: u64,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self {
            m: IMAGE_PIXELS / 2,
            noise_var: 4e-4,
            generations: 8,
            minibatch_size: 200,
            learning_rate: 5e-3,
            init_alpha2: 1.0,
            init_p: 0.5,
            oamp_iterations: 100,
            test_count: 100,
            train_precision: Precision::F32,
            matrix_seed: 0,
            train_seed: 1,
            eval_seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub algorithm: String,
    pub iteration: usize,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct MnistResult {
    pub rows: Vec<MseRow>,
    pub tista: TrainOutcome<f64>,
    /// Final reconstructions, one column per test image.
    pub tista_images: Array2<f64>,
    pub oamp_images: Array2<f64>,
}

impl MnistResult {
    /// Per-pixel MSE of `algorithm` at `iteration`.
    pub fn mse(&self, algorithm: &str, iteration: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.iteration == iteration)
            .map(|r| r.mse)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,iteration,mse\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.algorithm, r.iteration, crate::harness::round_sig(r.mse));
        }
        out
    }
}

fn train_on_images<S: Real>(
    system: &SensingSystem<S>,
    images: &Array2<S>,
    config: &MnistConfig,
) -> Result<TrainOutcome<S>> {
    let count = images.ncols();
    let per_generation = count.div_ceil(config.minibatch_size);
    let train = TrainConfig {
        minibatch_size: config.minibatch_size,
        batches_per_generation: per_generation,
        max_generation: config.generations,
        lr_early: config.learning_rate,
        lr_switch: config.generations,
        lr_late: config.learning_rate,
        train_alpha_p: true,
        seed: config.train_seed,
        ..TrainConfig::default()
    };
    let init = BgDenoiser::new(S::lit(config.init_alpha2), S::lit(config.init_p))?;
    let mut order: Vec<usize> = (0..count).collect();
    incremental_train_with(system, init, &train, &mut |_, index, rng| {
        if index == 0 {
            order.shuffle(rng);
        }
        let lo = index * config.minibatch_size;
        let idx = &order[lo..(lo + config.minibatch_size).min(count)];
        let x = images.select(Axis(1), idx);
        let y = observe_batch(system, x.view(), rng)?;
        Batch::new(x, y)
    })
}

fn cast_outcome<S: Real>(out: TrainOutcome<S>) -> TrainOutcome<f64> {
    TrainOutcome {
        params: out.params.cast(),
        history: out.history.iter().map(TistaParams::cast).collect(),
        log: out.log,
    }
}

/// Per-pixel MSE `(1/N)||s_t - x||^2` averaged over the columns of `x`, for every `t`.
fn mse_curve(engine: &dyn Recovery<f64>, system: &SensingSystem<f64>, x: &Array2<f64>, y: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let mut curve = Vec::with_capacity(engine.iterations() + 1);
    let mut last = Array2::zeros(x.raw_dim());
    let denom = (x.len()) as f64;
    engine.run_batch(system, y.view(), &mut |snap| {
        let err: f64 = snap.s.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
        curve.push(err / denom);
        last.assign(snap.s);
    })?;
    Ok((curve, last))
}

/// Trains TISTA (step sizes and prior) on `train`, then recovers the first
/// `test_count` images of `test` with TISTA and with OAMP under the
/// untrained prior. Reconstructions are reported unclamped.
pub fn run_mnist_experiment(train: &ImageDataset, test: &ImageDataset, config: &MnistConfig) -> Result<MnistResult> {
    if train.count() == 0 || test.count() == 0 {
        return Err(Error::config("dataset", "training and test sets must be nonempty"));
    }
    if config.generations == 0 || config.minibatch_size == 0 || config.test_count == 0 {
        return Err(Error::config("mnist", "generations, mini-batch size and test count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.matrix_seed);
    let a = generate_matrix::<f64, _>(&EnsembleSpec::gaussian_scaled(config.m, IMAGE_PIXELS)?, &mut rng)?;
    let system = build_front_end(a, FrontEnd::PseudoInverse)?.with_noise_var(config.noise_var)?;

    let tista = match config.train_precision {
        Precision::F64 => train_on_images(&system, &train.pixels, config)?,
        Precision::F32 => cast_outcome(train_on_images(&system.cast::<f32>(), &train.pixels.mapv(|v| v as f32), config)?),
    };

    let x = test.head(config.test_count).pixels;
    let mut y = Array2::zeros((system.m(), x.ncols()));
    for (i, mut col) in y.axis_iter_mut(Axis(1)).enumerate() {
        let mut rng = trial_rng(config.eval_seed, i as u64);
        let xi = x.slice(s![.., i..i + 1]);
        col.assign(&observe_batch(&system, xi, &mut rng)?.column(0));
    }

    let mut rows = vec![MseRow {
        algorithm: "tista".into(),
        iteration: 0,
        mse: x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64,
    }];
    let mut tista_images = Array2::zeros(x.raw_dim());
    for (k, params) in tista.history.iter().enumerate() {
        let (curve, last) = mse_curve(&Tista::new(params, DEFAULT_EPSILON), &system, &x, &y)?;
        rows.push(MseRow {
            algorithm: "tista".into(),
            iteration: k + 1,
            mse: curve[k + 1],
        });
        tista_images = last;
    }
    let oamp = Oamp::new(BgDenoiser::new(config.init_alpha2, config.init_p)?, config.oamp_iterations, DEFAULT_EPSILON);
    let (curve, oamp_images) = mse_curve(&oamp, &system, &x, &y)?;
    rows.extend(curve.into_iter().enumerate().map(|(t, mse)| MseRow {
        algorithm: "oamp".into(),
        iteration: t,
        mse,
    }));
    Ok(MnistResult {
        rows,
        tista,
        tista_images,
        oamp_images,
    })
}
