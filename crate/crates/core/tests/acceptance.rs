//! Acceptance criteria for the reproduction, one verdict line per criterion.
//!
//! ```text
//! cargo test --release -p tista-core --test acceptance -- [filter] [--strict]
//! ```
//!
//! `filter` keeps the criteria whose name contains it. Failures are reported
//! but only change the exit status under `--strict` (or `TISTA_STRICT=1`).
//! The training suites take the better part of an hour on one core.
//!
//! MNIST data is looked up in `$TISTA_MNIST_DIR`, then `data/mnist` at the
//! workspace root; the criterion is skipped when the files are missing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tista_core::harness::{
    build_matrix, evaluate_generations, evaluate_nmse, system_for, train_algorithm, Algorithm, EnsembleName, ExperimentConfig,
    NmseCurve, Precision, Snr,
};
use tista_core::mnist::{load_idx, run_mnist_experiment, MnistConfig};
use tista_core::prior::{calibrate_noise_var, sample_signal, BgDenoiser, SparseSignalPrior};
use tista_core::recovery::{estimate_tau2, estimate_v2, Amp, Oamp, TistaParams};
use tista_core::sensing::{build_front_end, generate_matrix, observe, EnsembleSpec, FrontEnd};
use tista_core::train::tgd::{tgd_error_curve, tgd_train, TgdConfig};
use tista_core::train::{loss_and_gradient, Batch};

const EVAL_TRIALS: usize = 1000;
/// Mini-batch size of the secondary training suites.
const LIGHT_BATCH: usize = 200;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Verdict {
    status: Status,
    detail: String,
}

impl Verdict {
    fn check(ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { status, detail }
    }

    fn skip(detail: impl Into<String>) -> Self {
        Self {
            status: Status::Skip,
            detail: detail.into(),
        }
    }
}

/// Named sub-checks folded into one verdict.
#[derive(Default)]
struct Checks {
    ok: bool,
    text: String,
    started: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            ok: true,
            ..Self::default()
        }
    }

    fn add(&mut self, ok: bool, what: String) {
        self.ok &= ok;
        if self.started {
            self.text.push_str("; ");
        }
        self.started = true;
        let _ = write!(self.text, "{what} [{}]", if ok { "ok" } else { "MISS" });
    }

    fn verdict(self) -> Verdict {
        Verdict::check(self.ok, self.text)
    }
}

fn fmt_db(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.1}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_steps(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn tista_curve(cfg: &ExperimentConfig, alg: Algorithm) -> (NmseCurve, Vec<TistaParams<f64>>) {
    let a = build_matrix(cfg).expect("matrix");
    let prior = cfg.prior().expect("prior");
    let system = system_for(cfg, alg, &a).expect("system");
    let out = train_algorithm(cfg, &system, &prior).expect("training");
    let curve = evaluate_generations(&system, &out.history, &prior, cfg.trials, cfg.eval_seed, cfg.epsilon).expect("evaluation");
    (curve, out.history)
}

fn benchmark_config() -> ExperimentConfig {
    ExperimentConfig {
        iterations: 14,
        train_alpha_p: true,
        train_precision: Precision::F32,
        trials: EVAL_TRIALS,
        ..ExperimentConfig::default()
    }
}

fn light(cfg: ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        minibatch_size: LIGHT_BATCH,
        ..cfg
    }
}

struct Benchmark {
    tista: Vec<f64>,
    amp: Vec<f64>,
    oamp: Vec<f64>,
    history: Vec<TistaParams<f64>>,
}

fn benchmark() -> &'static Benchmark {
    static CELL: OnceLock<Benchmark> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = benchmark_config();
        let (curve, history) = tista_curve(&cfg, Algorithm::Tista);
        let a = build_matrix(&cfg).unwrap();
        let prior = cfg.prior().unwrap();
        let amp_sys = system_for(&cfg, Algorithm::Amp, &a).unwrap();
        let amp = Amp {
            theta: cfg.amp_theta,
            iterations: cfg.iterations,
        };
        let amp = evaluate_nmse(&amp_sys, &amp, &prior, cfg.trials, cfg.eval_seed).unwrap();
        let oamp_sys = system_for(&cfg, Algorithm::Oamp, &a).unwrap();
        let oamp = Oamp::new(BgDenoiser::new(cfg.alpha2, cfg.p).unwrap(), cfg.iterations, cfg.epsilon);
        let oamp = evaluate_nmse(&oamp_sys, &oamp, &prior, cfg.trials, cfg.eval_seed).unwrap();
        Benchmark {
            tista: curve.nmse_db,
            amp: amp.nmse_db,
            oamp: oamp.nmse_db,
            history,
        }
    })
}

fn propositions() -> Verdict {
    const DRAWS: usize = 10_000;
    let (m, n) = (250, 500);
    let gammas = [0.5, 1.0, 2.0];
    let prior = SparseSignalPrior::bernoulli_gaussian(0.1, 1.0).unwrap();
    let mut checks = Checks::new();
    for (k, v_bar2) in [1e-2, 1e-3].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let a = generate_matrix::<f64, _>(&EnsembleSpec::gaussian_scaled(m, n).unwrap(), &mut rng).unwrap();
        let nv = calibrate_noise_var(a.view(), &prior, 40.0).unwrap();
        let sys = build_front_end(a, FrontEnd::PseudoInverse).unwrap().with_noise_var(nv).unwrap();
        let err = Normal::new(0.0, f64::sqrt(v_bar2)).unwrap();
        let (mut v2_est, mut v2_emp) = (0.0, 0.0);
        let mut tau2_est = [0.0; 3];
        let mut tau2_emp = [0.0; 3];
        for _ in 0..DRAWS {
            let x = sample_signal(&prior, n, &mut rng).unwrap();
            let y = observe(&sys, x.view(), &mut rng).unwrap();
            let e = Array1::from_shape_simple_fn(n, || err.sample(&mut rng));
            let s = &x + &e;
            let v2 = estimate_v2(&sys, y.view(), s.view(), 1e-12).unwrap();
            v2_est += v2;
            v2_emp += e.dot(&e) / n as f64;
            let step = sys.w().dot(&(&y - &sys.a().dot(&s)));
            for (g, &gamma) in gammas.iter().enumerate() {
                let d = &e + &(&step * gamma);
                tau2_emp[g] += d.dot(&d) / n as f64;
                tau2_est[g] += estimate_tau2(&sys, v2, gamma).unwrap();
            }
        }
        let rel = |a: f64, b: f64| (a - b).abs() / b;
        let r = rel(v2_est, v2_emp);
        checks.add(r < 0.02, format!("v2 at {v_bar2:e}: {:.2}%", 100.0 * r));
        for (g, gamma) in gammas.iter().enumerate() {
            let r = rel(tau2_est[g], tau2_emp[g]);
            checks.add(r < 0.02, format!("tau2 at {v_bar2:e}, gamma {gamma}: {:.2}%", 100.0 * r));
        }
    }
    checks.verdict()
}

fn gradient_check() -> Verdict {
    const POINTS: u64 = 100;
    let h = 1e-5;
    let eps = 1e-9;
    let prior = SparseSignalPrior::bernoulli_gaussian(0.1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for point in 0..POINTS {
        let a = generate_matrix::<f64, _>(&EnsembleSpec::gaussian_scaled(10, 20).unwrap(), &mut rng).unwrap();
        let system = build_front_end(a, FrontEnd::PseudoInverse).unwrap().with_noise_var(1e-3).unwrap();
        let batch = Batch::sample(&system, &prior, 8, &mut rng).unwrap();
        let train_prior = point % 2 == 0;
        let params = TistaParams {
            gammas: (0..3).map(|_| rng.random_range(0.5..3.0)).collect(),
            alpha2: if train_prior { rng.random_range(0.5..2.0) } else { 1.0 },
            p: if train_prior { rng.random_range(0.05..0.3) } else { 0.1 },
            train_prior,
        };
        let (_, grads) = loss_and_gradient(&system, &batch, &params, 3, eps).unwrap();
        for (i, &g) in grads.iter().enumerate() {
            let shifted = |delta: f64| {
                let mut q = params.clone();
                match i {
                    0..=2 => q.gammas[i] += delta,
                    3 => q.alpha2 += delta,
                    _ => q.p += delta,
                }
                loss_and_gradient(&system, &batch, &q, 3, eps).unwrap().0
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            worst = worst.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-8));
        }
    }
    Verdict::check(worst < 1e-5, format!("{POINTS} points, N=20, M=10, T=3, worst relative error {worst:.2e} (< 1e-5)"))
}

fn first_at_or_below(curve: &[f64], level: f64) -> Option<usize> {
    curve.iter().position(|&v| v <= level)
}

fn gaussian_benchmark() -> Verdict {
    let f = benchmark();
    let mut c = Checks::new();
    c.add(f.tista[5] <= -30.0, format!("TISTA(5) = {:.2} dB <= -30", f.tista[5]));
    let sat = &f.tista[12..=14];
    c.add(
        sat.iter().all(|v| (v + 42.0).abs() <= 2.0),
        format!("TISTA(12..14) = {} within -42 +- 2", fmt_db(sat)),
    );
    c.add(f.amp[12] <= -30.0, format!("AMP(12) = {:.2} dB <= -30", f.amp[12]));
    let first = first_at_or_below(&f.oamp, -30.0);
    c.add(
        matches!(first, Some(6..=8)),
        format!("OAMP first reaches -30 dB at t = {first:?}, want 6..=8"),
    );
    for t in [5, 7] {
        let gain = f.oamp[t] - f.tista[t];
        c.add(gain >= 2.0, format!("gain over OAMP at {t} = {gain:.2} dB >= 2"));
    }
    let mut v = c.verdict();
    let _ = write!(
        v.detail,
        " | tista {} | amp {} | oamp {}",
        fmt_db(&f.tista),
        fmt_db(&f.amp),
        fmt_db(&f.oamp)
    );
    v
}

fn sign_changes(gammas: &[f64]) -> usize {
    let diffs: Vec<f64> = gammas.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.windows(2).filter(|d| d[0] * d[1] < 0.0).count()
}

fn gamma_shape() -> Verdict {
    let base = ExperimentConfig {
        iterations: 12,
        ..benchmark_config()
    };
    let mut runs = vec![benchmark().history[11].gammas.clone()];
    for seed in [11, 21] {
        let cfg = ExperimentConfig {
            train_seed: seed,
            trials: 1,
            ..base.clone()
        };
        let a = build_matrix(&cfg).unwrap();
        let prior = cfg.prior().unwrap();
        let system = system_for(&cfg, Algorithm::Tista, &a).unwrap();
        runs.push(train_algorithm(&cfg, &system, &prior).unwrap().params.gammas);
    }
    let mut c = Checks::new();
    let lo = runs.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = runs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    c.add(lo >= 0.5 && hi <= 12.0, format!("gamma range [{lo:.2}, {hi:.2}] inside [0.5, 12]"));
    let changes: Vec<usize> = runs.iter().map(|g| sign_changes(g)).collect();
    c.add(changes.iter().all(|&k| k >= 3), format!("sign changes of the first difference {changes:?} >= 3"));
    let mut spread: f64 = 0.0;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            for (a, b) in runs[i].iter().zip(&runs[j]) {
                spread = spread.max((a - b).abs());
            }
        }
    }
    let range = hi - lo;
    c.add(
        spread <= 0.25 * range,
        format!("max seed disagreement {spread:.2} <= 25% of range {range:.2}"),
    );
    let mut v = c.verdict();
    for (k, g) in runs.iter().enumerate() {
        let _ = write!(v.detail, " | seed {k}: {}", fmt_steps(g));
    }
    v
}

fn robustness() -> Verdict {
    let mut c = Checks::new();
    let t12 = ExperimentConfig {
        iterations: 12,
        ..benchmark_config()
    };

    let wide = light(ExperimentConfig {
        variance: Some(1.0),
        ..t12.clone()
    });
    let (tista, _) = tista_curve(&wide, Algorithm::Tista);
    let a = build_matrix(&wide).unwrap();
    let sys = system_for(&wide, Algorithm::Oamp, &a).unwrap();
    let oamp = Oamp::new(BgDenoiser::new(wide.alpha2, wide.p).unwrap(), wide.iterations, wide.epsilon);
    let oamp = evaluate_nmse(&sys, &oamp, &wide.prior().unwrap(), wide.trials, wide.eval_seed).unwrap().nmse_db;
    let below = (1..=12).all(|t| tista.nmse_db[t] < oamp[t]);
    c.add(
        below,
        format!("(a) N(0,1): TISTA {} below OAMP {} for t in 1..=12", fmt_db(&tista.nmse_db), fmt_db(&oamp)),
    );

    let (gauss, _) = tista_curve(&light(t12.clone()), Algorithm::Tista);
    let binary = light(ExperimentConfig {
        ensemble: EnsembleName::Binary,
        ..t12.clone()
    });
    let (bin, _) = tista_curve(&binary, Algorithm::Tista);
    let gap = (1..=12).map(|t| (bin.nmse_db[t] - gauss.nmse_db[t]).abs()).fold(0.0, f64::max);
    c.add(
        gap <= 2.0,
        format!("(b) binary {} vs N(0,1/M) {}: max gap {gap:.2} dB <= 2", fmt_db(&bin.nmse_db), fmt_db(&gauss.nmse_db)),
    );

    for kappa in [1000.0, 5000.0] {
        let cfg = light(ExperimentConfig {
            ensemble: EnsembleName::Conditioned,
            kappa,
            snr_db: Snr::Noiseless,
            train_alpha_p: false,
            ..t12.clone()
        });
        let (curve, _) = tista_curve(&cfg, Algorithm::Tista);
        let v = &curve.nmse_db;
        let monotone = v.windows(2).all(|w| w[1] < w[0]);
        let last = v[v.len() - 1];
        c.add(
            monotone && last < -40.0,
            format!("(c) noiseless kappa={kappa}: {} decreasing, final {last:.1} < -40", fmt_db(v)),
        );
    }

    let cfg = ExperimentConfig {
        ensemble: EnsembleName::Conditioned,
        kappa: 5.0,
        iterations: 100,
        trials: 200,
        ..ExperimentConfig::default()
    };
    let a = build_matrix(&cfg).unwrap();
    let sys = system_for(&cfg, Algorithm::Amp, &a).unwrap();
    let amp = Amp {
        theta: cfg.amp_theta,
        iterations: cfg.iterations,
    };
    let frac = evaluate_nmse(&sys, &amp, &cfg.prior().unwrap(), cfg.trials, cfg.eval_seed).unwrap().final_divergence();
    c.add(frac >= 0.95, format!("(d) AMP at kappa=5 diverges in {:.1}% of trials (>= 95%)", 100.0 * frac));
    c.verdict()
}

fn mean_removal_and_lmmse() -> Verdict {
    let mut c = Checks::new();
    let mr = light(ExperimentConfig {
        mean: 1.0,
        snr_db: Snr::Db(60.0),
        iterations: 10,
        train_precision: Precision::F32,
        ..ExperimentConfig::default()
    });
    let (with_mr, _) = tista_curve(&mr, Algorithm::TistaMr);
    let (plain, _) = tista_curve(&mr, Algorithm::Tista);
    let (a, b) = (with_mr.nmse_db[10], plain.nmse_db[10]);
    c.add(a <= -34.0, format!("TISTA-MR(10) = {a:.2} dB <= -34"));
    c.add(b >= -14.0, format!("plain TISTA(10) = {b:.2} dB >= -14"));

    let cond = light(ExperimentConfig {
        ensemble: EnsembleName::Conditioned,
        kappa: 1000.0,
        snr_db: Snr::Db(60.0),
        iterations: 12,
        train_alpha_p: false,
        train_precision: Precision::F32,
        ..ExperimentConfig::default()
    });
    let (lmmse, _) = tista_curve(&cond, Algorithm::TistaLmmse);
    let (pinv, _) = tista_curve(&cond, Algorithm::Tista);
    let better = (4..=12).all(|t| lmmse.nmse_db[t] < pinv.nmse_db[t]);
    c.add(
        better,
        format!(
            "TISTA-LMMSE {} below pseudo-inverse TISTA {} for t in 4..=12",
            fmt_db(&lmmse.nmse_db),
            fmt_db(&pinv.nmse_db)
        ),
    );
    let mut v = c.verdict();
    let _ = write!(v.detail, " | mr {} | plain {}", fmt_db(&with_mr.nmse_db), fmt_db(&plain.nmse_db));
    v
}

fn tgd() -> Verdict {
    const STARTS: usize = 10_000;
    let config = TgdConfig::default();
    let trained = tgd_train(&config).unwrap();
    let iters = config.generations;
    let at_end = |gammas: &[f64]| tgd_error_curve(gammas, STARTS, config.start_range, 77)[iters];
    let e_trained = at_end(&trained.gammas);
    let e_small = at_end(&vec![0.01; iters]);
    let e_large = at_end(&vec![0.09; iters]);
    let mut c = Checks::new();
    c.add(
        e_trained <= e_small.min(e_large) - 1.0,
        format!("log10 error at {iters}: trained {e_trained:.2}, gamma=0.01 {e_small:.2}, gamma=0.09 {e_large:.2}"),
    );
    let changes = sign_changes(&trained.gammas);
    c.add(changes >= 1, format!("trained gamma sequence changes direction {changes} times"));
    let mut v = c.verdict();
    let _ = write!(v.detail, " | gammas {}", fmt_steps(&trained.gammas));
    v
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("TISTA_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().join("data/mnist"))
}

fn mnist() -> Verdict {
    let dir = mnist_dir();
    let train = dir.join("train-images-idx3-ubyte");
    let test = dir.join("t10k-images-idx3-ubyte");
    if !train.is_file() || !test.is_file() {
        return Verdict::skip(format!("MNIST image files not found in {}", dir.display()));
    }
    let train = load_idx(&train).expect("training images");
    let test = load_idx(&test).expect("test images");
    let config = MnistConfig::default();
    let result = run_mnist_experiment(&train, &test, &config).expect("mnist run");
    let tista = result.mse("tista", config.generations).unwrap();
    let oamp = result.mse("oamp", config.oamp_iterations).unwrap();
    Verdict::check(
        tista < oamp,
        format!(
            "TISTA({}) MSE {tista:.5} < OAMP({}) MSE {oamp:.5} over {} test images",
            config.generations, config.oamp_iterations, config.test_count
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict") || std::env::var("TISTA_STRICT").is_ok_and(|v| v == "1");
    let filter = args.iter().find(|a| !a.starts_with('-')).cloned();

    let criteria: Vec<(&str, fn() -> Verdict)> = vec![
        ("propositions", propositions),
        ("gradient_check", gradient_check),
        ("gaussian_benchmark", gaussian_benchmark),
        ("gamma_shape", gamma_shape),
        ("robustness", robustness),
        ("mean_removal_lmmse", mean_removal_and_lmmse),
        ("tgd", tgd),
        ("mnist", mnist),
    ];
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for (name, run) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let tag = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        *tally.entry(tag).or_default() += 1;
        println!("{tag} {name} ({:.0} s): {}", start.elapsed().as_secs_f64(), v.detail);
    }
    let count = |k: &str| tally.get(k).copied().unwrap_or(0);
    println!("acceptance: {} passed, {} failed, {} skipped", count("PASS"), count("FAIL"), count("SKIP"));
    if strict && count("FAIL") > 0 {
        std::process::exit(1);
    }
}
