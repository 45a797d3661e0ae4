use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tista_core::harness::{
    emit_csv, parse_algorithms, run_experiment, run_sweep, Algorithm, ExperimentConfig, ResultTable,
};
use tista_core::mnist::{load_idx, run_mnist_experiment, write_pgm, MnistConfig};
use tista_core::train::tgd::{gd_trajectory, tgd_error_curve, tgd_train, TgdConfig};
use tista_core::Error;

/// A run counts as divergence-dominated above this final divergence fraction.
const DIVERGENCE_EXIT_THRESHOLD: f64 = 0.5;

#[derive(Parser)]
#[command(name = "tista", version, about = "Trainable ISTA sparse recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat TOML experiment file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Derives matrix, training and evaluation seeds as s, s+1, s+2.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of ista,amp,oamp,tista,tista_mr,tista_lmmse.
    #[arg(long)]
    algorithms: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the trainable algorithms and write their parameter files.
    Train(Common),
    /// Evaluate NMSE per iteration and write a CSV table.
    Eval(Common),
    /// Repeat the evaluation over `sweep_values` of `sweep_key`.
    Sweep(Common),
    /// Trainable gradient descent on x1^2 + 10 x2^2; `--out` names a directory.
    TgdDemo {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Handwritten-digit recovery from IDX image files.
    Mnist {
        #[arg(long)]
        train_images: PathBuf,
        #[arg(long)]
        test_images: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        export_pgm: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Core(Error),
    Diverged(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(list) = &common.algorithms {
        cfg.algorithms = parse_algorithms(list)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_table(out: Option<&Path>, table: &ResultTable) -> Result<(), Failure> {
    match out {
        Some(path) => emit_csv(table, path)?,
        None => print!("{}", table.to_csv_string()),
    }
    let worst = table.worst_divergence();
    if worst > DIVERGENCE_EXIT_THRESHOLD {
        return Err(Failure::Diverged(worst));
    }
    Ok(())
}

fn train(common: &Common) -> Result<(), Failure> {
    let mut cfg = load_config(common)?;
    cfg.algorithms.retain(|a| a.trainable());
    if cfg.algorithms.is_empty() {
        return Err(Error::Config {
            field: "algorithms".into(),
            reason: "no trainable algorithm selected".into(),
        }
        .into());
    }
    let several = cfg.algorithms.len() > 1;
    let result = run_experiment(&cfg)?;
    for (alg, outcome) in &result.trained {
        let out = match (&common.out, several) {
            (Some(p), true) => Some(suffixed(p, *alg)),
            (Some(p), false) => Some(p.clone()),
            (None, _) => None,
        };
        write_out(out.as_deref(), &outcome.params.to_text())?;
    }
    Ok(())
}

fn suffixed(path: &Path, alg: Algorithm) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".{alg}"));
    PathBuf::from(s)
}

fn tgd_demo(seed: Option<u64>, out: &Path, trials: usize) -> Result<(), Failure> {
    let seed = seed.unwrap_or(0);
    let cfg = TgdConfig { seed, ..TgdConfig::default() };
    let trained = tgd_train(&cfg)?;
    let io = |path: PathBuf, text: String| fs::write(&path, text).map_err(|source| Error::Io { path, source });
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;

    let mut gammas = String::from("t,gamma\n");
    for (t, g) in trained.gammas.iter().enumerate() {
        let _ = writeln!(gammas, "{},{g}", t + 1);
    }
    io(out.join("gammas.csv"), gammas)?;

    let steps = trained.gammas.len();
    let runs = [
        ("tgd", trained.gammas.clone()),
        ("gd_0.01", vec![0.01; steps]),
        ("gd_0.09", vec![0.09; steps]),
    ];
    let curves: Vec<Vec<f64>> = runs
        .iter()
        .map(|(_, g)| tgd_error_curve(g, trials, cfg.start_range, seed.wrapping_add(1)))
        .collect();
    let mut error = String::from("iteration,tgd,gd_0.01,gd_0.09\n");
    for t in 0..=steps {
        let _ = writeln!(error, "{t},{},{},{}", curves[0][t], curves[1][t], curves[2][t]);
    }
    io(out.join("error.csv"), error)?;

    let mut traj = String::from("method,trial,iteration,x1,x2\n");
    for trial in 0..5u64 {
        let mut rng = tista_core::harness::trial_rng(seed.wrapping_add(2), trial);
        let start = [
            rand_range(&mut rng, cfg.start_range),
            rand_range(&mut rng, cfg.start_range),
        ];
        for (name, g) in &runs {
            for (t, p) in gd_trajectory(g, start).iter().enumerate() {
                let _ = writeln!(traj, "{name},{trial},{t},{},{}", p[0], p[1]);
            }
        }
    }
    io(out.join("trajectories.csv"), traj)?;
    Ok(())
}

fn rand_range(rng: &mut impl rand::Rng, range: f64) -> f64 {
    rng.random_range(-range..=range)
}

fn mnist(train: &Path, test: &Path, out: &Path, export: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = MnistConfig::default();
    if let Some(s) = seed {
        cfg.matrix_seed = s;
        cfg.train_seed = s.wrapping_add(1);
        cfg.eval_seed = s.wrapping_add(2);
    }
    let train = load_idx(train)?;
    let test = load_idx(test)?;
    let result = run_mnist_experiment(&train, &test, &cfg)?;
    write_out(Some(out), &result.to_csv())?;
    if let Some(dir) = export {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let originals = test.head(cfg.test_count);
        for i in 0..result.tista_images.ncols() {
            write_pgm(&dir.join(format!("{i:04}_original.pgm")), originals.image(i))?;
            write_pgm(&dir.join(format!("{i:04}_tista.pgm")), result.tista_images.column(i))?;
            write_pgm(&dir.join(format!("{i:04}_oamp.pgm")), result.oamp_images.column(i))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(c) => train(c),
        Command::Eval(c) => load_config(c)
            .map_err(Failure::from)
            .and_then(|cfg| write_table(c.out.as_deref(), &run_experiment(&cfg)?.table)),
        Command::Sweep(c) => load_config(c)
            .map_err(Failure::from)
            .and_then(|cfg| write_table(c.out.as_deref(), &run_sweep(&cfg)?)),
        Command::TgdDemo { seed, out, trials } => tgd_demo(*seed, out, *trials),
        Command::Mnist {
            train_images,
            test_images,
            out,
            export_pgm,
            seed,
        } => mnist(train_images, test_images, out, export_pgm.as_deref(), *seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diverged(frac)) => {
            eprintln!("error: run dominated by divergence ({:.0}% of trials)", frac * 100.0);
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
