//! Monte-Carlo checks that the variance estimators are unbiased when the
//! estimation error is Gaussian and independent of the matrix.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tista_core::prior::{calibrate_noise_var, sample_signal, SparseSignalPrior};
use tista_core::recovery::{estimate_tau2, estimate_v2};
use tista_core::sensing::{build_front_end, generate_matrix, observe, EnsembleSpec, FrontEnd};

const DRAWS: usize = 2000;

fn check(v_bar2: f64, gamma: f64, seed: u64) {
    let (m, n) = (250, 500);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = generate_matrix::<f64, _>(&EnsembleSpec::gaussian_scaled(m, n).unwrap(), &mut rng).unwrap();
    let prior = SparseSignalPrior::bernoulli_gaussian(0.1, 1.0).unwrap();
    let nv = calibrate_noise_var(a.view(), &prior, 40.0).unwrap();
    let sys = build_front_end(a, FrontEnd::PseudoInverse).unwrap().with_noise_var(nv).unwrap();
    let err = Normal::new(0.0, v_bar2.sqrt()).unwrap();
    let (mut v2_est, mut v2_emp, mut tau2_est, mut tau2_emp) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..DRAWS {
        let x = sample_signal(&prior, n, &mut rng).unwrap();
        let y = observe(&sys, x.view(), &mut rng).unwrap();
        let e = Array1::from_shape_simple_fn(n, || err.sample(&mut rng));
        let s = &x + &e;
        let v2 = estimate_v2(&sys, y.view(), s.view(), 1e-12).unwrap();
        v2_est += v2;
        v2_emp += e.dot(&e) / n as f64;
        let r = &s + &(sys.w().dot(&(&y - &sys.a().dot(&s))) * gamma);
        let d = &r - &x;
        tau2_emp += d.dot(&d) / n as f64;
        tau2_est += estimate_tau2(&sys, v2, gamma).unwrap();
    }
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(v2_est, v2_emp) < 0.02, "v2: {v2_est} vs {v2_emp}");
    assert!(rel(tau2_est, tau2_emp) < 0.02, "tau2 (gamma {gamma}): {tau2_est} vs {tau2_emp}");
}

#[test]
fn estimators_match_empirical_errors() {
    for (k, gamma) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        check(1e-2, gamma, 10 + k as u64);
        check(1e-3, gamma, 20 + k as u64);
    }
}
