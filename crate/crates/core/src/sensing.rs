//! Sensing-matrix ensembles and the precomputed linear front end.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SVD};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Singular values below `RANK_TOL * s_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Default regularization for the regularized-inverse front end.
pub const DEFAULT_BETA: f64 = 5.0e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleKind {
    GaussianIid { mean: f64, variance: f64 },
    BinaryPm1,
    ConditionedSvd { kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, m: usize, n: usize) -> Result<Self> {
        let spec = Self { kind, m, n };
        spec.validate()?;
        Ok(spec)
    }

    /// `N(0, 1/M)` entries.
    pub fn gaussian_scaled(m: usize, n: usize) -> Result<Self> {
        Self::new(
            EnsembleKind::GaussianIid {
                mean: 0.0,
                variance: 1.0 / m as f64,
            },
            m,
            n,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m >= self.n {
            return Err(Error::domain(format!(
                "ensemble needs 0 < m < n, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        match self.kind {
            EnsembleKind::GaussianIid { mean, variance } => {
                if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
                    return Err(Error::domain(format!(
                        "Gaussian ensemble needs finite mean and positive variance, got ({mean}, {variance})"
                    )));
                }
            }
            EnsembleKind::BinaryPm1 => {}
            EnsembleKind::ConditionedSvd { kappa } => check_kappa(kappa)?,
        }
        Ok(())
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa >= 1.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("condition number must be >= 1, got {kappa}")))
    }
}

/// Draws an M x N sensing matrix from `spec`.
pub fn generate_matrix<S: Real, R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Array2<S>> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    match spec.kind {
        EnsembleKind::GaussianIid { mean, variance } => {
            let sd = variance.sqrt();
            Ok(Array2::from_shape_simple_fn((m, n), || {
                let z: f64 = StandardNormal.sample(rng);
                S::lit(mean + sd * z)
            }))
        }
        EnsembleKind::BinaryPm1 => Ok(Array2::from_shape_simple_fn((m, n), || {
            if rng.random::<bool>() {
                S::one()
            } else {
                -S::one()
            }
        })),
        EnsembleKind::ConditionedSvd { kappa } => generate_conditioned(kappa, m, n, rng),
    }
}

/// Geometric singular-value profile `s_1 >= ... >= s_M` with
/// `s_1 / s_M = kappa` and `sum s_i^2 = n`.
pub fn conditioned_singular_values(kappa: f64, m: usize, n: usize) -> Result<Vec<f64>> {
    check_kappa(kappa)?;
    let ratio = if m <= 1 { 1.0 } else { kappa.powf(-1.0 / (m as f64 - 1.0)) };
    let profile: Vec<f64> = (0..m).map(|i| ratio.powi(i as i32)).collect();
    let energy: f64 = profile.iter().map(|s| s * s).sum();
    let c = (n as f64 / energy).sqrt();
    Ok(profile.into_iter().map(|s| c * s).collect())
}

/// Gaussian matrix whose singular values are replaced by a geometric
/// profile of condition number `kappa` and total energy `tr(AA^T) = n`.
pub fn generate_conditioned<S: Real, R: Rng + ?Sized>(
    kappa: f64,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<Array2<S>> {
    check_kappa(kappa)?;
    if m == 0 || m > n {
        return Err(Error::domain(format!("need 0 < m <= n, got m = {m}, n = {n}")));
    }
    let g = DMatrix::<f64>::from_fn(m, n, |_, _| StandardNormal.sample(rng));
    let svd = SVD::new(g, true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let values = conditioned_singular_values(kappa, m, n)?;
    // Pairing with G's own ordering does not matter: only the value set is prescribed.
    let mut scaled_u = u;
    for (mut col, s) in scaled_u.column_iter_mut().zip(&values) {
        col *= *s;
    }
    let a = scaled_u * v_t;
    Ok(from_nalgebra(&a))
}

fn to_nalgebra<S: Real>(a: ArrayView2<S>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]].as_f64())
}

fn from_nalgebra<S: Real>(a: &DMatrix<f64>) -> Array2<S> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| S::lit(a[(i, j)]))
}

/// Singular values of `a`, largest first.
pub fn singular_values<S: Real>(a: ArrayView2<S>) -> Vec<f64> {
    let mut s: Vec<f64> = to_nalgebra(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrontEnd {
    /// `W = A^T (A A^T)^{-1}`
    PseudoInverse,
    /// `W = A^T (A A^T + beta I)^{-1}`
    RegularizedInverse(f64),
    /// `W = A^T`
    Transpose,
}

/// Factorization used to form the front-end matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseRoute {
    /// Thin SVD of `A`; robust for ill-conditioned matrices.
    #[default]
    Svd,
    /// Cholesky factor of `A A^T (+ beta I)`; only for well-conditioned `A`.
    Cholesky,
}

/// Sensing matrix with its precomputed front end and cached traces.
///
/// `a` is the matrix the recursions work with. For a mean-removed system it
/// is `A - mu`, and [`observe`] adds the offset back to simulate the
/// physical measurement.
#[derive(Debug, Clone)]
pub struct SensingSystem<S> {
    a: Array2<S>,
    w: Array2<S>,
    front_end: FrontEnd,
    offset: S,
    center_residual: bool,
    tr_ata: S,
    tr_wwt: S,
    tr_z: S,
    tr_zzt: S,
    sigma_max: S,
    sigma_min: S,
    noise_var: S,
}

impl<S: Real> SensingSystem<S> {
    pub fn a(&self) -> &Array2<S> {
        &self.a
    }

    pub fn w(&self) -> &Array2<S> {
        &self.w
    }

    pub fn front_end(&self) -> FrontEnd {
        self.front_end
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Entrywise mean removed from the physical matrix (zero when none).
    pub fn offset(&self) -> S {
        self.offset
    }

    /// Whether residuals are projected onto the zero-mean subspace.
    pub fn centers_residual(&self) -> bool {
        self.center_residual
    }

    pub fn tr_ata(&self) -> S {
        self.tr_ata
    }

    pub fn tr_wwt(&self) -> S {
        self.tr_wwt
    }

    /// `tr(WA)`
    pub fn tr_z(&self) -> S {
        self.tr_z
    }

    /// `tr(WA (WA)^T)`
    pub fn tr_zzt(&self) -> S {
        self.tr_zzt
    }

    /// `tr(B B^T)` with `B = I - WA`.
    pub fn tr_bbt(&self) -> S {
        S::lit(self.n() as f64) - S::lit(2.0) * self.tr_z + self.tr_zzt
    }

    pub fn sigma_max(&self) -> S {
        self.sigma_max
    }

    pub fn sigma_min(&self) -> S {
        self.sigma_min
    }

    pub fn noise_var(&self) -> S {
        self.noise_var
    }

    pub fn with_noise_var(mut self, noise_var: S) -> Result<Self> {
        if !(noise_var >= S::zero()) || !noise_var.is_finite() {
            return Err(Error::domain(format!("noise variance must be >= 0, got {noise_var}")));
        }
        self.noise_var = noise_var;
        Ok(self)
    }

    /// Copies the system into another scalar type.
    pub fn cast<T: Real>(&self) -> SensingSystem<T> {
        let c = |v: S| T::lit(v.as_f64());
        SensingSystem {
            a: self.a.mapv(c),
            w: self.w.mapv(c),
            front_end: self.front_end,
            offset: c(self.offset),
            center_residual: self.center_residual,
            tr_ata: c(self.tr_ata),
            tr_wwt: c(self.tr_wwt),
            tr_z: c(self.tr_z),
            tr_zzt: c(self.tr_zzt),
            sigma_max: c(self.sigma_max),
            sigma_min: c(self.sigma_min),
            noise_var: c(self.noise_var),
        }
    }

    /// `y - A s` for a batch (columns are samples), centered per column
    /// when the system removes the mean.
    pub fn residual(&self, y: ArrayView2<S>, s: ArrayView2<S>) -> Array2<S> {
        let mut c = y.to_owned();
        ndarray::linalg::general_mat_mul(-S::one(), &self.a, &s, S::one(), &mut c);
        if self.center_residual {
            center_columns(&mut c);
        }
        c
    }
}

pub(crate) fn center_columns<S: Real>(c: &mut Array2<S>) {
    let m = S::lit(c.nrows() as f64);
    for mut col in c.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / m;
        col.mapv_inplace(|v| v - mean);
    }
}

/// Builds the front-end matrix for `a` with the default (SVD) route.
pub fn build_front_end<S: Real>(a: Array2<S>, kind: FrontEnd) -> Result<SensingSystem<S>> {
    build_front_end_with(a, kind, InverseRoute::Svd)
}

pub fn build_front_end_with<S: Real>(a: Array2<S>, kind: FrontEnd, route: InverseRoute) -> Result<SensingSystem<S>> {
    let (m, n) = a.dim();
    if m == 0 || m > n {
        return Err(Error::Shape(format!("sensing matrix must be wide, got {m} x {n}")));
    }
    if let FrontEnd::RegularizedInverse(beta) = kind {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("regularization beta must be positive, got {beta}")));
        }
    }
    let an = to_nalgebra(a.view());
    let svd = SVD::new(an.clone(), true, true);
    let sv = &svd.singular_values;
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    if !(sigma_min > RANK_TOL * sigma_max) {
        return Err(Error::RankDeficient { sigma_min, sigma_max });
    }

    let wn: DMatrix<f64> = match (kind, route) {
        (FrontEnd::Transpose, _) => an.transpose(),
        (FrontEnd::PseudoInverse, InverseRoute::Svd) => svd_inverse(&svd, |s| 1.0 / s),
        (FrontEnd::RegularizedInverse(beta), InverseRoute::Svd) => svd_inverse(&svd, |s| s / (s * s + beta)),
        (FrontEnd::PseudoInverse, InverseRoute::Cholesky) => cholesky_inverse(&an, 0.0)?,
        (FrontEnd::RegularizedInverse(beta), InverseRoute::Cholesky) => cholesky_inverse(&an, beta)?,
    };

    let tr_ata: f64 = an.iter().map(|v| v * v).sum();
    let tr_wwt: f64 = wn.iter().map(|v| v * v).sum();
    let tr_z: f64 = (0..n).map(|i| wn.row(i).dot(&an.column(i).transpose())).sum();
    // tr(Z Z^T) = <W^T W, A A^T>_F, formed with M x M products
    let wtw = wn.tr_mul(&wn);
    let aat = &an * an.transpose();
    let tr_zzt: f64 = wtw.component_mul(&aat).sum();

    Ok(SensingSystem {
        w: from_nalgebra(&wn),
        a,
        front_end: kind,
        offset: S::zero(),
        center_residual: false,
        tr_ata: S::lit(tr_ata),
        tr_wwt: S::lit(tr_wwt),
        tr_z: S::lit(tr_z),
        tr_zzt: S::lit(tr_zzt),
        sigma_max: S::lit(sigma_max),
        sigma_min: S::lit(sigma_min),
        noise_var: S::zero(),
    })
}

/// `V diag(f(s)) U^T` from a thin SVD `A = U diag(s) V^T`.
fn svd_inverse(svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let u = svd.u.as_ref().expect("left singular vectors");
    let v_t = svd.v_t.as_ref().expect("right singular vectors");
    let mut v = v_t.transpose();
    for (mut col, s) in v.column_iter_mut().zip(svd.singular_values.iter()) {
        col *= f(*s);
    }
    v * u.transpose()
}

fn cholesky_inverse(a: &DMatrix<f64>, beta: f64) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let gram = a * a.transpose() + DMatrix::<f64>::identity(m, m) * beta;
    let chol = gram.cholesky().ok_or_else(|| Error::RankDeficient {
        sigma_min: 0.0,
        sigma_max: f64::NAN,
    })?;
    // W^T = (A A^T + beta I)^{-1} A
    Ok(chol.solve(a).transpose())
}

/// Mean-removed system: recursions use `A' = A - mu`, whose pseudo-inverse
/// becomes the front end. `mu = None` estimates the entrywise mean.
///
/// Residual centering is enabled only for a nonzero offset; with `mu = 0`
/// the result is the plain pseudo-inverse system.
pub fn mean_removed_system<S: Real>(a: &Array2<S>, mu: Option<S>) -> Result<SensingSystem<S>> {
    let mu = match mu {
        Some(mu) => mu,
        None => a.mean().ok_or_else(|| Error::Shape("empty sensing matrix".into()))?,
    };
    if !mu.is_finite() {
        return Err(Error::domain(format!("offset must be finite, got {mu}")));
    }
    let shifted = a.mapv(|v| v - mu);
    let mut sys = build_front_end(shifted, FrontEnd::PseudoInverse)?;
    sys.offset = mu;
    sys.center_residual = mu != S::zero();
    Ok(sys)
}

/// `y = A x + w` with `w ~ N(0, noise_var I)`.
pub fn observe<S: Real, R: Rng + ?Sized>(system: &SensingSystem<S>, x: ArrayView1<S>, rng: &mut R) -> Result<Array1<S>> {
    if x.len() != system.n() {
        return Err(Error::Shape(format!("signal has length {}, system expects {}", x.len(), system.n())));
    }
    let mut y = system.a.dot(&x);
    if system.offset != S::zero() {
        let shift = system.offset * x.sum();
        y.mapv_inplace(|v| v + shift);
    }
    if system.noise_var > S::zero() {
        let sd = system.noise_var.sqrt();
        y.mapv_inplace(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + sd * S::lit(z)
        });
    }
    Ok(y)
}

/// Batched [`observe`]: `x` is N x B, result is M x B. Noise is drawn
/// column by column.
pub fn observe_batch<S: Real, R: Rng + ?Sized>(system: &SensingSystem<S>, x: ArrayView2<S>, rng: &mut R) -> Result<Array2<S>> {
    if x.nrows() != system.n() {
        return Err(Error::Shape(format!("batch has {} rows, system expects {}", x.nrows(), system.n())));
    }
    let mut y = system.a.dot(&x);
    if system.offset != S::zero() {
        for (mut col, xc) in y.axis_iter_mut(Axis(1)).zip(x.axis_iter(Axis(1))) {
            let shift = system.offset * xc.sum();
            col.mapv_inplace(|v| v + shift);
        }
    }
    if system.noise_var > S::zero() {
        let sd = system.noise_var.sqrt();
        for mut col in y.axis_iter_mut(Axis(1)) {
            col.mapv_inplace(|v| {
                let z: f64 = StandardNormal.sample(rng);
                v + sd * S::lit(z)
            });
        }
    }
    Ok(y)
}

const SMTX_MAGIC: &[u8; 4] = b"SMTX";

/// Serializes a matrix: magic `SMTX`, `u32` rows, `u32` cols (little endian),
/// then row-major little-endian `f64` entries.
pub fn encode_matrix<S: Real>(a: ArrayView2<S>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * a.len());
    out.extend_from_slice(SMTX_MAGIC);
    out.extend_from_slice(&(a.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(a.ncols() as u32).to_le_bytes());
    for v in a.iter() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

pub fn decode_matrix<S: Real>(bytes: &[u8]) -> Result<Array2<S>> {
    let parse = |offset: usize, reason: &str| Error::Parse {
        offset,
        reason: reason.to_string(),
    };
    if bytes.len() < 12 {
        return Err(parse(bytes.len(), "truncated header"));
    }
    if &bytes[..4] != SMTX_MAGIC {
        return Err(parse(0, "bad magic, expected SMTX"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + 8 * rows * cols;
    if bytes.len() != expected {
        return Err(parse(bytes.len().min(expected), "payload length does not match dimensions"));
    }
    let data: Vec<S> = bytes[12..]
        .chunks_exact(8)
        .map(|c| S::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Shape(e.to_string()))
}

pub fn save_matrix<S: Real>(a: ArrayView2<S>, path: &Path) -> Result<()> {
    fs::write(path, encode_matrix(a)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix<S: Real>(path: &Path) -> Result<Array2<S>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}
