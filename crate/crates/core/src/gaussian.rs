//! Gaussian measures carried by unimodular eigenvectors.
//!
//! A sample is `x = Σ_j a_j g_j E_{i_j}(λ_j)` with independent standard complex
//! Gaussians `g_j` (`E|g|² = 1`). The module estimates invariance under `T`
//! through covariances and marginals, and compares Birkhoff time averages with
//! ensemble averages. Ergodicity is reported, never certified.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::eigenfields::{residual, EigenField};
use crate::error::{Error, Result};
use crate::hilbert::{CVec, Grid};
use crate::operator::OperatorSpec;
use crate::spectrum::{sample_k, EigenSequence};

/// One-sample Kolmogorov–Smirnov critical constant at the 1% level.
pub const KS_CONSTANT: f64 = 1.63;
pub const DEFAULT_ERGODIC_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub mode: usize,
    pub lambda: Complex64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub terms: Vec<GaussianTerm>,
}

impl GaussianSpec {
    /// `count` exact eigenvectors: term `j` sits on mode `j mod I` at
    /// `λ_j = μ_{⌊j / I⌋}`, with amplitude `2^{-j}`.
    pub fn exact(mu: &[Complex64], grid: Grid, count: usize) -> Result<Self> {
        let terms = (0..count)
            .map(|j| {
                let level = j / grid.modes;
                if level + 2 > grid.levels {
                    return Err(Error::Range(format!(
                        "{count} exact terms need eigenvalue index {level} > N - 2 = {}",
                        grid.levels - 2
                    )));
                }
                Ok(GaussianTerm { mode: j % grid.modes, lambda: mu[level], amplitude: 0.5f64.powi(j as i32) })
            })
            .collect::<Result<_>>()?;
        Ok(GaussianSpec { terms })
    }

    /// Every exact eigenvalue `μ_0..μ_{N-2}` on each of the given modes, so the
    /// touched blocks are fully covered.
    pub fn full_block(mu: &[Complex64], grid: Grid, modes: &[usize]) -> Result<Self> {
        let mut terms = Vec::new();
        for &i in modes {
            grid.check(i, 0)?;
            for &lambda in &mu[..grid.levels - 1] {
                let j = terms.len();
                terms.push(GaussianTerm { mode: i, lambda, amplitude: 0.5f64.powi(j as i32) });
            }
        }
        Ok(GaussianSpec { terms })
    }

    /// `λ_j` drawn from the depth-`depth` approximation of `K`; not exact
    /// eigenvectors of the truncation.
    pub fn sampled(seq: &EigenSequence, grid: Grid, depth: usize, count: usize, seed: u64) -> Result<Self> {
        let terms = (0..count)
            .map(|j| {
                Ok(GaussianTerm {
                    mode: j % grid.modes,
                    lambda: sample_k(seq, depth, seed.wrapping_add(j as u64))?,
                    amplitude: 0.5f64.powi(j as i32),
                })
            })
            .collect::<Result<_>>()?;
        Ok(GaussianSpec { terms })
    }
}

/// A spec bound to an operator: eigenvectors, their norms and residuals.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub spec: GaussianSpec,
    pub grid: Grid,
    pub vectors: Vec<CVec>,
    pub norms: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl GaussianModel {
    pub fn new(spec: GaussianSpec, op: &OperatorSpec) -> Result<Self> {
        let grid = op.grid();
        let mut vectors = Vec::with_capacity(spec.terms.len());
        let mut residuals = Vec::with_capacity(spec.terms.len());
        for t in &spec.terms {
            if !(t.amplitude > 0.0 && t.amplitude.is_finite()) {
                return Err(Error::Invalid(format!("amplitude must be positive, got {}", t.amplitude)));
            }
            let field = EigenField::for_operator(op, t.mode)?;
            vectors.push(field.eval_e(t.lambda, grid)?);
            residuals.push(residual(op, &field, t.lambda)?);
        }
        let norms = vectors.iter().map(CVec::norm).collect();
        Ok(GaussianModel { spec, grid, vectors, norms, residuals })
    }

    /// `Σ_j a_j² ‖E_j‖²`, the expected squared norm of a sample.
    pub fn second_moment(&self) -> f64 {
        self.spec.terms.iter().zip(&self.norms).map(|(t, n)| (t.amplitude * n).powi(2)).sum()
    }

    /// `Σ_j a_j² (2 r_j ‖E_j‖ + r_j²)`.
    pub fn deterministic_budget(&self) -> f64 {
        self.spec
            .terms
            .iter()
            .zip(self.norms.iter().zip(&self.residuals))
            .map(|(t, (n, r))| t.amplitude.powi(2) * (2.0 * r * n + r * r))
            .sum()
    }

    /// Sample `index` of the stream `seed`, with the Gaussian scalars used.
    pub fn sample_with_coeffs(&self, seed: u64, index: u64) -> (CVec, Vec<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut x = CVec::zeros(self.grid);
        let mut g = Vec::with_capacity(self.vectors.len());
        for (t, e) in self.spec.terms.iter().zip(&self.vectors) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let gj = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            x.axpy(gj * t.amplitude, e).expect("model vectors share the grid");
            g.push(gj);
        }
        (x, g)
    }

    pub fn sample(&self, seed: u64, index: u64) -> CVec {
        self.sample_with_coeffs(seed, index).0
    }

    pub fn samples(&self, seed: u64, count: usize) -> Vec<CVec> {
        (0..count as u64).into_par_iter().map(|m| self.sample(seed, m)).collect()
    }

    /// Exact variance of `Re x_{i,n}` under the model, and of `Re (T x)_{i,n}`
    /// when `T E_j = λ_j E_j`.
    fn re_variance(&self, i: usize, n: usize, image: bool) -> f64 {
        self.spec
            .terms
            .iter()
            .zip(&self.vectors)
            .map(|(t, e)| {
                let mut v = t.amplitude * e.get(i, n);
                if image {
                    v *= t.lambda;
                }
                v.norm_sqr() / 2.0
            })
            .sum()
    }
}

/// `(1/M) Σ (x - x̄)(x - x̄)^*`.
pub fn covariance(samples: &[CVec]) -> Result<DMatrix<Complex64>> {
    let first = samples.first().ok_or_else(|| Error::Invalid("no samples".into()))?;
    let d = first.grid().len();
    let m = samples.len() as f64;
    let mut mean = vec![Complex64::new(0.0, 0.0); d];
    for s in samples {
        first.grid().ensure_same(&s.grid())?;
        for (a, v) in mean.iter_mut().zip(s.as_slice()) {
            *a += v / m;
        }
    }
    let chunks: Vec<DMatrix<Complex64>> = samples
        .par_chunks(256)
        .map(|chunk| {
            let mut c = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
            for s in chunk {
                let v: Vec<Complex64> = s.as_slice().iter().zip(&mean).map(|(a, b)| a - b).collect();
                for r in 0..d {
                    if v[r] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for col in 0..d {
                        c[(r, col)] += v[r] * v[col].conj();
                    }
                }
            }
            c
        })
        .collect();
    let mut total = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for c in chunks {
        total += c;
    }
    Ok(total / Complex64::new(m, 0.0))
}

/// `(1/M) Σ x_m y_m^*` between two equally long sample streams.
pub fn cross_covariance(xs: &[CVec], ys: &[CVec]) -> Result<DMatrix<Complex64>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Shape("cross covariance needs two equal non-empty streams".into()));
    }
    let d = xs[0].grid().len();
    let mut c = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for (x, y) in xs.iter().zip(ys) {
        x.grid().ensure_same(&y.grid())?;
        for r in 0..d {
            for col in 0..d {
                c[(r, col)] += x.as_slice()[r] * y.as_slice()[col].conj();
            }
        }
    }
    Ok(c / Complex64::new(xs.len() as f64, 0.0))
}

pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn trace(m: &DMatrix<Complex64>) -> f64 {
    (0..m.nrows()).map(|k| m[(k, k)].re).sum()
}

/// Smallest eigenvalue of the empirical correlation matrix restricted to the
/// coordinates with nonzero variance.
pub fn min_correlation_eigenvalue(cov: &DMatrix<Complex64>) -> f64 {
    let active: Vec<usize> = (0..cov.nrows()).filter(|&k| cov[(k, k)].re > 0.0).collect();
    if active.is_empty() {
        return 0.0;
    }
    let k = active.len();
    let corr = DMatrix::from_fn(k, k, |r, c| {
        let (a, b) = (active[r], active[c]);
        cov[(a, b)] / (cov[(a, a)].re * cov[(b, b)].re).sqrt()
    });
    SymmetricEigen::new(corr).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `sup |F_emp - Φ_σ|` for real samples against a centered normal law.
pub fn ks_statistic(values: &mut [f64], std_dev: f64) -> f64 {
    let normal = Normal::new(0.0, std_dev).expect("positive standard deviation");
    values.sort_by(f64::total_cmp);
    let m = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let f = normal.cdf(*v);
            (f - k as f64 / m).abs().max(((k + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub mode: usize,
    pub level: usize,
    pub statistic_x: f64,
    pub statistic_tx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub covariance_distance: f64,
    pub statistical_budget: f64,
    pub deterministic_budget: f64,
    pub deterministic_dominates: bool,
    pub within_budget: bool,
    pub within_statistical_budget: bool,
    pub ks_threshold: f64,
    pub ks: Vec<KsEntry>,
    pub min_correlation_eigenvalue: f64,
}

pub(crate) fn compare_covariances(xs: &[CVec], ys: &[CVec]) -> Result<(f64, f64, DMatrix<Complex64>)> {
    let cx = covariance(xs)?;
    let cy = covariance(ys)?;
    let dist = frobenius(&(&cx - &cy));
    let tr = trace(&cx);
    Ok((dist, tr, cx))
}

pub fn invariance_test(model: &GaussianModel, op: &OperatorSpec, samples: usize, seed: u64) -> Result<InvarianceReport> {
    if samples < 1000 {
        return Err(Error::Invalid(format!("invariance test needs at least 1000 samples, got {samples}")));
    }
    op.grid().ensure_same(&model.grid)?;
    let xs = model.samples(seed, samples);
    let ys: Vec<CVec> = xs.par_iter().map(|x| op.apply(x)).collect::<Result<_>>()?;
    let (dist, tr, cx) = compare_covariances(&xs, &ys)?;
    let statistical_budget = 5.0 * tr / (samples as f64).sqrt();
    let deterministic_budget = model.deterministic_budget();

    let mut ks = Vec::new();
    let g = model.grid;
    for i in 0..g.modes {
        for n in 0..g.levels {
            let var = model.re_variance(i, n, false);
            if !(var > 0.0) || !var.is_normal() {
                continue;
            }
            let sd = var.sqrt();
            let mut vx: Vec<f64> = xs.iter().map(|x| x.get(i, n).re).collect();
            let mut vy: Vec<f64> = ys.iter().map(|y| y.get(i, n).re).collect();
            ks.push(KsEntry {
                mode: i,
                level: n,
                statistic_x: ks_statistic(&mut vx, sd),
                statistic_tx: ks_statistic(&mut vy, sd),
            });
        }
    }

    Ok(InvarianceReport {
        samples,
        covariance_distance: dist,
        statistical_budget,
        deterministic_budget,
        deterministic_dominates: deterministic_budget > statistical_budget,
        within_budget: dist <= statistical_budget + deterministic_budget,
        within_statistical_budget: dist <= statistical_budget,
        ks_threshold: KS_CONSTANT / (samples as f64).sqrt(),
        ks,
        min_correlation_eigenvalue: min_correlation_eigenvalue(&cx),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `x ↦ Re⟨x, e_{i,n}⟩`
    RealPart { mode: usize, level: usize },
    /// `x ↦ |⟨x, e_{i,n}⟩|²`
    SquaredModulus { mode: usize, level: usize },
}

impl Functional {
    pub fn eval(&self, x: &CVec) -> f64 {
        match *self {
            Functional::RealPart { mode, level } => x.get(mode, level).re,
            Functional::SquaredModulus { mode, level } => x.get(mode, level).norm_sqr(),
        }
    }

    fn coordinate(&self) -> (usize, usize) {
        match *self {
            Functional::RealPart { mode, level } | Functional::SquaredModulus { mode, level } => (mode, level),
        }
    }

    fn name(&self) -> String {
        match *self {
            Functional::RealPart { mode, level } => format!("re_coord({mode},{level})"),
            Functional::SquaredModulus { mode, level } => format!("abs2_coord({mode},{level})"),
        }
    }
}

/// Long-time average of `f(T^l x)` for `x` an exact eigenvector combination:
/// terms sharing an eigenvalue add coherently, distinct unimodular eigenvalues
/// decouple, and only eigenvalue 1 survives in the linear functional.
pub fn rotation_limit(model: &GaussianModel, coeffs: &[Complex64], f: Functional) -> f64 {
    let (i, n) = f.coordinate();
    let mut groups: Vec<(Complex64, Complex64)> = Vec::new();
    for ((t, e), g) in model.spec.terms.iter().zip(&model.vectors).zip(coeffs) {
        let c = g * t.amplitude * e.get(i, n);
        match groups.iter_mut().find(|(l, _)| *l == t.lambda) {
            Some((_, acc)) => *acc += c,
            None => groups.push((t.lambda, c)),
        }
    }
    match f {
        Functional::RealPart { .. } => {
            groups.iter().filter(|(l, _)| *l == Complex64::new(1.0, 0.0)).map(|(_, c)| c.re).sum()
        }
        Functional::SquaredModulus { .. } => groups.iter().map(|(_, c)| c.norm_sqr()).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub functional: String,
    pub orbit_length: usize,
    pub samples: usize,
    pub time_average_mean: f64,
    pub ensemble_mean: f64,
    pub gap: f64,
    /// Standard deviation of the per-orbit time averages.
    pub dispersion: f64,
    /// Standard deviation of `f(x)` over the samples.
    pub ensemble_std: f64,
    /// Largest `|time average - rotation limit|` over the orbits.
    pub rotation_oracle_gap: f64,
    pub consistent_with_ergodic: bool,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    (mean, var.sqrt())
}

/// Time averages `(1/L) Σ_{l<L} f(T^l x)` over `samples` starting points,
/// compared with the ensemble average of `f`. The verdict is
/// `dispersion ≤ ratio · ensemble_std`, which is evidence only.
pub fn birkhoff_test(
    model: &GaussianModel,
    op: &OperatorSpec,
    f: Functional,
    orbit_length: usize,
    samples: usize,
    seed: u64,
    ratio: f64,
) -> Result<BirkhoffReport> {
    if orbit_length == 0 || samples < 2 {
        return Err(Error::Invalid("Birkhoff test needs L ≥ 1 and at least two samples".into()));
    }
    op.grid().ensure_same(&model.grid)?;
    let (i, n) = f.coordinate();
    model.grid.check(i, n)?;
    let rows: Vec<(f64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|m| {
            let (x, g) = model.sample_with_coeffs(seed, m);
            let start = f.eval(&x);
            let mut cur = x;
            let mut next = CVec::zeros(model.grid);
            let mut acc = 0.0;
            for l in 0..orbit_length {
                if l > 0 {
                    op.apply_into(&cur, &mut next)?;
                    std::mem::swap(&mut cur, &mut next);
                }
                acc += f.eval(&cur);
            }
            Ok((acc / orbit_length as f64, start, rotation_limit(model, &g, f)))
        })
        .collect::<Result<_>>()?;
    let averages: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let starts: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (time_average_mean, dispersion) = mean_std(&averages);
    let (ensemble_mean, ensemble_std) = mean_std(&starts);
    let rotation_oracle_gap = rows.iter().map(|r| (r.0 - r.2).abs()).fold(0.0, f64::max);
    Ok(BirkhoffReport {
        functional: f.name(),
        orbit_length,
        samples,
        time_average_mean,
        ensemble_mean,
        gap: (time_average_mean - ensemble_mean).abs(),
        dispersion,
        ensemble_std,
        rotation_oracle_gap,
        consistent_with_ergodic: dispersion <= ratio * ensemble_std,
    })
}
