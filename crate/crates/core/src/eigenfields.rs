//! Eigenvector fields
//!
//! ```text
//! E_i(λ) = e_{i,0} + Σ_{n≥1} Π_{p<n} (λ - μ_p) / w[i][p] · e_{i,n}
//! ```
//!
//! evaluated at the operator truncation, with the certified tail bound, the
//! exact truncation residual, and the triangular spanning diagnostics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::hilbert::{CVec, Grid, WeightFamily};
use crate::operator::OperatorSpec;

/// Below this ratio `|λ - μ_p| / w` products switch to log-magnitude form.
const SMALL_FACTOR: f64 = 1e-3;
const COEFF_LIMIT: f64 = 1e300;

/// `E_i(λ)` for one mode, truncated at `levels`.
#[derive(Debug, Clone, Copy)]
pub struct EigenField<'a> {
    mode: usize,
    mu: &'a [Complex64],
    w: &'a WeightFamily,
    levels: usize,
}

impl<'a> EigenField<'a> {
    pub fn new(mode: usize, mu: &'a [Complex64], w: &'a WeightFamily, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Invalid("eigenfield needs at least one level".into()));
        }
        if mu.len() < levels {
            return Err(Error::Range(format!("{levels} levels need {levels} eigenvalues, have {}", mu.len())));
        }
        if !w.covers(mode + 1, levels) {
            return Err(Error::Range(format!("weights do not cover mode {mode} up to level {levels}")));
        }
        Ok(EigenField { mode, mu, w, levels })
    }

    pub fn for_operator(op: &'a OperatorSpec, mode: usize) -> Result<Self> {
        op.grid().check(mode, 0)?;
        Self::new(mode, op.mu(), op.weights(), op.grid().levels)
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Coefficients on levels `0..levels`.
    pub fn coefficients(&self, lambda: Complex64) -> Vec<Complex64> {
        let w = &self.w.mode(self.mode)[..self.levels];
        let factors: Vec<Complex64> =
            (0..self.levels - 1).map(|p| (lambda - self.mu[p]) / w[p]).collect();
        let mut out = Vec::with_capacity(self.levels);
        out.push(Complex64::new(1.0, 0.0));
        if factors.iter().any(|f| f.norm() < SMALL_FACTOR) {
            let (mut log_mag, mut phase) = (0.0f64, 0.0f64);
            for f in &factors {
                log_mag += f.norm().ln();
                phase += f.arg();
                out.push(Complex64::from_polar(log_mag.exp(), phase));
            }
        } else {
            let mut c = Complex64::new(1.0, 0.0);
            for f in &factors {
                c *= f;
                out.push(c);
            }
        }
        out
    }

    /// `Π_{p<n} (λ - μ_p) / w[i][p]`.
    pub fn eigen_coeff(&self, n: usize, lambda: Complex64) -> Result<Complex64> {
        if n >= self.levels {
            return Err(Error::Range(format!("level {n} beyond truncation {}", self.levels)));
        }
        Ok(self.coefficients(lambda)[n])
    }

    /// `E_i(λ)` placed on mode `i` of `grid`.
    pub fn eval_e(&self, lambda: Complex64, grid: Grid) -> Result<CVec> {
        grid.check(self.mode, self.levels - 1)?;
        if grid.levels != self.levels {
            return Err(Error::Shape(format!("grid has {} levels, field {}", grid.levels, self.levels)));
        }
        let coeffs = self.coefficients(lambda);
        if let Some(bad) = coeffs.iter().find(|c| !(c.norm() <= COEFF_LIMIT)) {
            return Err(Error::NumericRange(format!("eigen coefficient {bad} at λ = {lambda}")));
        }
        let mut v = CVec::zeros(grid);
        v.mode_mut(self.mode).copy_from_slice(&coeffs);
        Ok(v)
    }

    /// `Σ_{n ≥ from} |c_n(λ)|²` over the truncation.
    pub fn tail_norm_sqr(&self, lambda: Complex64, from: usize) -> f64 {
        self.coefficients(lambda).iter().skip(from).map(|c| c.norm_sqr()).sum()
    }

    /// `|λ - μ_{N-1}| · |c_{N-1}(λ)|`: the one term the truncation drops.
    pub fn residual_closed_form(&self, lambda: Complex64) -> f64 {
        let top = self.levels - 1;
        (lambda - self.mu[top]).norm() * self.coefficients(lambda)[top].norm()
    }

    /// Rigorous Lipschitz constant (squared) of the partial sum on levels
    /// `0..=cutoff` over points whose distance to every `μ_p` is at most `diam`.
    pub fn partial_sum_lipschitz_sqr(&self, cutoff: usize, diam: f64) -> f64 {
        let w = self.w.mode(self.mode);
        let mut total = 0.0;
        let mut inv_w = 1.0;
        for n in 1..=cutoff.min(self.levels - 1) {
            inv_w /= w[n - 1];
            let lip = n as f64 * diam.powi(n as i32 - 1) * inv_w;
            total += lip * lip;
        }
        total
    }
}

/// `‖T E_i(λ) - λ E_i(λ)‖`, with `E_i(λ)` and `T` evaluated in exact rational
/// arithmetic from the f64 inputs. The result equals
/// [`EigenField::residual_closed_form`] up to the final rounding.
pub fn residual(op: &OperatorSpec, field: &EigenField<'_>, lambda: Complex64) -> Result<f64> {
    if field.levels != op.grid().levels {
        return Err(Error::Shape(format!("field has {} levels, operator {}", field.levels, op.grid().levels)));
    }
    op.grid().check(field.mode, 0)?;
    let w = op.weights().mode(field.mode);
    let defect = exact::eigen_defect(op.mu(), w, lambda)?;
    Ok(exact::stable_norm(&defect))
}

/// The same defect measured with f64 arithmetic through [`OperatorSpec::apply`].
pub fn residual_f64(op: &OperatorSpec, field: &EigenField<'_>, lambda: Complex64) -> Result<f64> {
    let e = field.eval_e(lambda, op.grid())?;
    let te = op.apply(&e)?;
    te.distance(&(lambda * &e))
}

/// Columns are `E_i(μ_j)` on levels `0..n`; upper triangular with unit first row.
#[derive(Debug, Clone)]
pub struct SpanningMatrix {
    pub matrix: DMatrix<Complex64>,
    pub min_abs_diag: f64,
}

impl SpanningMatrix {
    pub fn build(mu: &[Complex64], w: &WeightFamily, mode: usize, n: usize) -> Result<Self> {
        let field = EigenField::new(mode, mu, w, n)?;
        let mut matrix = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for j in 0..n {
            let col = field.coefficients(mu[j]);
            for (r, v) in col.iter().enumerate().take(j + 1) {
                matrix[(r, j)] = *v;
            }
        }
        let min_abs_diag = (0..n).map(|j| matrix[(j, j)].norm()).fold(f64::INFINITY, f64::min);
        Ok(SpanningMatrix { matrix, min_abs_diag })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_invertible(&self, tol: f64) -> bool {
        self.min_abs_diag > tol
    }

    /// Back substitution. Fails on an exactly zero pivot.
    pub fn solve(&self, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let n = self.size();
        if rhs.len() != n {
            return Err(Error::Shape(format!("rhs of length {} for size {n}", rhs.len())));
        }
        let mut x = DVector::from_element(n, Complex64::new(0.0, 0.0));
        for r in (0..n).rev() {
            let pivot = self.matrix[(r, r)];
            if pivot.norm() == 0.0 {
                return Err(Error::NumericRange(format!("zero pivot at level {r}")));
            }
            let mut acc = rhs[r];
            for c in r + 1..n {
                acc -= self.matrix[(r, c)] * x[c];
            }
            x[r] = acc / pivot;
        }
        Ok(x)
    }

    /// Normwise backward error `‖b - A x‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub fn backward_error(&self, x: &DVector<Complex64>, rhs: &DVector<Complex64>) -> f64 {
        let r = rhs - &self.matrix * x;
        let inf = |v: &DVector<Complex64>| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let a_inf = self
            .matrix
            .row_iter()
            .map(|row| row.iter().map(|c| c.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        inf(&r) / (a_inf * inf(x) + inf(rhs))
    }

    /// Solves against every standard basis vector; returns the worst backward error.
    pub fn solve_standard_basis(&self) -> Result<f64> {
        let n = self.size();
        let mut worst = 0.0f64;
        for k in 0..n {
            let mut b = DVector::from_element(n, Complex64::new(0.0, 0.0));
            b[k] = Complex64::new(1.0, 0.0);
            let x = self.solve(&b)?;
            worst = worst.max(self.backward_error(&x, &b));
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub pairs: usize,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub max_separation: f64,
}

/// Largest `‖E_i(λ) - E_i(λ')‖` over the given pairs.
pub fn continuity_probe(field: &EigenField<'_>, pairs: &[(Complex64, Complex64)]) -> ContinuityReport {
    let mut max_deviation = 0.0f64;
    let mut sum = 0.0;
    let mut max_separation = 0.0f64;
    for &(a, b) in pairs {
        let ca = field.coefficients(a);
        let cb = field.coefficients(b);
        let d = ca.iter().zip(&cb).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        max_deviation = max_deviation.max(d);
        sum += d;
        max_separation = max_separation.max((a - b).norm());
    }
    ContinuityReport {
        pairs: pairs.len(),
        max_deviation,
        mean_deviation: if pairs.is_empty() { 0.0 } else { sum / pairs.len() as f64 },
        max_separation,
    }
}

/// Tail bound `Σ_{n ≥ 2^{k'}} |c_{i,n}(λ)|² < 2^{-(k'+1)}` over sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub samples: usize,
    pub checks: usize,
    pub violations: usize,
    /// Largest `tail / bound`.
    pub worst_ratio: f64,
}

/// Checks the tail bound at `samples` points drawn from the depth-`depth`
/// approximation of `K`, for every `i ≤ k' ≤ depth` with `k' ≥ 1` and
/// `2^{k'} < levels`.
pub fn tail_bound_check(
    seq: &crate::spectrum::EigenSequence,
    w: &WeightFamily,
    levels: usize,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<TailCheck> {
    let points = crate::spectrum::sample_k_many(seq, depth, samples, seed)?;
    let mut out = TailCheck { samples, checks: 0, violations: 0, worst_ratio: 0.0 };
    for i in 0..=depth {
        let field = EigenField::new(i, &seq.mu, w, levels)?;
        for lam in &points {
            let coeffs = field.coefficients(*lam);
            for kp in i.max(1)..=depth {
                let from = 1usize << kp;
                if from >= levels {
                    continue;
                }
                let tail: f64 = coeffs[from..].iter().map(|c| c.norm_sqr()).sum();
                let ratio = tail / (-((kp + 1) as f64)).exp2();
                out.checks += 1;
                if !(ratio < 1.0) {
                    out.violations += 1;
                }
                out.worst_ratio = out.worst_ratio.max(ratio);
            }
        }
    }
    Ok(out)
}
