//! Weighted `ℓ^p` targets `X` and the factor map `J e_{i,n} = x_{i,n} = s_{i,n} f_{i,n}`.
//!
//! Vectors of `X` are stored as coefficient arrays against the unit coordinate
//! vectors `f_{i,n}`, on the same grid as `H`. The operator on `X` carries the
//! biorthogonal scaling so that `J T̄ = T_X J` holds slot by slot.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{compare_covariances, covariance, GaussianModel};
use crate::hilbert::{CVec, Grid, WeightFamily};
use crate::operator::OperatorSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanachTarget {
    pub p: f64,
    grid: Grid,
    scales: Vec<f64>,
}

impl BanachTarget {
    pub fn from_fn(p: f64, grid: Grid, mut s: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Invalid(format!("exponent p must lie in [1, ∞), got {p}")));
        }
        let mut scales = Vec::with_capacity(grid.len());
        for i in 0..grid.modes {
            for n in 0..grid.levels {
                let v = s(i, n);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Invalid(format!("scale s[{i}][{n}] = {v} must be positive")));
                }
                scales.push(v);
            }
        }
        Ok(BanachTarget { p, grid, scales })
    }

    /// `s_{i,n} = 2^{-(i+n+1)}`.
    pub fn default_scales(p: f64, grid: Grid) -> Result<Self> {
        Self::from_fn(p, grid, |i, n| 0.5f64.powi((i + n + 1) as i32))
    }

    /// `s ≡ 1`: with `p = 2` this is `H` itself.
    pub fn unit(p: f64, grid: Grid) -> Result<Self> {
        Self::from_fn(p, grid, |_, _| 1.0)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn scale(&self, i: usize, n: usize) -> f64 {
        self.scales[self.grid.index(i, n)]
    }

    pub fn set_scale(&mut self, i: usize, n: usize, value: f64) -> Result<()> {
        self.grid.check(i, n)?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Invalid(format!("scale {value} must be positive")));
        }
        let k = self.grid.index(i, n);
        self.scales[k] = value;
        Ok(())
    }

    /// `‖x*_{i,n}‖* = 1 / s_{i,n}`.
    pub fn dual_norm(&self, i: usize, n: usize) -> f64 {
        1.0 / self.scale(i, n)
    }

    /// `(Σ s²)^{1/2}`, an upper bound for `‖J‖` from `H` into `ℓ²`.
    pub fn scale_l2(&self) -> f64 {
        self.scales.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn max_scale(&self) -> f64 {
        self.scales.iter().copied().fold(0.0, f64::max)
    }

    pub fn banach_norm(&self, xi: &CVec) -> f64 {
        let p = self.p;
        if p == 2.0 {
            return xi.norm();
        }
        xi.as_slice().iter().map(|v| v.norm().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    pub fn apply_j(&self, x: &CVec) -> Result<CVec> {
        self.grid.ensure_same(&x.grid())?;
        let coeff = x.as_slice().iter().zip(&self.scales).map(|(v, s)| v * s).collect();
        CVec::from_vec(self.grid, coeff)
    }

    /// The unique preimage under `J`.
    pub fn solve_j(&self, xi: &CVec) -> Result<CVec> {
        self.grid.ensure_same(&xi.grid())?;
        let coeff = xi.as_slice().iter().zip(&self.scales).map(|(v, s)| v / s).collect();
        CVec::from_vec(self.grid, coeff)
    }

    /// `(T_X ξ)[i][n] = μ_n ξ[i][n] + w[i][n] · s_{i,n} / s_{i,n+1} · ξ[i][n+1]`.
    pub fn apply_t_x(&self, mu: &[Complex64], w: &WeightFamily, xi: &CVec) -> Result<CVec> {
        self.grid.ensure_same(&xi.grid())?;
        let g = self.grid;
        if mu.len() < g.levels || !w.covers(g.modes, g.levels) {
            return Err(Error::Shape(format!("diagonal or weights do not cover grid {}x{}", g.modes, g.levels)));
        }
        let top = g.levels - 1;
        let mut out = CVec::zeros(g);
        for i in 0..g.modes {
            let src = xi.mode(i);
            let wi = w.mode(i);
            let dst = out.mode_mut(i);
            for n in 0..top {
                let carried = wi[n] * (self.scale(i, n) / self.scale(i, n + 1));
                dst[n] = mu[n] * src[n] + carried * src[n + 1];
            }
            dst[top] = mu[top] * src[top];
        }
        Ok(out)
    }
}

/// `‖J_a(T̄ x) - T_X^{b}(J_a x)‖` in the norm of `b`. Equal targets give the
/// intertwining defect; distinct ones model a corrupted side.
pub fn intertwine_defect(j_side: &BanachTarget, t_side: &BanachTarget, op: &OperatorSpec, x: &CVec) -> Result<f64> {
    j_side.grid.ensure_same(&t_side.grid)?;
    op.grid().ensure_same(&j_side.grid)?;
    let lhs = j_side.apply_j(&op.apply(x)?)?;
    let rhs = t_side.apply_t_x(op.mu(), op.weights(), &j_side.apply_j(x)?)?;
    Ok(t_side.banach_norm(&(&lhs - &rhs)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertwineReport {
    pub samples: usize,
    pub basis_max_defect: f64,
    pub random_max_defect: f64,
    /// Largest `defect / (1 + ‖J x‖)` over the random vectors.
    pub random_max_relative: f64,
}

pub fn check_intertwine(target: &BanachTarget, op: &OperatorSpec, samples: usize, seed: u64) -> Result<IntertwineReport> {
    check_intertwine_between(target, target, op, samples, seed)
}

pub fn check_intertwine_between(
    j_side: &BanachTarget,
    t_side: &BanachTarget,
    op: &OperatorSpec,
    samples: usize,
    seed: u64,
) -> Result<IntertwineReport> {
    let g = op.grid();
    let mut basis_max_defect = 0.0f64;
    for i in 0..g.modes {
        for n in 0..g.levels {
            let e = CVec::basis_vector(g, i, n)?;
            basis_max_defect = basis_max_defect.max(intertwine_defect(j_side, t_side, op, &e)?);
        }
    }
    let rows: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m);
            let x = CVec::from_fn(g, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let d = intertwine_defect(j_side, t_side, op, &x)?;
            let jx = t_side.banach_norm(&j_side.apply_j(&x)?);
            Ok((d, d / (1.0 + jx)))
        })
        .collect::<Result<_>>()?;
    Ok(IntertwineReport {
        samples,
        basis_max_defect,
        random_max_defect: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        random_max_relative: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearityReport {
    /// `increments[n - 1] = Σ_i w[i][n-1] ‖x_{i,n-1}‖ ‖x*_{i,n}‖*`
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Largest ratio of successive increments.
    pub max_ratio: f64,
    pub converging: bool,
}

/// Ratio below which the increments count as geometrically decaying.
pub const NUCLEAR_RATIO: f64 = 0.9;

/// Partial sums of the nuclearity series for `n = 1..=n_max`.
pub fn nuclearity_partial_sums(target: &BanachTarget, w: &WeightFamily, n_max: usize) -> Result<NuclearityReport> {
    let g = target.grid;
    if n_max == 0 || n_max >= g.levels {
        return Err(Error::Range(format!("n_max must lie in 1..{}", g.levels)));
    }
    if !w.covers(g.modes, n_max) {
        return Err(Error::Range(format!("weights do not cover {} modes and {n_max} levels", g.modes)));
    }
    let increments: Vec<f64> = (1..=n_max)
        .map(|n| {
            (0..g.modes)
                .map(|i| w.get(i, n - 1) * target.scale(i, n - 1) * target.dual_norm(i, n))
                .sum()
        })
        .collect();
    let partial_sums = increments
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let max_ratio = increments.windows(2).map(|p| p[1] / p[0]).fold(0.0, f64::max);
    Ok(NuclearityReport { increments, partial_sums, max_ratio, converging: max_ratio < NUCLEAR_RATIO })
}

/// `a (1 - r^n) / (1 - r)`.
pub fn geometric_partial_sum(first: f64, ratio: f64, n: usize) -> f64 {
    if ratio == 1.0 {
        first * n as f64
    } else {
        first * (1.0 - ratio.powi(n as i32)) / (1.0 - ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub samples: usize,
    pub covariance_distance: f64,
    pub statistical_budget: f64,
    pub deterministic_budget: f64,
    pub within_budget: bool,
    pub source_rank: usize,
    pub pushed_rank: usize,
}

/// Numerical rank of a covariance: eigenvalues of its correlation matrix above
/// `rel_tol`.
pub fn covariance_rank(cov: &nalgebra::DMatrix<Complex64>, rel_tol: f64) -> usize {
    let active: Vec<usize> = (0..cov.nrows()).filter(|&k| cov[(k, k)].re > 0.0).collect();
    let k = active.len();
    if k == 0 {
        return 0;
    }
    let corr = nalgebra::DMatrix::from_fn(k, k, |r, c| {
        let (a, b) = (active[r], active[c]);
        cov[(a, b)] / (cov[(a, a)].re * cov[(b, b)].re).sqrt()
    });
    let eig = nalgebra::SymmetricEigen::new(corr).eigenvalues;
    let top = eig.iter().copied().fold(0.0, f64::max);
    eig.iter().filter(|v| **v > rel_tol * top).count()
}

/// Samples from `model`, pushes them through `J`, and compares the covariances
/// of `J x` and `T_X J x`.
pub fn pushforward_demo(
    model: &GaussianModel,
    op: &OperatorSpec,
    target: &BanachTarget,
    samples: usize,
    seed: u64,
) -> Result<PushforwardReport> {
    op.grid().ensure_same(&target.grid)?;
    let xs = model.samples(seed, samples);
    let pushed: Vec<CVec> = xs.par_iter().map(|x| target.apply_j(x)).collect::<Result<_>>()?;
    let images: Vec<CVec> = pushed
        .par_iter()
        .map(|xi| target.apply_t_x(op.mu(), op.weights(), xi))
        .collect::<Result<_>>()?;
    let (dist, tr, pushed_cov) = compare_covariances(&pushed, &images)?;
    let statistical_budget = 5.0 * tr / (samples as f64).sqrt();
    let deterministic_budget = target.max_scale().powi(2) * model.deterministic_budget();
    let source_cov = covariance(&xs)?;
    Ok(PushforwardReport {
        samples,
        covariance_distance: dist,
        statistical_budget,
        deterministic_budget,
        within_budget: dist <= statistical_budget + deterministic_budget,
        source_rank: covariance_rank(&source_cov, 1e-9),
        pushed_rank: covariance_rank(&pushed_cov, 1e-9),
    })
}
