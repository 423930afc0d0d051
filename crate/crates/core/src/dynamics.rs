//! Orbit simulation and the finite-horizon statistics of recurrence, lower
//! visit density and periodicity.
//!
//! Truncated roots-of-unity operators are exactly periodic: `T^M` is the
//! identity on the truncation. That is a property of the finite model, not of
//! the infinite-dimensional dynamics.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenfields::{EigenField, SpanningMatrix};
use crate::error::{Error, Result};
use crate::hilbert::{CVec, Grid, WeightFamily};
use crate::operator::OperatorSpec;
use crate::spectrum::{EigenSequence, SequenceMode};

pub const DEFAULT_BURN_IN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub center: CVec,
    pub radius: f64,
}

/// Visit counts and running frequencies of one orbit.
///
/// Step `n` runs over `0..steps` and refers to `T^n x`. At checkpoint `c` the
/// visit count covers steps `n < c`, and the frequency is that count over `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitStats {
    pub steps: usize,
    pub targets: Vec<Target>,
    pub checkpoints: Vec<usize>,
    /// `visits[t][c]`
    pub visits: Vec<Vec<usize>>,
    pub running_frequency: Vec<Vec<f64>>,
    pub norm_max: f64,
    pub norm_final: f64,
    /// Least-squares slope of `ln ‖T^n x‖` against `n`.
    pub log_norm_slope: f64,
}

/// `count` checkpoints evenly spaced in `1..=steps`, always ending at `steps`.
pub fn even_checkpoints(steps: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, steps.max(1));
    let mut out: Vec<usize> = (1..=count).map(|j| (j * steps).div_ceil(count)).collect();
    out.dedup();
    out
}

fn check_checkpoints(steps: usize, checkpoints: &[usize]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Invalid("no checkpoints".into()));
    }
    if checkpoints.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Invalid("checkpoints must be strictly increasing".into()));
    }
    if checkpoints[0] == 0 || *checkpoints.last().unwrap() > steps {
        return Err(Error::Range(format!("checkpoints must lie in 1..={steps}")));
    }
    Ok(())
}

/// Online least-squares slope.
#[derive(Default)]
struct Slope {
    count: f64,
    mean_x: f64,
    mean_y: f64,
    cxy: f64,
    cxx: f64,
}

impl Slope {
    fn push(&mut self, x: f64, y: f64) {
        self.count += 1.0;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.count;
        self.mean_y += (y - self.mean_y) / self.count;
        self.cxy += dx * (y - self.mean_y);
        self.cxx += dx * (x - self.mean_x);
    }

    fn value(&self) -> f64 {
        if self.cxx > 0.0 {
            self.cxy / self.cxx
        } else {
            0.0
        }
    }
}

pub fn run_orbit(
    op: &OperatorSpec,
    x0: &CVec,
    steps: usize,
    targets: &[Target],
    checkpoints: &[usize],
) -> Result<OrbitStats> {
    if steps == 0 {
        return Err(Error::Invalid("orbit needs at least one step".into()));
    }
    if let Some(t) = targets.iter().find(|t| !(t.radius > 0.0)) {
        return Err(Error::Invalid(format!("target radius must be positive, got {}", t.radius)));
    }
    op.grid().ensure_same(&x0.grid())?;
    for t in targets {
        op.grid().ensure_same(&t.center.grid())?;
    }
    check_checkpoints(steps, checkpoints)?;

    let mut visits = vec![Vec::with_capacity(checkpoints.len()); targets.len()];
    let mut counts = vec![0usize; targets.len()];
    let mut cur = x0.clone();
    let mut next = CVec::zeros(op.grid());
    let mut slope = Slope::default();
    let mut norm_max = 0.0f64;
    let mut norm_final = 0.0;
    let mut cp = 0;

    for n in 0..steps {
        if n > 0 {
            op.apply_into(&cur, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
        }
        let norm = cur.norm();
        if !norm.is_finite() || norm > 1e300 {
            return Err(Error::NumericRange(format!("orbit norm {norm:e} at step {n}")));
        }
        norm_max = norm_max.max(norm);
        norm_final = norm;
        if norm > 0.0 {
            slope.push(n as f64, norm.ln());
        }
        for (t, target) in targets.iter().enumerate() {
            if cur.distance(&target.center)? <= target.radius {
                counts[t] += 1;
            }
        }
        if n + 1 == checkpoints[cp] {
            for t in 0..targets.len() {
                visits[t].push(counts[t]);
            }
            cp += 1;
            if cp == checkpoints.len() {
                break;
            }
        }
    }

    let running_frequency = frequencies(&visits, checkpoints);
    Ok(OrbitStats {
        steps,
        targets: targets.to_vec(),
        checkpoints: checkpoints.to_vec(),
        visits,
        running_frequency,
        norm_max,
        norm_final,
        log_norm_slope: slope.value(),
    })
}

/// Independent orbits in parallel over one operator.
pub fn run_orbits(
    op: &OperatorSpec,
    starts: &[CVec],
    steps: usize,
    targets: &[Target],
    checkpoints: &[usize],
) -> Result<Vec<OrbitStats>> {
    starts.par_iter().map(|x| run_orbit(op, x, steps, targets, checkpoints)).collect()
}

fn frequencies(visits: &[Vec<usize>], checkpoints: &[usize]) -> Vec<Vec<f64>> {
    visits
        .iter()
        .map(|v| v.iter().zip(checkpoints).map(|(a, c)| *a as f64 / *c as f64).collect())
        .collect()
}

impl OrbitStats {
    /// Statistics of a prescribed single-target visit sequence, for checking
    /// the counting logic against closed forms.
    pub fn from_visit_sequence(hits: &[bool], checkpoints: &[usize]) -> Result<Self> {
        check_checkpoints(hits.len(), checkpoints)?;
        let mut counts = Vec::with_capacity(checkpoints.len());
        let mut acc = 0;
        let mut cp = 0;
        for (n, h) in hits.iter().enumerate() {
            acc += *h as usize;
            if cp < checkpoints.len() && n + 1 == checkpoints[cp] {
                counts.push(acc);
                cp += 1;
            }
        }
        let visits = vec![counts];
        Ok(OrbitStats {
            steps: hits.len(),
            targets: Vec::new(),
            running_frequency: frequencies(&visits, checkpoints),
            checkpoints: checkpoints.to_vec(),
            visits,
            norm_max: 0.0,
            norm_final: 0.0,
            log_norm_slope: 0.0,
        })
    }
}

/// Minimum running frequency over checkpoints past `burn_in · steps`: a
/// conservative finite-horizon stand-in for the lower density.
pub fn lower_density_estimate(stats: &OrbitStats, target: usize, burn_in: f64) -> Result<f64> {
    if stats.checkpoints.len() < 2 {
        return Err(Error::Range("lower density needs at least two checkpoints".into()));
    }
    let freq = stats
        .running_frequency
        .get(target)
        .ok_or_else(|| Error::Range(format!("no target {target}")))?;
    let cut = burn_in * stats.steps as f64;
    stats
        .checkpoints
        .iter()
        .zip(freq)
        .filter(|(c, _)| **c as f64 > cut)
        .map(|(_, f)| *f)
        .reduce(f64::min)
        .ok_or_else(|| Error::Range(format!("no checkpoint after burn-in {cut}")))
}

/// One summand `coefficient · E_mode(μ_level)` of a periodic point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub mode: usize,
    pub level: usize,
    pub coefficient: Complex64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// `x = Σ coefficient · E_i(μ_{N'})` and its period, the lcm of the orders of
/// the `μ_{N'}` involved.
pub fn make_periodic_point(op: &OperatorSpec, seq: &EigenSequence, picks: &[Pick]) -> Result<(CVec, u64)> {
    if seq.mode != SequenceMode::RootsOfUnity {
        return Err(Error::UnsupportedMode("periodic points need a roots-of-unity sequence".into()));
    }
    let orders = seq
        .orders
        .as_ref()
        .ok_or_else(|| Error::Invalid("roots-of-unity sequence without orders".into()))?;
    let grid = op.grid();
    let mut x = CVec::zeros(grid);
    let mut period = 1u64;
    for pick in picks {
        if pick.level + 2 > grid.levels {
            return Err(Error::Range(format!(
                "eigenvalue index {} exceeds N - 2 = {}",
                pick.level,
                grid.levels - 2
            )));
        }
        if op.mu()[pick.level] != seq.mu[pick.level] {
            return Err(Error::Invalid("operator diagonal differs from the sequence".into()));
        }
        let field = EigenField::for_operator(op, pick.mode)?;
        let e = field.eval_e(op.mu()[pick.level], grid)?;
        x.axpy(pick.coefficient, &e)?;
        period = lcm(period, orders[pick.level]);
    }
    Ok((x, period))
}

/// `‖T^M x - x‖ / ‖x‖` by `M` literal applications.
pub fn period_defect(op: &OperatorSpec, x: &CVec, period: u64) -> Result<f64> {
    let y = op.power_apply(x, period as usize)?;
    let norm = x.norm();
    let d = y.distance(x)?;
    Ok(if norm > 0.0 { d / norm } else { d })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCoverage {
    pub modes: usize,
    pub levels: usize,
    pub min_abs_diag: f64,
    pub worst_backward_error: f64,
    pub spanning: bool,
}

/// Checks that, on every mode of `grid`, the eigenvectors at the first
/// `grid.levels` roots of unity span the truncation.
pub fn density_of_periodic_directions(
    seq: &EigenSequence,
    w: &WeightFamily,
    grid: Grid,
    tol: f64,
) -> Result<PeriodicCoverage> {
    if seq.mode != SequenceMode::RootsOfUnity {
        return Err(Error::UnsupportedMode("periodic directions need a roots-of-unity sequence".into()));
    }
    density_over_modes(&seq.mu, w, grid.modes, grid.levels, tol)
}

fn density_over_modes(mu: &[Complex64], w: &WeightFamily, modes: usize, levels: usize, tol: f64) -> Result<PeriodicCoverage> {
    let mut min_abs_diag = f64::INFINITY;
    let mut worst = 0.0f64;
    let mut solvable = true;
    for i in 0..modes {
        let s = SpanningMatrix::build(mu, w, i, levels)?;
        min_abs_diag = min_abs_diag.min(s.min_abs_diag);
        match s.solve_standard_basis() {
            Ok(e) => worst = worst.max(e),
            Err(_) => solvable = false,
        }
    }
    Ok(PeriodicCoverage {
        modes,
        levels,
        min_abs_diag,
        worst_backward_error: if solvable { worst } else { f64::INFINITY },
        spanning: solvable && min_abs_diag > tol,
    })
}

/// `T^m x` through the eigenbasis: expand each mode in the `E_i(μ_j)`, scale
/// by `μ_j^m`, and resum. Only an oracle for small truncations; the
/// eigenbasis is badly conditioned as `N` grows.
pub fn power_via_eigenbasis(op: &OperatorSpec, x: &CVec, m: u32) -> Result<CVec> {
    let grid = op.grid();
    grid.ensure_same(&x.grid())?;
    let mut out = CVec::zeros(grid);
    for i in 0..grid.modes {
        let s = SpanningMatrix::build(op.mu(), op.weights(), i, grid.levels)?;
        let a = s.solve(&DVector::from_column_slice(x.mode(i)))?;
        let scaled = DVector::from_iterator(
            grid.levels,
            a.iter().zip(op.mu()).map(|(c, mu)| c * mu.powu(m)),
        );
        let y = &s.matrix * scaled;
        out.mode_mut(i).copy_from_slice(y.as_slice());
    }
    Ok(out)
}
