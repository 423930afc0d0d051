//! Truncated model of `H = ⊕ H_n`: coefficient arrays over the (mode, level)
//! grid with the basis `e_{i,n}`, the ℓ² inner product, and the positive weight
//! families driving the backward shift.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index set of a truncation: modes `i < modes`, levels `n < levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub modes: usize,
    pub levels: usize,
}

impl Grid {
    pub fn new(modes: usize, levels: usize) -> Result<Self> {
        if modes < 1 {
            return Err(Error::Invalid(format!("grid needs at least one mode, got {modes}")));
        }
        if levels < 2 {
            return Err(Error::Invalid(format!(
                "grid needs at least two levels for a shift step, got {levels}"
            )));
        }
        Ok(Grid { modes, levels })
    }

    pub fn len(&self) -> usize {
        self.modes * self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, n: usize) -> usize {
        i * self.levels + n
    }

    pub fn check(&self, i: usize, n: usize) -> Result<()> {
        if i >= self.modes || n >= self.levels {
            return Err(Error::Range(format!(
                "(i={i}, n={n}) outside grid {}x{}",
                self.modes, self.levels
            )));
        }
        Ok(())
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!(
                "grid {}x{} vs {}x{}",
                self.modes, self.levels, other.modes, other.levels
            )));
        }
        Ok(())
    }
}

/// A finite element of `H`: one complex coefficient per `(i, n)`, stored
/// mode-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVec {
    grid: Grid,
    coeff: Vec<Complex64>,
}

impl CVec {
    pub fn zeros(grid: Grid) -> Self {
        CVec { grid, coeff: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn basis_vector(grid: Grid, i: usize, n: usize) -> Result<Self> {
        grid.check(i, n)?;
        let mut v = CVec::zeros(grid);
        v.coeff[grid.index(i, n)] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut coeff = Vec::with_capacity(grid.len());
        for i in 0..grid.modes {
            for n in 0..grid.levels {
                coeff.push(f(i, n));
            }
        }
        CVec { grid, coeff }
    }

    pub fn from_vec(grid: Grid, coeff: Vec<Complex64>) -> Result<Self> {
        if coeff.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a grid of {}",
                coeff.len(),
                grid.len()
            )));
        }
        if coeff.iter().any(|c| !c.is_finite()) {
            return Err(Error::NumericRange("non-finite coefficient".into()));
        }
        Ok(CVec { grid, coeff })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeff
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.coeff
    }

    #[inline]
    pub fn get(&self, i: usize, n: usize) -> Complex64 {
        self.coeff[self.grid.index(i, n)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, n: usize, value: Complex64) {
        let k = self.grid.index(i, n);
        self.coeff[k] = value;
    }

    /// Levels `0..N` of mode `i`.
    pub fn mode(&self, i: usize) -> &[Complex64] {
        let start = self.grid.index(i, 0);
        &self.coeff[start..start + self.grid.levels]
    }

    pub fn mode_mut(&mut self, i: usize) -> &mut [Complex64] {
        let start = self.grid.index(i, 0);
        let levels = self.grid.levels;
        &mut self.coeff[start..start + levels]
    }

    /// `Σ x[i][n] · conj(y[i][n])`.
    pub fn inner(&self, other: &CVec) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.coeff.iter().zip(&other.coeff).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeff.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, a: Complex64) -> CVec {
        CVec { grid: self.grid, coeff: self.coeff.iter().map(|c| c * a).collect() }
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: Complex64, x: &CVec) -> Result<()> {
        self.grid.ensure_same(&x.grid)?;
        for (s, v) in self.coeff.iter_mut().zip(&x.coeff) {
            *s += a * v;
        }
        Ok(())
    }

    pub fn distance(&self, other: &CVec) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .coeff
            .iter()
            .zip(&other.coeff)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

impl Add for &CVec {
    type Output = CVec;

    /// Panics on grid mismatch; use [`CVec::axpy`] for the checked form.
    fn add(self, rhs: &CVec) -> CVec {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in CVec addition");
        CVec {
            grid: self.grid,
            coeff: self.coeff.iter().zip(&rhs.coeff).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CVec {
    type Output = CVec;

    fn sub(self, rhs: &CVec) -> CVec {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in CVec subtraction");
        CVec {
            grid: self.grid,
            coeff: self.coeff.iter().zip(&rhs.coeff).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&CVec> for Complex64 {
    type Output = CVec;

    fn mul(self, rhs: &CVec) -> CVec {
        rhs.scale(self)
    }
}

/// Positive weights `w[i][n]` with a recorded uniform upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFamily {
    grid: Grid,
    w: Vec<f64>,
    sup_bound: f64,
}

impl WeightFamily {
    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut w = Vec::with_capacity(grid.len());
        for i in 0..grid.modes {
            for n in 0..grid.levels {
                w.push(f(i, n));
            }
        }
        Self::from_parts(grid, w)
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::from_fn(grid, |_, _| value)
    }

    /// `w[i][n] = ratio^n`.
    pub fn geometric(grid: Grid, ratio: f64) -> Result<Self> {
        Self::from_fn(grid, |_, n| ratio.powi(n as i32))
    }

    /// Rows are modes, columns are levels.
    pub fn from_table(rows: &[Vec<f64>]) -> Result<Self> {
        let modes = rows.len();
        let levels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != levels) {
            return Err(Error::Shape("ragged weight table".into()));
        }
        let grid = Grid::new(modes, levels)?;
        Self::from_parts(grid, rows.concat())
    }

    fn from_parts(grid: Grid, w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Invalid(format!("weights must be positive and finite, got {bad}")));
        }
        let sup_bound = w.iter().copied().fold(0.0, f64::max);
        Ok(WeightFamily { grid, w, sup_bound })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    #[inline]
    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.w[self.grid.index(i, n)]
    }

    pub fn mode(&self, i: usize) -> &[f64] {
        let start = self.grid.index(i, 0);
        &self.w[start..start + self.grid.levels]
    }

    pub fn covers(&self, modes: usize, levels: usize) -> bool {
        self.grid.modes >= modes && self.grid.levels >= levels
    }

    /// Sub-family on the leading `grid.modes × grid.levels` block.
    pub fn restrict(&self, grid: Grid) -> Result<Self> {
        if !self.covers(grid.modes, grid.levels) {
            return Err(Error::Range(format!(
                "weights {}x{} do not cover {}x{}",
                self.grid.modes, self.grid.levels, grid.modes, grid.levels
            )));
        }
        Self::from_fn(grid, |i, n| self.get(i, n))
    }
}
