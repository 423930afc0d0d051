//! The truncated operator `T = D_μ + B_w`.
//!
//! Per mode `i` the truncation is the upper-bidiagonal matrix with diagonal
//! `μ_0..μ_{N-1}` and superdiagonal `w[i][0..N-1]`: level `n + 1` feeds level `n`
//! with weight `w[i][n]`. The inflow into the top level `N - 1` is dropped.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CVec, Grid, WeightFamily};
use crate::spectrum::EigenSequence;

const POWER_LIMIT: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    grid: Grid,
    mu: Vec<Complex64>,
    w: WeightFamily,
}

impl OperatorSpec {
    /// Truncates a built sequence and a weight family to `grid`.
    pub fn new(grid: Grid, seq: &EigenSequence, w: &WeightFamily) -> Result<Self> {
        if seq.len() < grid.levels {
            return Err(Error::Range(format!(
                "{} levels need {} eigenvalues, sequence has {}",
                grid.levels,
                grid.levels,
                seq.len()
            )));
        }
        Self::from_parts(grid, seq.mu[..grid.levels].to_vec(), w.restrict(grid)?)
    }

    pub fn from_parts(grid: Grid, mu: Vec<Complex64>, w: WeightFamily) -> Result<Self> {
        if mu.len() != grid.levels {
            return Err(Error::Shape(format!("{} diagonal entries for {} levels", mu.len(), grid.levels)));
        }
        if let Some(m) = mu.iter().find(|m| (m.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Invalid(format!("diagonal entry {m} is not unimodular")));
        }
        w.grid().ensure_same(&grid)?;
        Ok(OperatorSpec { grid, mu, w })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn weights(&self) -> &WeightFamily {
        &self.w
    }

    /// Writes `T x` into `out` without allocating.
    pub fn apply_into(&self, x: &CVec, out: &mut CVec) -> Result<()> {
        self.grid.ensure_same(&x.grid())?;
        self.grid.ensure_same(&out.grid())?;
        let top = self.grid.levels - 1;
        for i in 0..self.grid.modes {
            let src = x.mode(i);
            let w = self.w.mode(i);
            let dst = out.mode_mut(i);
            for n in 0..top {
                dst[n] = self.mu[n] * src[n] + w[n] * src[n + 1];
            }
            dst[top] = self.mu[top] * src[top];
        }
        Ok(())
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        let mut out = CVec::zeros(self.grid);
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// `T^m x` by repeated application.
    pub fn power_apply(&self, x: &CVec, m: usize) -> Result<CVec> {
        let mut cur = x.clone();
        let mut next = CVec::zeros(self.grid);
        self.grid.ensure_same(&x.grid())?;
        for step in 0..m {
            self.apply_into(&cur, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
            let peak = cur.max_abs();
            if !(peak <= POWER_LIMIT) {
                return Err(Error::NumericRange(format!("coefficients reached {peak:e} after {} steps", step + 1)));
            }
        }
        Ok(cur)
    }

    /// Dense `N × N` matrix of mode `i`.
    pub fn mode_matrix(&self, i: usize) -> DMatrix<Complex64> {
        let n = self.grid.levels;
        let w = self.w.mode(i);
        DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                self.mu[r]
            } else if c == r + 1 {
                Complex64::new(w[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn to_matrix(&self) -> Vec<DMatrix<Complex64>> {
        (0..self.grid.modes).map(|i| self.mode_matrix(i)).collect()
    }

    /// Dense CSV of one mode matrix: `row,col,re,im` for every entry.
    pub fn mode_matrix_csv(&self, i: usize) -> String {
        let m = self.mode_matrix(i);
        let mut s = String::from("row,col,re,im\n");
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                s.push_str(&format!("{r},{c},{:e},{:e}\n", v.re, v.im));
            }
        }
        s
    }
}
