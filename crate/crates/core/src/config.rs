//! Experiment configuration. JSON, with unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Grid, WeightFamily};
use crate::spectrum::SequenceMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub modes: usize,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLaw {
    Constant { value: f64 },
    /// Rows are modes, columns are levels.
    Table { rows: Vec<Vec<f64>> },
    /// `"geometric(r)"`: `w[i][n] = r^n`.
    Formula { formula: String },
}

impl WeightLaw {
    pub fn family(&self, grid: Grid) -> Result<WeightFamily> {
        match self {
            WeightLaw::Constant { value } => WeightFamily::constant(grid, *value),
            WeightLaw::Table { rows } => {
                let w = WeightFamily::from_table(rows)?;
                if !w.covers(grid.modes, grid.levels) {
                    return Err(Error::Range(format!(
                        "weight table is {}x{}, the run needs {}x{}",
                        w.grid().modes,
                        w.grid().levels,
                        grid.modes,
                        grid.levels
                    )));
                }
                Ok(w)
            }
            WeightLaw::Formula { formula } => WeightFamily::geometric(grid, parse_geometric(formula)?),
        }
    }
}

fn parse_geometric(formula: &str) -> Result<f64> {
    let inner = formula
        .trim()
        .strip_prefix("geometric(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Invalid(format!("unknown weight formula {formula:?}; expected geometric(r)")))?;
    let r: f64 = inner
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("bad ratio in weight formula {formula:?}")))?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Invalid(format!("geometric ratio must be positive, got {r}")));
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub step_margin: f64,
    pub eigen_relative: f64,
    pub residual_relative: f64,
    pub spanning_backward: f64,
    pub periodic_relative: f64,
    pub log_norm_slope: f64,
    pub intertwine: f64,
    pub nuclear_ratio: f64,
    pub ergodic_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            step_margin: 2.0,
            eigen_relative: 1e-11,
            residual_relative: 1e-12,
            spanning_backward: 1e-8,
            periodic_relative: 1e-9,
            log_norm_slope: 1e-6,
            intertwine: 1e-12,
            nuclear_ratio: 0.55,
            ergodic_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    /// Random points of `K` for the residual and tail checks.
    pub samples: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { samples: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStart {
    /// Random combination of normalized exact eigenvectors.
    EigenMix,
    /// `e_{0,0}`, fixed by `T`.
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub steps: usize,
    pub targets: usize,
    pub radius: f64,
    pub checkpoints: usize,
    pub burn_in: f64,
    pub start: OrbitStart,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            steps: 100_000,
            targets: 5,
            radius: 0.05,
            checkpoints: 100,
            burn_in: 0.1,
            start: OrbitStart::EigenMix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PickConfig {
    pub mode: usize,
    pub level: usize,
    /// `[re, im]`
    pub coefficient: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicConfig {
    /// Empty means one pick per mode at the first non-trivial eigenvalue,
    /// plus the fixed direction `e_{0,0}`.
    pub picks: Vec<PickConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub terms: usize,
    pub samples: usize,
    pub orbit_length: usize,
    pub birkhoff_samples: usize,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        GaussianConfig { terms: 8, samples: 10_000, orbit_length: 1_000, birkhoff_samples: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleLaw {
    /// `s_{i,n} = 2^{-(i+n+1)}`
    Default,
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    pub p: f64,
    pub scales: ScaleLaw,
    pub samples: usize,
    pub n_max: usize,
    /// Weights of the nuclearity series, independent of the run's weights.
    pub nuclear_weights: WeightLaw,
    pub pushforward_samples: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            p: 2.0,
            scales: ScaleLaw::Default,
            samples: 100,
            n_max: 64,
            nuclear_weights: WeightLaw::Formula { formula: "geometric(0.25)".into() },
            pushforward_samples: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub weights: WeightLaw,
    pub depth: usize,
    #[serde(default = "default_mode")]
    pub mode: SequenceMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default)]
    pub orbit: OrbitConfig,
    #[serde(default)]
    pub periodic: PeriodicConfig,
    #[serde(default)]
    pub gaussian: GaussianConfig,
    #[serde(default)]
    pub transfer: TransferConfig,
}

fn default_mode() -> SequenceMode {
    SequenceMode::Generic
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.modes, self.grid.levels)
    }

    /// Grid the weights must cover: every mode and level the construction at
    /// this depth touches, and the run's own grid.
    pub fn weight_grid(&self) -> Result<Grid> {
        Grid::new(self.grid.modes.max(self.depth + 2), self.grid.levels.max(1 << (self.depth + 1)))
    }

    pub fn weight_family(&self) -> Result<WeightFamily> {
        self.weights.family(self.weight_grid()?)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.depth == 0 || self.depth > 20 {
            return Err(Error::Invalid(format!("depth must lie in 1..=20, got {}", self.depth)));
        }
        if grid.levels > 1 << self.depth {
            return Err(Error::Invalid(format!(
                "grid.levels = {} exceeds the 2^depth = {} constructed eigenvalues",
                grid.levels,
                1usize << self.depth
            )));
        }
        self.weight_family()?;
        let t = &self.tolerances;
        for (name, v) in [
            ("step_margin", t.step_margin),
            ("eigen_relative", t.eigen_relative),
            ("residual_relative", t.residual_relative),
            ("spanning_backward", t.spanning_backward),
            ("periodic_relative", t.periodic_relative),
            ("log_norm_slope", t.log_norm_slope),
            ("intertwine", t.intertwine),
            ("nuclear_ratio", t.nuclear_ratio),
            ("ergodic_ratio", t.ergodic_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        let o = &self.orbit;
        if o.steps == 0 || o.targets == 0 || !(o.radius > 0.0) || o.checkpoints < 2 || !(0.0..1.0).contains(&o.burn_in) {
            return Err(Error::Invalid(
                "orbit needs steps ≥ 1, targets ≥ 1, radius > 0, checkpoints ≥ 2, burn_in in [0, 1)".into(),
            ));
        }
        for p in &self.periodic.picks {
            grid.check(p.mode, p.level)?;
        }
        let tr = &self.transfer;
        if !(tr.p >= 1.0 && tr.p.is_finite()) || tr.n_max == 0 {
            return Err(Error::Invalid("transfer needs p ≥ 1 and n_max ≥ 1".into()));
        }
        tr.nuclear_weights.family(Grid::new(grid.modes, tr.n_max + 1)?)?;
        Ok(())
    }
}
