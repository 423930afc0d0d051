//! Command-line driver. Exit codes: 0 success, 1 contract or tolerance
//! failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OrbitStart, ScaleLaw};
use crate::dynamics::{
    density_of_periodic_directions, even_checkpoints, lower_density_estimate, make_periodic_point, period_defect,
    run_orbit, Pick, Target,
};
use crate::eigenfields::{residual, residual_f64, tail_bound_check, EigenField, SpanningMatrix};
use crate::error::Error;
use crate::gaussian::{birkhoff_test, invariance_test, Functional, GaussianModel, GaussianSpec};
use crate::hilbert::{CVec, Grid, WeightFamily};
use crate::operator::OperatorSpec;
use crate::report::{num, write_csv, write_json, Format, Header};
use crate::spectrum::{build_sequence, sample_k_many, verify_constraints, EigenSequence};
use crate::transference::{check_intertwine, nuclearity_partial_sums, pushforward_demo, BanachTarget};

#[derive(Parser, Debug)]
#[command(name = "unishift", version, about = "Build and check diagonal-plus-backward-shift operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the unimodular sequence and write it with its constraint report.
    Build(Common),
    /// Re-check every construction constraint on a sequence file.
    Verify(Common),
    /// Eigen-equation, residual, tail and spanning checks.
    Eigen(Common),
    /// Orbit visit statistics.
    Orbit(Common),
    /// Periodic points from roots-of-unity eigenvalues.
    Periodic(Common),
    /// Gaussian invariance and Birkhoff averages.
    Gaussian(Common),
    /// Banach target: intertwining, nuclearity, pushforward.
    Transfer(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, env = "UNISHIFT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Sequence file; defaults to `<out>/sequence.json`.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericRange(_) | Error::UnsupportedMode(_) => 1,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    header: Header,
    weights: WeightFamily,
    grid: Grid,
    out: PathBuf,
    format: Format,
    sequence_path: PathBuf,
}

fn load(common: &Common) -> Result<Ctx, CliError> {
    let bytes = fs::read(&common.config)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", common.config.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::usage("config is not UTF-8"))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| CliError::usage(format!("config {}: {e}", common.config.display())))?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let weights = cfg.weight_family().map_err(|e| CliError::usage(e.to_string()))?;
    let grid = cfg.grid().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(Ctx {
        header: Header::new(&bytes, cfg.seed),
        cfg,
        weights,
        grid,
        out: common.out.clone(),
        format: common.format,
        sequence_path: common.sequence.clone().unwrap_or_else(|| common.out.join("sequence.json")),
    })
}

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    header: Header,
    sequence: EigenSequence,
}

fn load_sequence(ctx: &Ctx) -> Result<EigenSequence, CliError> {
    let text = fs::read_to_string(&ctx.sequence_path)
        .map_err(|e| CliError::usage(format!("missing sequence file {}: {e}", ctx.sequence_path.display())))?;
    let file: SequenceFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("sequence file {}: {e}", ctx.sequence_path.display())))?;
    let seq = file.sequence;
    if seq.len() < ctx.grid.levels {
        return Err(CliError::usage(format!(
            "sequence has {} eigenvalues, grid needs {}",
            seq.len(),
            ctx.grid.levels
        )));
    }
    if seq.mode != ctx.cfg.mode {
        return Err(CliError::usage(format!(
            "sequence mode {:?} differs from config mode {:?}",
            seq.mode, ctx.cfg.mode
        )));
    }
    Ok(seq)
}

#[derive(Serialize)]
struct Body<'a, T: Serialize> {
    checks: &'a [Check],
    #[serde(flatten)]
    data: T,
}

fn emit_json<T: Serialize>(ctx: &Ctx, out: &mut Outcome, name: &str, data: T) -> Result<(), CliError> {
    if ctx.format.json() {
        let body = Body { checks: &out.checks, data };
        out.files.push(write_json(&ctx.out, name, &ctx.header, &body)?);
    }
    Ok(())
}

fn emit_csv(ctx: &Ctx, out: &mut Outcome, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    if ctx.format.csv() {
        out.files.push(write_csv(&ctx.out, name, &ctx.header, columns, rows)?);
    }
    Ok(())
}

fn constraint_checks(ctx: &Ctx, seq: &EigenSequence) -> (Vec<Check>, Vec<Vec<String>>, crate::spectrum::ConstraintReport) {
    let report = verify_constraints(seq, &ctx.weights);
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks passed", report.checks.len())
    } else {
        format!("failed: {}", failed.join(" "))
    };
    let mut checks = vec![check("constraints", report.all_passed(), detail)];
    let min_margin = report.find("step_inequality").map(|c| c.margin).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "step_margin",
        min_margin >= ctx.cfg.tolerances.step_margin,
        format!("min margin {min_margin:e}, required {}", ctx.cfg.tolerances.step_margin),
    ));
    let rows = report
        .checks
        .iter()
        .map(|c| vec![format!("\"{}\"", c.name), c.passed.to_string(), num(c.margin)])
        .collect();
    (checks, rows, report)
}

pub fn cmd_build(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = build_sequence(&ctx.weights, ctx.cfg.depth, ctx.cfg.mode, ctx.cfg.seed)?;
    let mut out = Outcome::default();
    if let Some(dir) = ctx.sequence_path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = crate::report::json_string(&ctx.header, &SequenceWrapper { sequence: &seq })?;
    fs::write(&ctx.sequence_path, text)?;
    out.files.push(ctx.sequence_path.clone());
    let (checks, rows, report) = constraint_checks(&ctx, &seq);
    out.checks = checks;
    emit_json(&ctx, &mut out, "build_report.json", &report)?;
    emit_csv(&ctx, &mut out, "build_report.csv", &["check", "passed", "margin"], &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct SequenceWrapper<'a> {
    sequence: &'a EigenSequence,
}

pub fn cmd_verify(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = load_sequence(&ctx)?;
    let mut out = Outcome::default();
    let (checks, rows, report) = constraint_checks(&ctx, &seq);
    out.checks = checks;
    emit_json(&ctx, &mut out, "verify.json", &report)?;
    emit_csv(&ctx, &mut out, "verify.csv", &["check", "passed", "margin"], &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct EigenSummary {
    max_eigen_relative: f64,
    max_closed_form_relative: f64,
    tail: crate::eigenfields::TailCheck,
    tail_depth: usize,
    max_spanning_backward_error: f64,
    min_spanning_diag: f64,
}

pub fn cmd_eigen(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = load_sequence(&ctx)?;
    let tol = &ctx.cfg.tolerances;
    let op = OperatorSpec::new(ctx.grid, &seq, &ctx.weights)?;
    let g = ctx.grid;

    let mut residual_rows = Vec::new();
    let mut max_eigen = 0.0f64;
    for i in 0..g.modes {
        let f = EigenField::for_operator(&op, i)?;
        for level in 0..g.levels - 1 {
            let lam = seq.mu[level];
            let e = f.eval_e(lam, g)?;
            let r = residual_f64(&op, &f, lam)?;
            let rel = r / e.norm();
            max_eigen = max_eigen.max(rel);
            residual_rows.push(vec![i.to_string(), level.to_string(), num(e.norm()), num(r), num(rel)]);
        }
    }

    let points = sample_k_many(&seq, seq.depth, ctx.cfg.eigen.samples, ctx.cfg.seed)?;
    let mut max_closed = 0.0f64;
    for i in 0..g.modes {
        let f = EigenField::for_operator(&op, i)?;
        for lam in &points {
            let measured = residual(&op, &f, *lam)?;
            let closed = f.residual_closed_form(*lam);
            let rel = if closed > 0.0 { (measured - closed).abs() / closed } else { measured };
            max_closed = max_closed.max(rel);
        }
    }

    let tail_depth = seq.depth.min((g.levels - 1).ilog2() as usize);
    let tail = tail_bound_check(&seq, &ctx.weights, g.levels, tail_depth, ctx.cfg.eigen.samples, ctx.cfg.seed)?;

    let mut max_bwd = 0.0f64;
    let mut min_diag = f64::INFINITY;
    for i in 0..g.modes {
        let s = SpanningMatrix::build(&seq.mu, &ctx.weights, i, g.levels)?;
        min_diag = min_diag.min(s.min_abs_diag);
        max_bwd = max_bwd.max(s.solve_standard_basis()?);
    }

    let checks = vec![
        check("eigen_equation", max_eigen <= tol.eigen_relative, format!("max relative defect {max_eigen:e}")),
        check("residual_closed_form", max_closed <= tol.residual_relative, format!("max relative gap {max_closed:e}")),
        check("tail_bound", tail.violations == 0, format!("{} of {} checks violated", tail.violations, tail.checks)),
        check("spanning", min_diag > 0.0 && max_bwd <= tol.spanning_backward, format!("backward error {max_bwd:e}")),
    ];
    let mut out = Outcome { checks, files: Vec::new() };
    emit_csv(&ctx, &mut out, "eigen_residuals.csv", &["mode", "level", "norm", "residual", "relative"], &residual_rows)?;
    let summary = EigenSummary {
        max_eigen_relative: max_eigen,
        max_closed_form_relative: max_closed,
        tail,
        tail_depth,
        max_spanning_backward_error: max_bwd,
        min_spanning_diag: min_diag,
    };
    emit_json(&ctx, &mut out, "eigen.json", &summary)?;
    Ok(out)
}

/// Unit-norm random combination of normalized exact eigenvectors.
pub fn eigen_mix(op: &OperatorSpec, seed: u64) -> crate::Result<CVec> {
    let g = op.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = CVec::zeros(g);
    for i in 0..g.modes {
        let f = EigenField::for_operator(op, i)?;
        for level in 0..g.levels - 1 {
            let e = f.eval_e(op.mu()[level], g)?;
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            x.axpy(c / e.norm(), &e)?;
        }
    }
    let n = x.norm();
    Ok(x.scale(Complex64::new(1.0 / n, 0.0)))
}

#[derive(Serialize)]
struct OrbitSummary {
    steps: usize,
    target_steps: Vec<usize>,
    lower_density: Vec<f64>,
    returns: Vec<usize>,
    norm_max: f64,
    norm_final: f64,
    log_norm_slope: f64,
}

pub fn cmd_orbit(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = load_sequence(&ctx)?;
    let oc = &ctx.cfg.orbit;
    let op = OperatorSpec::new(ctx.grid, &seq, &ctx.weights)?;
    let x0 = match oc.start {
        OrbitStart::EigenMix => eigen_mix(&op, ctx.cfg.seed)?,
        OrbitStart::FixedPoint => CVec::basis_vector(ctx.grid, 0, 0)?,
    };
    let spacing = ((oc.burn_in * oc.steps as f64) as usize / oc.targets).max(1);
    let target_steps: Vec<usize> = (0..oc.targets).map(|j| j * spacing).collect();
    let targets = target_steps
        .iter()
        .map(|&n0| Ok(Target { center: op.power_apply(&x0, n0)?, radius: oc.radius }))
        .collect::<crate::Result<Vec<_>>>()?;
    let cps = even_checkpoints(oc.steps, oc.checkpoints);
    let stats = run_orbit(&op, &x0, oc.steps, &targets, &cps)?;
    let lower_density = (0..targets.len())
        .map(|t| lower_density_estimate(&stats, t, oc.burn_in))
        .collect::<crate::Result<Vec<_>>>()?;
    let returns = stats.visits.iter().map(|v| v.last().copied().unwrap_or(0).saturating_sub(1)).collect();

    let checks = vec![
        check(
            "positive_lower_density",
            lower_density.iter().all(|d| *d > 0.0),
            format!("min {:e}", lower_density.iter().copied().fold(f64::INFINITY, f64::min)),
        ),
        check(
            "log_norm_slope",
            stats.log_norm_slope.abs() < ctx.cfg.tolerances.log_norm_slope,
            format!("slope {:e}", stats.log_norm_slope),
        ),
    ];
    let mut out = Outcome { checks, files: Vec::new() };
    let mut rows = Vec::new();
    for (c, step) in stats.checkpoints.iter().enumerate() {
        for t in 0..targets.len() {
            rows.push(vec![
                step.to_string(),
                t.to_string(),
                stats.visits[t][c].to_string(),
                num(stats.running_frequency[t][c]),
            ]);
        }
    }
    emit_csv(&ctx, &mut out, "orbit.csv", &["step", "target_id", "visits", "running_frequency"], &rows)?;
    let summary = OrbitSummary {
        steps: stats.steps,
        target_steps,
        lower_density,
        returns,
        norm_max: stats.norm_max,
        norm_final: stats.norm_final,
        log_norm_slope: stats.log_norm_slope,
    };
    emit_json(&ctx, &mut out, "orbit.json", &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct PeriodicSummary {
    picks: Vec<Pick>,
    period: u64,
    period_defect: f64,
    coverage: crate::dynamics::PeriodicCoverage,
    note: &'static str,
}

pub fn cmd_periodic(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = load_sequence(&ctx)?;
    let op = OperatorSpec::new(ctx.grid, &seq, &ctx.weights)?;
    let picks: Vec<Pick> = if ctx.cfg.periodic.picks.is_empty() {
        let mut p = vec![Pick { mode: 0, level: 0, coefficient: Complex64::new(1.0, 0.0) }];
        if ctx.grid.levels >= 3 {
            p.extend((0..ctx.grid.modes).map(|i| Pick { mode: i, level: 1, coefficient: Complex64::new(1.0, 0.0) }));
        }
        p
    } else {
        ctx.cfg
            .periodic
            .picks
            .iter()
            .map(|p| Pick { mode: p.mode, level: p.level, coefficient: Complex64::new(p.coefficient[0], p.coefficient[1]) })
            .collect()
    };
    let (x, period) = make_periodic_point(&op, &seq, &picks)?;
    let defect = period_defect(&op, &x, period)?;
    let coverage = density_of_periodic_directions(&seq, &ctx.weights, ctx.grid, 0.0)?;
    let tol = &ctx.cfg.tolerances;
    let checks = vec![
        check("period", defect <= tol.periodic_relative, format!("‖T^{period} x - x‖/‖x‖ = {defect:e}")),
        check(
            "periodic_directions_span",
            coverage.spanning && coverage.worst_backward_error <= tol.spanning_backward,
            format!("min |diag| {:e}", coverage.min_abs_diag),
        ),
    ];
    let mut out = Outcome { checks, files: Vec::new() };
    let summary = PeriodicSummary {
        picks,
        period,
        period_defect: defect,
        coverage,
        note: "the truncated operator is exactly periodic; this says nothing about the infinite-dimensional orbit",
    };
    emit_json(&ctx, &mut out, "periodic.json", &summary)?;
    Ok(out)
}

#[derive(Serialize)]
struct GaussianSummary {
    invariance: crate::gaussian::InvarianceReport,
    birkhoff: Vec<crate::gaussian::BirkhoffReport>,
}

pub fn cmd_gaussian(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = load_sequence(&ctx)?;
    let gc = &ctx.cfg.gaussian;
    let op = OperatorSpec::new(ctx.grid, &seq, &ctx.weights)?;
    let model = GaussianModel::new(GaussianSpec::exact(&seq.mu, ctx.grid, gc.terms)?, &op)?;
    let inv = invariance_test(&model, &op, gc.samples, ctx.cfg.seed)?;
    let birkhoff = [Functional::RealPart { mode: 0, level: 0 }, Functional::SquaredModulus { mode: 0, level: 0 }]
        .into_iter()
        .map(|f| {
            birkhoff_test(
                &model,
                &op,
                f,
                gc.orbit_length,
                gc.birkhoff_samples,
                ctx.cfg.seed,
                ctx.cfg.tolerances.ergodic_ratio,
            )
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let checks = vec![check(
        "covariance_invariance",
        inv.within_budget,
        format!(
            "distance {:e}, budget {:e} + {:e}",
            inv.covariance_distance, inv.statistical_budget, inv.deterministic_budget
        ),
    )];
    let mut out = Outcome { checks, files: Vec::new() };
    let rows: Vec<Vec<String>> = inv
        .ks
        .iter()
        .map(|k| vec![k.mode.to_string(), k.level.to_string(), num(k.statistic_x), num(k.statistic_tx)])
        .collect();
    emit_csv(&ctx, &mut out, "gaussian_ks.csv", &["mode", "level", "ks_x", "ks_tx"], &rows)?;
    emit_json(&ctx, &mut out, "gaussian.json", &GaussianSummary { invariance: inv, birkhoff })?;
    Ok(out)
}

#[derive(Serialize)]
struct TransferSummary {
    intertwine: crate::transference::IntertwineReport,
    nuclearity: crate::transference::NuclearityReport,
    pushforward: crate::transference::PushforwardReport,
}

fn target(law: ScaleLaw, p: f64, grid: Grid) -> crate::Result<BanachTarget> {
    match law {
        ScaleLaw::Default => BanachTarget::default_scales(p, grid),
        ScaleLaw::Unit => BanachTarget::unit(p, grid),
    }
}

pub fn cmd_transfer(common: &Common) -> Result<Outcome, CliError> {
    let ctx = load(common)?;
    let seq = load_sequence(&ctx)?;
    let tc = &ctx.cfg.transfer;
    let tol = &ctx.cfg.tolerances;
    let op = OperatorSpec::new(ctx.grid, &seq, &ctx.weights)?;
    let t = target(tc.scales, tc.p, ctx.grid)?;
    let intertwine = check_intertwine(&t, &op, tc.samples, ctx.cfg.seed)?;

    let ngrid = Grid::new(ctx.grid.modes, tc.n_max + 1)?;
    let nuclearity = nuclearity_partial_sums(&target(tc.scales, tc.p, ngrid)?, &tc.nuclear_weights.family(ngrid)?, tc.n_max)?;

    let terms = ctx.cfg.gaussian.terms;
    let model = GaussianModel::new(GaussianSpec::exact(&seq.mu, ctx.grid, terms)?, &op)?;
    let pushforward = pushforward_demo(&model, &op, &t, tc.pushforward_samples, ctx.cfg.seed)?;

    let checks = vec![
        check(
            "intertwining",
            intertwine.random_max_defect < tol.intertwine && intertwine.basis_max_defect < tol.intertwine,
            format!("max defect {:e}", intertwine.random_max_defect),
        ),
        check("nuclearity", nuclearity.max_ratio <= tol.nuclear_ratio, format!("ratio {:e}", nuclearity.max_ratio)),
        check(
            "pushforward",
            pushforward.within_budget && pushforward.source_rank == pushforward.pushed_rank,
            format!("distance {:e}", pushforward.covariance_distance),
        ),
    ];
    let mut out = Outcome { checks, files: Vec::new() };
    let rows: Vec<Vec<String>> = nuclearity
        .increments
        .iter()
        .zip(&nuclearity.partial_sums)
        .enumerate()
        .map(|(k, (inc, s))| vec![(k + 1).to_string(), num(*inc), num(*s)])
        .collect();
    emit_csv(&ctx, &mut out, "nuclearity.csv", &["n", "increment", "partial_sum"], &rows)?;
    emit_json(&ctx, &mut out, "transfer.json", &TransferSummary { intertwine, nuclearity, pushforward })?;
    Ok(out)
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

fn configure_threads(n: Option<usize>) {
    if let Some(n) = n.filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Build(c)
        | Command::Verify(c)
        | Command::Eigen(c)
        | Command::Orbit(c)
        | Command::Periodic(c)
        | Command::Gaussian(c)
        | Command::Transfer(c) => c,
    }
}

pub fn dispatch(cmd: &Command) -> Result<Outcome, CliError> {
    let c = common(cmd);
    configure_threads(c.threads);
    match cmd {
        Command::Build(c) => cmd_build(c),
        Command::Verify(c) => cmd_verify(c),
        Command::Eigen(c) => cmd_eigen(c),
        Command::Orbit(c) => cmd_orbit(c),
        Command::Periodic(c) => cmd_periodic(c),
        Command::Gaussian(c) => cmd_gaussian(c),
        Command::Transfer(c) => cmd_transfer(c),
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            for c in &out.checks {
                if c.passed {
                    println!("ok   {}: {}", c.name, c.detail);
                } else {
                    eprintln!("FAIL {}: {}", c.name, c.detail);
                }
            }
            if out.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Convenience for callers holding paths rather than argument vectors.
pub fn common_args(config: &Path, out: &Path) -> Common {
    Common {
        config: config.to_path_buf(),
        seed: None,
        out: out.to_path_buf(),
        threads: None,
        format: Format::Both,
        sequence: None,
    }
}
