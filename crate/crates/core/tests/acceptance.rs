//! One line per acceptance criterion; exits non-zero if any fails.

use std::fs;
use std::time::Instant;

use unishift::cli::{cmd_build, common_args};
use unishift::dynamics::{
    even_checkpoints, lower_density_estimate, make_periodic_point, period_defect, run_orbit, Pick, Target,
};
use unishift::eigenfields::{residual, residual_f64, tail_bound_check, EigenField, SpanningMatrix};
use unishift::gaussian::{invariance_test, GaussianModel, GaussianSpec};
use unishift::spectrum::{build_sequence, sample_k_many, verify_constraints};
use unishift::transference::{
    check_intertwine, check_intertwine_between, geometric_partial_sum, nuclearity_partial_sums, BanachTarget,
};
use unishift::{Complex64, EigenSequence, Grid, OperatorSpec, SequenceMode, WeightFamily};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn unit_weights(depth: usize, modes: usize, value: f64) -> WeightFamily {
    let g = Grid::new(modes.max(depth + 2), 1 << (depth + 1)).unwrap();
    WeightFamily::constant(g, value).unwrap()
}

fn generic(depth: usize, modes: usize) -> (EigenSequence, WeightFamily) {
    let w = unit_weights(depth, modes, 1.0);
    let seq = build_sequence(&w, depth, SequenceMode::Generic, 0).unwrap();
    (seq, w)
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn constraints() -> Outcome {
    let start = Instant::now();
    let w = unit_weights(6, 1, 1.0);
    let seq = build_sequence(&w, 6, SequenceMode::Generic, 0).map_err(|e| e.to_string())?;
    let report = verify_constraints(&seq, &w);
    let secs = start.elapsed().as_secs_f64();
    let steps: Vec<_> = report.find("step_inequality").collect();
    let min_margin = steps.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let expected = (1..=6).map(|k| k + 1).sum::<usize>();
    verdict(
        report.all_passed() && steps.len() == expected && min_margin >= 2.0 && secs < 1.0,
        format!("{} step checks, min margin {min_margin:.3}, all constraints {}, {secs:.3}s", steps.len(), report.all_passed()),
    )
}

fn tail_bound() -> Outcome {
    let start = Instant::now();
    let (seq, w) = generic(7, 1);
    let r = tail_bound_check(&seq, &w, 128, 6, 100, 1).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        r.violations == 0 && r.checks > 0 && secs < 5.0,
        format!("{} checks, {} violations, worst tail/bound {:.3e}, {secs:.3}s", r.checks, r.violations, r.worst_ratio),
    )
}

fn eigen_equation() -> Outcome {
    let (seq, w) = generic(6, 8);
    let op = OperatorSpec::new(Grid::new(8, 64).unwrap(), &seq, &w).unwrap();
    let mut worst = 0.0f64;
    let mut exact_worst = 0.0f64;
    for i in 0..8 {
        let f = EigenField::for_operator(&op, i).unwrap();
        for level in 0..=62 {
            let lam = seq.mu[level];
            let norm = f.eval_e(lam, op.grid()).unwrap().norm();
            worst = worst.max(residual_f64(&op, &f, lam).unwrap() / norm);
            exact_worst = exact_worst.max(residual(&op, &f, lam).unwrap() / norm);
        }
    }
    verdict(
        worst <= 1e-11 && exact_worst == 0.0,
        format!("max relative defect {worst:.3e} (f64), {exact_worst:e} (exact) over 8 x 63 eigenvectors"),
    )
}

fn residual_closed_form() -> Outcome {
    let (seq, w) = generic(6, 8);
    let op = OperatorSpec::new(Grid::new(8, 64).unwrap(), &seq, &w).unwrap();
    let points = sample_k_many(&seq, 6, 100, 2).unwrap();
    let mut worst = 0.0f64;
    for i in 0..8 {
        let f = EigenField::for_operator(&op, i).unwrap();
        for lam in &points {
            let measured = residual(&op, &f, *lam).unwrap();
            let closed = f.residual_closed_form(*lam);
            worst = worst.max((measured - closed).abs() / closed);
        }
    }
    verdict(worst <= 1e-12, format!("max relative gap {worst:.3e} over 100 points x 8 modes"))
}

fn spanning() -> Outcome {
    let (seq, w) = generic(6, 1);
    let s = SpanningMatrix::build(&seq.mu, &w, 0, 64).unwrap();
    let bwd = s.solve_standard_basis().map_err(|e| e.to_string())?;
    let mut dup = seq.mu.clone();
    dup[40] = dup[17];
    let d = SpanningMatrix::build(&dup, &w, 0, 64).unwrap();
    let singular = !d.is_invertible(0.0) && d.solve_standard_basis().is_err();
    verdict(
        bwd < 1e-8 && s.is_invertible(0.0) && singular,
        format!("backward error {bwd:.3e}, min |diag| {:.3e}, duplicate reported singular: {singular}", s.min_abs_diag),
    )
}

fn periodicity() -> Outcome {
    let w = unit_weights(3, 2, 3.0);
    let seq = build_sequence(&w, 3, SequenceMode::RootsOfUnity, 0).unwrap();
    let op = OperatorSpec::new(Grid::new(2, 8).unwrap(), &seq, &w).unwrap();
    let picks = [
        Pick { mode: 0, level: 0, coefficient: Complex64::new(0.7, -0.2) },
        Pick { mode: 0, level: 1, coefficient: Complex64::new(1.0, 0.5) },
        Pick { mode: 1, level: 1, coefficient: Complex64::new(-0.4, 1.1) },
    ];
    let orders: Vec<u64> = picks.iter().map(|p| seq.order(p.level).unwrap()).collect();
    let (x, m) = make_periodic_point(&op, &seq, &picks).map_err(|e| e.to_string())?;
    let defect = period_defect(&op, &x, 8).unwrap();
    verdict(
        m == 8 && orders == [1, 8, 8] && defect <= 1e-9,
        format!("orders {orders:?}, period {m}, ‖T^8 x - x‖/‖x‖ = {defect:.3e}"),
    )
}

fn recurrence() -> Outcome {
    let start = Instant::now();
    let (seq, w) = generic(4, 2);
    let op = OperatorSpec::new(Grid::new(2, 16).unwrap(), &seq, &w).unwrap();
    let x0 = unishift::cli::eigen_mix(&op, 0).unwrap();
    let steps = 100_000;
    let targets: Vec<Target> = (0..5)
        .map(|j| Target { center: op.power_apply(&x0, 2000 * j).unwrap(), radius: 0.05 })
        .collect();
    let stats = run_orbit(&op, &x0, steps, &targets, &even_checkpoints(steps, 100)).map_err(|e| e.to_string())?;
    let densities: Vec<f64> = (0..5).map(|t| lower_density_estimate(&stats, t, 0.1).unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let positive = densities.iter().all(|d| *d > 0.0);
    verdict(
        positive && stats.log_norm_slope.abs() < 1e-6 && secs < 30.0,
        format!(
            "min lower density {:.2e}, log-norm slope {:.2e}, max norm {:.3}, {secs:.2}s",
            densities.iter().copied().fold(f64::INFINITY, f64::min),
            stats.log_norm_slope,
            stats.norm_max
        ),
    )
}

fn gaussian_invariance() -> Outcome {
    let (seq, w) = generic(4, 2);
    let op = OperatorSpec::new(Grid::new(2, 16).unwrap(), &seq, &w).unwrap();
    let model = GaussianModel::new(GaussianSpec::exact(&seq.mu, op.grid(), 8).unwrap(), &op).unwrap();
    let a = invariance_test(&model, &op, 10_000, 1).unwrap();
    let b = invariance_test(&model, &op, 10_000, 2).unwrap();
    verdict(
        a.within_statistical_budget && b.within_statistical_budget,
        format!(
            "distance/budget {:.3} (seed 1), {:.3} (seed 2), deterministic budget {:e}",
            a.covariance_distance / a.statistical_budget,
            b.covariance_distance / b.statistical_budget,
            a.deterministic_budget
        ),
    )
}

fn intertwining() -> Outcome {
    let (seq, w) = generic(4, 3);
    let op = OperatorSpec::new(Grid::new(3, 16).unwrap(), &seq, &w).unwrap();
    let t = BanachTarget::default_scales(2.0, op.grid()).unwrap();
    let good = check_intertwine(&t, &op, 100, 3).unwrap();
    let mut bad = t.clone();
    bad.set_scale(0, 0, 1.5 * t.scale(0, 0)).unwrap();
    let corrupted = check_intertwine_between(&t, &bad, &op, 100, 3).unwrap();
    verdict(
        good.random_max_defect < 1e-12 && corrupted.random_max_defect > 1e-3,
        format!("max defect {:.3e}, corrupted {:.3e}", good.random_max_defect, corrupted.random_max_defect),
    )
}

fn nuclearity() -> Outcome {
    let modes = 4;
    let g = Grid::new(modes, 65).unwrap();
    let t = BanachTarget::default_scales(2.0, g).unwrap();
    let w = WeightFamily::from_fn(g, |_, n| 0.25f64.powi(n as i32)).unwrap();
    let r = nuclearity_partial_sums(&t, &w, 64).unwrap();
    let oracle_gap = r
        .partial_sums
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let o = geometric_partial_sum(2.0 * modes as f64, 0.25, k + 1);
            (s - o).abs() / o
        })
        .fold(0.0, f64::max);
    verdict(
        r.max_ratio <= 0.55 && oracle_gap <= 1e-12,
        format!("max increment ratio {:.4}, geometric oracle gap {oracle_gap:.3e}", r.max_ratio),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"grid": {"modes": 2, "levels": 32}, "weights": {"law": "constant", "value": 1.0}, "depth": 5, "seed": 42}"#,
    )
    .unwrap();
    let a = cmd_build(&common_args(&cfg, &dir.path().join("a"))).map_err(|e| e.message)?;
    let b = cmd_build(&common_args(&cfg, &dir.path().join("b"))).map_err(|e| e.message)?;
    let fa = fs::read(dir.path().join("a/sequence.json")).unwrap();
    let fb = fs::read(dir.path().join("b/sequence.json")).unwrap();
    let ra = fs::read(dir.path().join("a/build_report.json")).unwrap();
    let rb = fs::read(dir.path().join("b/build_report.json")).unwrap();
    verdict(
        a.passed() && b.passed() && fa == fb && ra == rb,
        format!("sequence files {} bytes, identical: {}, reports identical: {}", fa.len(), fa == fb, ra == rb),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("constraint reproduction", constraints),
        ("tail bound", tail_bound),
        ("eigen-equation exactness", eigen_equation),
        ("residual closed form", residual_closed_form),
        ("triangular spanning", spanning),
        ("periodicity", periodicity),
        ("recurrence statistics", recurrence),
        ("gaussian invariance", gaussian_invariance),
        ("intertwining", intertwining),
        ("nuclearity partial sums", nuclearity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
