//! Construction of the unimodular diagonal `μ`.
//!
//! Indices are grouped in dyadic blocks `J_0 = {0}`, `J_k = {2^{k-1}, …, 2^k - 1}`.
//! Step `k` places every `μ_n`, `n ∈ J_k`, on the arc of the previous step that
//! ends at its partner `μ_{n - 2^{k-1}}`, at chordal distance below a length
//! `l_k` small enough that
//!
//! ```text
//! l_k² · Σ_{n∈J_{k+1}} Π_{p<n} w[i][p]^{-2} < 2^{-(k+2)}    for i = 0..=k.
//! ```
//!
//! The arcs `Γ_p` joining `μ_{p-2^{k-1}}` and `μ_p` nest, and their intersection
//! over all depths is the Cantor set `K` carrying the point spectrum.

use std::f64::consts::{PI, TAU};
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::WeightFamily;

/// Every root-of-unity denominator is `ROOT_BASE · 2^m`.
pub const ROOT_BASE: u64 = 4;

const UNIT_TOL: f64 = 1e-12;
const NEST_SLACK: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-10;
const LK_TOL: f64 = 1e-14;

/// Index block `J_k` as an inclusive range.
pub fn j_block(k: usize) -> RangeInclusive<usize> {
    if k == 0 {
        0..=0
    } else {
        (1usize << (k - 1))..=((1usize << k) - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceMode {
    Generic,
    RootsOfUnity,
}

/// Shorter closed arc of the unit circle between two unimodular endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub index: usize,
    pub endpoint_a: Complex64,
    pub endpoint_b: Complex64,
    pub chord_length: f64,
}

impl Arc {
    pub fn new(index: usize, a: Complex64, b: Complex64) -> Self {
        Arc { index, endpoint_a: a, endpoint_b: b, chord_length: (a - b).norm() }
    }

    /// Signed angle from `endpoint_a` to `endpoint_b`, in `(-π, π]`.
    pub fn angle(&self) -> f64 {
        (self.endpoint_b / self.endpoint_a).arg()
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        if (z.norm() - 1.0).abs() > slack {
            return false;
        }
        let total = self.angle();
        let part = (z / self.endpoint_a).arg();
        if total >= 0.0 {
            part >= -slack && part <= total + slack
        } else {
            part <= slack && part >= total - slack
        }
    }

    pub fn contains_arc(&self, other: &Arc, slack: f64) -> bool {
        self.contains(other.endpoint_a, slack) && self.contains(other.endpoint_b, slack)
    }

    pub fn midpoint(&self) -> Complex64 {
        let s = self.endpoint_a + self.endpoint_b;
        s / s.norm()
    }
}

/// The constructed diagonal together with its arcs and step lengths.
///
/// `arcs[p - 1]` is `Γ_p`; `lk[k - 1]` is the realized length `l_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSequence {
    pub depth: usize,
    pub mu: Vec<Complex64>,
    pub arcs: Vec<Arc>,
    pub lk: Vec<f64>,
    pub mode: SequenceMode,
    pub orders: Option<Vec<u64>>,
    pub seed: u64,
    pub min_distance: f64,
}

impl EigenSequence {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `l_k` for `k ≥ 1`.
    pub fn lk(&self, k: usize) -> f64 {
        self.lk[k - 1]
    }

    /// `Γ_p` for `p ≥ 1`.
    pub fn arc(&self, p: usize) -> &Arc {
        &self.arcs[p - 1]
    }

    pub fn order(&self, p: usize) -> Option<u64> {
        self.orders.as_ref().map(|o| o[p])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// The arcs `{Γ_j : j ∈ J_k}`.
    pub fn cantor_approx(&self, k: usize) -> Result<CantorApprox> {
        if k == 0 || k > self.depth {
            return Err(Error::Range(format!("cantor depth {k} outside 1..={}", self.depth)));
        }
        Ok(CantorApprox { depth: k, arcs: j_block(k).map(|p| *self.arc(p)).collect() })
    }

    fn min_pairwise_distance(mu: &[Complex64]) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..mu.len() {
            for b in a + 1..mu.len() {
                best = best.min((mu[a] - mu[b]).norm());
            }
        }
        best
    }

    /// `max_j |μ_{2^{k-1}+j} - μ_j|`.
    fn realized_length(mu: &[Complex64], k: usize) -> f64 {
        let half = 1usize << (k - 1);
        (0..half).map(|j| (mu[half + j] - mu[j]).norm()).fold(0.0, f64::max)
    }
}

/// Union of the arcs at one depth of the nested construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CantorApprox {
    pub depth: usize,
    pub arcs: Vec<Arc>,
}

impl CantorApprox {
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        self.arcs.iter().any(|a| a.contains(z, slack))
    }

    /// Every arc of `self` lies inside some arc of `parent`.
    pub fn nested_in(&self, parent: &CantorApprox, slack: f64) -> bool {
        self.arcs.iter().all(|a| parent.arcs.iter().any(|p| p.contains_arc(a, slack)))
    }
}

fn check_step_cover(k: usize, w: &WeightFamily, i: usize) -> Result<usize> {
    let hi = (1usize << (k + 1)) - 1;
    if !w.covers(i + 1, hi) {
        return Err(Error::Range(format!(
            "weights {}x{} do not cover mode {i} and levels < {hi} needed at step {k}",
            w.grid().modes,
            w.grid().levels
        )));
    }
    Ok(hi)
}

/// `S_i = Σ_{n∈J_{k+1}} Π_{p<n} w[i][p]^{-2}` by direct products. Fails when
/// the sum is not a normal f64; [`log_step_sum`] covers that range.
pub fn step_sum(k: usize, w: &WeightFamily, i: usize) -> Result<f64> {
    let hi = check_step_cover(k, w, i)?;
    let lo = 1usize << k;
    let mut prod = 1.0;
    let mut sum = 0.0;
    for (p, wp) in w.mode(i).iter().enumerate().take(hi) {
        prod /= wp * wp;
        if p + 1 >= lo {
            sum += prod;
        }
    }
    if sum.is_normal() && prod.is_normal() {
        Ok(sum)
    } else {
        Err(Error::NumericRange(format!("step sum at k={k}, i={i} leaves the f64 range")))
    }
}

/// `ln S_i` via log-sum-exp.
pub fn log_step_sum(k: usize, w: &WeightFamily, i: usize) -> Result<f64> {
    let hi = check_step_cover(k, w, i)?;
    let lo = 1usize << k;
    let mut log_prod = 0.0;
    let mut logs = Vec::with_capacity(lo);
    for (p, wp) in w.mode(i).iter().enumerate().take(hi) {
        log_prod -= 2.0 * wp.ln();
        if p + 1 >= lo {
            logs.push(log_prod);
        }
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln())
}

/// `2^{-(k+2)} / (l² S_i)`: above 1 exactly when the step inequality holds.
pub fn step_margin(k: usize, length: f64, w: &WeightFamily, i: usize) -> Result<f64> {
    let bound = (-((k + 2) as f64)).exp2();
    match step_sum(k, w, i) {
        Ok(s) => Ok(bound / (length * length * s)),
        Err(Error::NumericRange(_)) => {
            let log = bound.ln() - 2.0 * length.ln() - log_step_sum(k, w, i)?;
            Ok(log.exp())
        }
        Err(e) => Err(e),
    }
}

/// Largest admissible `l_k` over modes `0..=i_max`, times the safety factor 1/2.
pub fn max_step_length(k: usize, w: &WeightFamily, i_max: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Range("step index starts at 1".into()));
    }
    let bound = (-((k + 2) as f64)).exp2();
    let mut raw = f64::INFINITY;
    for i in 0..=i_max {
        let r = match step_sum(k, w, i) {
            Ok(s) => (bound / s).sqrt(),
            Err(Error::NumericRange(_)) => (0.5 * (bound.ln() - log_step_sum(k, w, i)?)).exp(),
            Err(e) => return Err(e),
        };
        raw = raw.min(r);
    }
    let l = 0.5 * raw;
    if l.is_normal() {
        Ok(l)
    } else {
        Err(Error::NumericRange(format!("admissible length at step {k} is {l:e}")))
    }
}

/// Largest angle whose chord is within `target`, and always below the chord 1.
fn angle_cap(target: f64) -> f64 {
    2.0 * (target.min(1.0) / 2.0).asin()
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reduced root of unity `exp(2πi·num/den)`.
#[derive(Debug, Clone, Copy)]
struct Root {
    num: i64,
    den: u64,
}

impl Root {
    fn reduced(num: i64, den: u64) -> Root {
        let g = gcd(num.unsigned_abs(), den).max(1);
        Root { num: num / g as i64, den: den / g }
    }

    fn angle(&self) -> f64 {
        TAU * self.num as f64 / self.den as f64
    }

    fn value(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle())
    }
}

/// Smallest denominator `ROOT_BASE · 2^m` whose nearest grid angle to `theta`
/// is a nonzero step strictly below `cap`; returns the offset as a reduced root
/// relative to `parent`.
fn snap_to_root(parent: Root, dir: f64, theta: f64, cap: f64) -> Result<Root> {
    for m in 0..58 {
        let den = ROOT_BASE << m;
        if den < parent.den {
            continue;
        }
        let step = TAU / den as f64;
        let a = (theta / step).round();
        if a >= 1.0 && a * step < cap {
            let num = parent.num * (den / parent.den) as i64 + dir as i64 * a as i64;
            return Ok(Root::reduced(num, den));
        }
    }
    Err(Error::NumericRange(format!("no root of unity below angle {cap:e}")))
}

/// Runs steps `0..=depth` and returns the `2^depth` unimodular values.
pub fn build_sequence(
    w: &WeightFamily,
    depth: usize,
    mode: SequenceMode,
    seed: u64,
) -> Result<EigenSequence> {
    if depth == 0 {
        return Err(Error::Invalid("construction depth must be at least 1".into()));
    }
    if depth > 20 {
        return Err(Error::Invalid(format!("depth {depth} is beyond desk scale")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 1usize << depth;
    let mut phase = vec![0.0f64; total];
    let mut roots = vec![Root { num: 0, den: 1 }; total];
    let mut mu = vec![Complex64::new(1.0, 0.0); total];
    let mut lk = Vec::with_capacity(depth);

    for k in 1..=depth {
        let target = max_step_length(k, w, k)?;
        let half = 1usize << (k - 1);
        for j in 0..half {
            let (dir, parent_angle) = if k == 1 {
                (1.0, PI)
            } else {
                let quarter = 1usize << (k - 2);
                let partner = if j >= quarter { j - quarter } else { j + quarter };
                let d = phase[partner] - phase[j];
                (d.signum(), d.abs())
            };
            let cap = angle_cap(target).min(0.5 * parent_angle);
            let mut theta = cap * rng.random_range(0.25..1.0);
            let n = half + j;
            loop {
                match mode {
                    SequenceMode::Generic => {
                        phase[n] = phase[j] + dir * theta;
                        mu[n] = Complex64::from_polar(1.0, phase[n]);
                    }
                    SequenceMode::RootsOfUnity => {
                        roots[n] = snap_to_root(roots[j], dir, theta, cap)?;
                        phase[n] = roots[n].angle();
                        mu[n] = roots[n].value();
                    }
                }
                let collides = mu[..n].iter().any(|m| (m - mu[n]).norm() <= 4.0 * f64::EPSILON);
                if !collides {
                    break;
                }
                theta *= 0.5;
                if theta == 0.0 {
                    return Err(Error::NumericRange(format!("cannot separate μ_{n}")));
                }
            }
        }
        lk.push(EigenSequence::realized_length(&mu, k));
    }

    let arcs = (1..total)
        .map(|p| {
            let k = usize::BITS as usize - p.leading_zeros() as usize;
            Arc::new(p, mu[p - (1usize << (k - 1))], mu[p])
        })
        .collect();
    let orders = (mode == SequenceMode::RootsOfUnity).then(|| roots.iter().map(|r| r.den).collect());
    let min_distance = EigenSequence::min_pairwise_distance(&mu);
    Ok(EigenSequence { depth, mu, arcs, lk, mode, orders, seed, min_distance })
}

/// Block index `k` with `p ∈ J_k`.
pub fn block_of(p: usize) -> usize {
    usize::BITS as usize - p.leading_zeros() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    /// Ratio or gap by which the check holds; below 1 (ratios) or 0 (gaps) on failure.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, prefix: &str) -> impl Iterator<Item = &ConstraintCheck> + '_ {
        let prefix = prefix.to_string();
        self.checks.iter().filter(move |c| c.name.starts_with(&prefix))
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, margin: f64, detail: impl Into<String>) {
        self.checks.push(ConstraintCheck { name: name.into(), passed, margin, detail: detail.into() });
    }
}

/// Recomputes every invariant of the construction. Never aborts: violations
/// are recorded as failed checks.
pub fn verify_constraints(seq: &EigenSequence, w: &WeightFamily) -> ConstraintReport {
    let mut r = ConstraintReport { checks: Vec::new() };
    let mu = &seq.mu;
    let total = 1usize << seq.depth;

    let shape_ok = mu.len() == total && seq.lk.len() == seq.depth && seq.arcs.len() == total - 1;
    r.push(
        "shape",
        shape_ok,
        if shape_ok { 1.0 } else { 0.0 },
        format!("{} values, {} lengths, {} arcs for depth {}", mu.len(), seq.lk.len(), seq.arcs.len(), seq.depth),
    );
    if !shape_ok {
        return r;
    }

    let unit_dev = mu.iter().map(|m| (m.norm() - 1.0).abs()).fold(0.0, f64::max);
    r.push("unimodular", unit_dev <= UNIT_TOL, UNIT_TOL - unit_dev, format!("max ||μ|-1| = {unit_dev:e}"));

    let mu0_dev = (mu[0] - Complex64::new(1.0, 0.0)).norm();
    r.push("mu0_is_one", mu0_dev == 0.0, -mu0_dev, format!("|μ_0 - 1| = {mu0_dev:e}"));

    let min_dist = EigenSequence::min_pairwise_distance(mu);
    r.push("distinct", min_dist > 0.0, min_dist, format!("min pairwise distance {min_dist:e}"));

    let mut previous = f64::INFINITY;
    for k in 1..=seq.depth {
        let stored = seq.lk(k);
        let realized = EigenSequence::realized_length(mu, k);
        let dev = (realized - stored).abs();
        r.push(
            format!("realized_length[k={k}]"),
            dev <= LK_TOL,
            LK_TOL - dev,
            format!("stored {stored:e}, realized {realized:e}"),
        );
        r.push(
            format!("decreasing[k={k}]"),
            stored < previous,
            previous - stored,
            format!("l_{k} = {stored:e}"),
        );
        previous = stored;

        for i in 0..=k {
            match step_margin(k, stored, w, i) {
                Ok(margin) => r.push(
                    format!("step_inequality[k={k},i={i}]"),
                    margin > 1.0,
                    margin,
                    format!("2^-{} / (l_k^2 S_i) = {margin:e}", k + 2),
                ),
                Err(e) => r.push(format!("step_inequality[k={k},i={i}]"), false, 0.0, e.to_string()),
            }
        }
        match max_step_length(k, w, k) {
            Ok(m) => r.push(
                format!("within_max_step[k={k}]"),
                stored <= m,
                m / stored,
                format!("l_{k} = {stored:e} <= {m:e}"),
            ),
            Err(e) => r.push(format!("within_max_step[k={k}]"), false, 0.0, e.to_string()),
        }
    }

    let mut arcs_ok = true;
    let mut max_chord = 0.0f64;
    for p in 1..total {
        let k = block_of(p);
        let arc = seq.arc(p);
        let expected = Arc::new(p, mu[p - (1usize << (k - 1))], mu[p]);
        arcs_ok &= arc.index == p && arc.endpoint_a == expected.endpoint_a && arc.endpoint_b == expected.endpoint_b;
        max_chord = max_chord.max(arc.chord_length);
    }
    r.push("arc_endpoints", arcs_ok, if arcs_ok { 1.0 } else { 0.0 }, "Γ_p joins μ_{p-2^(k-1)} and μ_p");
    r.push("diameter_below_one", max_chord < 1.0, 1.0 - max_chord, format!("max chord {max_chord:e}"));

    for k in 2..=seq.depth {
        let parent: Vec<&Arc> = j_block(k - 1).map(|q| seq.arc(q)).collect();
        let mut worst_ok = true;
        for n in j_block(k) {
            let point_in = parent.iter().any(|a| a.contains(mu[n], NEST_SLACK));
            let arc_in = parent.iter().any(|a| a.contains_arc(seq.arc(n), NEST_SLACK));
            worst_ok &= point_in && arc_in;
        }
        r.push(
            format!("nesting[k={k}]"),
            worst_ok,
            if worst_ok { 1.0 } else { 0.0 },
            format!("arcs of J_{k} inside the union over J_{}", k - 1),
        );
    }

    if seq.mode == SequenceMode::RootsOfUnity {
        match &seq.orders {
            Some(orders) if orders.len() == mu.len() => {
                // distance to the nearest M-th root; μ^M itself loses M ulps
                let dev = mu
                    .iter()
                    .zip(orders)
                    .map(|(m, &o)| {
                        let turns = m.arg() / TAU * o as f64;
                        (turns - turns.round()).abs() * TAU / o as f64
                    })
                    .fold(0.0, f64::max);
                r.push("roots_of_unity", dev <= ROOT_TOL, ROOT_TOL - dev, format!("max angle to nearest M-th root {dev:e}"));
            }
            _ => r.push("roots_of_unity", false, 0.0, "orders missing or misaligned"),
        }
    }
    r
}

fn check_depth(seq: &EigenSequence, depth: usize) -> Result<()> {
    if depth > seq.depth {
        return Err(Error::Range(format!("sample depth {depth} exceeds construction depth {}", seq.depth)));
    }
    Ok(())
}

/// Walks the arc tree from `Γ_1` choosing children by `choices`, returning the
/// index of the final arc (0 stands for the degenerate root `{μ_0}`).
fn arc_for_path(depth: usize, choices: &[bool]) -> usize {
    if depth == 0 {
        return 0;
    }
    let mut q = 1usize;
    for d in 2..=depth {
        let quarter = 1usize << (d - 2);
        let endpoint = if choices[d - 2] { q } else { q - quarter };
        q = (1usize << (d - 1)) + endpoint;
    }
    q
}

fn path_point(seq: &EigenSequence, depth: usize, choices: &[bool]) -> Complex64 {
    match arc_for_path(depth, choices) {
        0 => seq.mu[0],
        q => seq.arc(q).midpoint(),
    }
}

/// Descends the nested arcs choosing a child uniformly at each level and
/// returns the midpoint of the arc reached at `depth`.
pub fn sample_k(seq: &EigenSequence, depth: usize, seed: u64) -> Result<Complex64> {
    check_depth(seq, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choices: Vec<bool> = (0..depth.saturating_sub(1)).map(|_| rng.random()).collect();
    Ok(path_point(seq, depth, &choices))
}

/// Many independent samples; sample `m` uses its own stream of `seed`.
pub fn sample_k_many(seq: &EigenSequence, depth: usize, count: usize, seed: u64) -> Result<Vec<Complex64>> {
    check_depth(seq, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let choices: Vec<bool> = (0..depth.saturating_sub(1)).map(|_| rng.random()).collect();
            path_point(seq, depth, &choices)
        })
        .collect())
}

/// Two samples at `depth` that share their ancestor arc at `shared`, so that
/// both lie on one arc of `J_shared` and `|λ - λ'| ≤ l_shared`.
pub fn sample_k_pair(seq: &EigenSequence, shared: usize, depth: usize, seed: u64) -> Result<(Complex64, Complex64)> {
    check_depth(seq, depth)?;
    if shared == 0 || shared > depth {
        return Err(Error::Range(format!("shared depth {shared} outside 1..={depth}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first: Vec<bool> = (0..depth - 1).map(|_| rng.random()).collect();
    let mut second = first.clone();
    for c in second.iter_mut().skip(shared - 1) {
        *c = rng.random();
    }
    Ok((path_point(seq, depth, &first), path_point(seq, depth, &second)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;

    fn unit_weights(depth: usize) -> WeightFamily {
        WeightFamily::constant(Grid::new(depth + 2, 1 << (depth + 1)).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn blocks() {
        assert_eq!(j_block(0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(j_block(1).collect::<Vec<_>>(), vec![1]);
        assert_eq!(j_block(3).collect::<Vec<_>>(), vec![4, 5, 6, 7]);
        assert_eq!(j_block(4).collect::<Vec<_>>(), (8..=15).collect::<Vec<_>>());
        for k in 1..12 {
            assert_eq!(j_block(k).count(), 1 << (k - 1));
            assert!(j_block(k).all(|p| block_of(p) == k));
        }
    }

    /// Literal summation of the products, independent of `step_sum`.
    fn oracle_sum(k: usize, w: f64) -> f64 {
        let mut s = 0.0;
        for n in j_block(k + 1) {
            let mut prod = 1.0;
            for _ in 0..n {
                prod *= 1.0 / (w * w);
            }
            s += prod;
        }
        s
    }

    #[test]
    fn max_step_length_examples() {
        let g = Grid::new(4, 16).unwrap();
        let ones = WeightFamily::constant(g, 1.0).unwrap();
        assert_eq!(oracle_sum(1, 1.0), 2.0);
        assert_eq!(max_step_length(1, &ones, 1).unwrap(), 0.125);
        assert_eq!(oracle_sum(2, 1.0), 4.0);
        assert_eq!(max_step_length(2, &ones, 2).unwrap(), 1.0 / 16.0);

        let twos = WeightFamily::constant(g, 2.0).unwrap();
        let s = oracle_sum(1, 2.0);
        assert_eq!(s, 5.0 / 64.0);
        let raw = (0.125f64 / s).sqrt();
        assert!((raw - (8.0f64 / 5.0).sqrt()).abs() < 1e-15);
        assert!((max_step_length(1, &twos, 1).unwrap() - 0.5 * raw).abs() < 1e-15);
    }

    #[test]
    fn max_step_length_needs_weights() {
        let small = WeightFamily::constant(Grid::new(2, 4).unwrap(), 1.0).unwrap();
        assert!(matches!(max_step_length(2, &small, 2), Err(Error::Range(_))));
        assert!(matches!(max_step_length(1, &small, 3), Err(Error::Range(_))));
    }

    #[test]
    fn extreme_weights_use_log_form() {
        let g = Grid::new(2, 64).unwrap();
        let big = WeightFamily::constant(g, 1e10).unwrap();
        assert!(matches!(step_sum(4, &big, 0), Err(Error::NumericRange(_))));
        // S ≈ 1e-320 (1 + 1e-20 + …): raw bound sqrt(2^-6 / 1e-320)
        let expected = 0.5 * (-0.5 * 6.0 * std::f64::consts::LN_2 + 0.5 * 320.0 * std::f64::consts::LN_10).exp();
        let got = max_step_length(4, &big, 1).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12);

        let small = WeightFamily::geometric(g, 0.25).unwrap();
        let log_s = log_step_sum(4, &small, 0).unwrap();
        // dominated by n = 31: Π_{p<31} 16^p = 16^465
        let top = 465.0 * 16f64.ln();
        assert!((log_s - top).abs() < 1e-9 * top);
        assert!(max_step_length(4, &small, 0).unwrap() > 0.0);
        let l = max_step_length(4, &small, 0).unwrap();
        assert!(step_margin(4, l, &small, 0).unwrap() > 1.0);
        assert!(step_margin(4, 1e10 * l, &small, 0).unwrap() < 1.0);
    }

    #[test]
    fn depth_one() {
        let w = unit_weights(1);
        let seq = build_sequence(&w, 1, SequenceMode::Generic, 3).unwrap();
        assert_eq!(seq.mu.len(), 2);
        assert_eq!(seq.mu[0], Complex64::new(1.0, 0.0));
        let d = (seq.mu[1] - seq.mu[0]).norm();
        assert!(d > 0.0 && d <= max_step_length(1, &w, 1).unwrap());
    }

    #[test]
    fn depth_three_generic() {
        let w = unit_weights(3);
        let seq = build_sequence(&w, 3, SequenceMode::Generic, 11).unwrap();
        assert_eq!(seq.mu.len(), 8);
        assert!(seq.min_distance > 0.0);
        for j in 0..4 {
            assert!((seq.mu[4 + j] - seq.mu[j]).norm() <= seq.lk(3));
        }
        let report = verify_constraints(&seq, &w);
        assert!(report.all_passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn depth_two_roots_of_unity() {
        let w = unit_weights(2);
        let seq = build_sequence(&w, 2, SequenceMode::RootsOfUnity, 5).unwrap();
        let orders = seq.orders.clone().unwrap();
        let m1 = orders[1];
        let expected = Complex64::from_polar(1.0, TAU / m1 as f64);
        assert!((seq.mu[1] - expected).norm() < 1e-12);
        let spacing = 2.0 * (PI / m1 as f64).sin();
        assert!(spacing <= max_step_length(1, &w, 1).unwrap());
        for (m, &o) in seq.mu.iter().zip(&orders) {
            assert!((m.powu(o as u32) - 1.0).norm() < 1e-10);
        }
        assert!(verify_constraints(&seq, &w).all_passed());
    }

    #[test]
    fn verify_catches_duplicates_and_long_steps() {
        let w = unit_weights(4);
        let seq = build_sequence(&w, 4, SequenceMode::Generic, 1).unwrap();
        assert!(verify_constraints(&seq, &w).all_passed());

        let mut dup = seq.clone();
        dup.mu[1] = dup.mu[0];
        let r = verify_constraints(&dup, &w);
        assert!(!r.find("distinct").next().unwrap().passed);

        // twice the unsafe bound: l_1² S = 4 · 2^-3
        let mut long = seq.clone();
        let raw = 2.0 * max_step_length(1, &w, 1).unwrap();
        long.lk[0] = 2.0 * raw;
        let r = verify_constraints(&long, &w);
        assert!(r.find("step_inequality[k=1,").any(|c| !c.passed));
        assert!(!r.find("realized_length[k=1]").next().unwrap().passed);
    }

    #[test]
    fn margins_reflect_safety_factor() {
        let w = unit_weights(6);
        let seq = build_sequence(&w, 6, SequenceMode::Generic, 0).unwrap();
        let r = verify_constraints(&seq, &w);
        assert!(r.all_passed());
        for c in r.find("step_inequality") {
            assert!(c.margin >= 4.0, "{c:?}");
        }
    }

    #[test]
    fn determinism_and_json_roundtrip() {
        let w = unit_weights(5);
        for mode in [SequenceMode::Generic, SequenceMode::RootsOfUnity] {
            let a = build_sequence(&w, 5, mode, 42).unwrap();
            let b = build_sequence(&w, 5, mode, 42).unwrap();
            assert_eq!(a, b);
            let back = EigenSequence::from_json(&a.to_json().unwrap()).unwrap();
            assert_eq!(a, back);
            for (x, y) in a.mu.iter().zip(&back.mu) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        let c = build_sequence(&w, 5, SequenceMode::Generic, 43).unwrap();
        assert_ne!(c.mu, build_sequence(&w, 5, SequenceMode::Generic, 42).unwrap().mu);
    }

    #[test]
    fn sampling() {
        let w = unit_weights(5);
        let seq = build_sequence(&w, 5, SequenceMode::Generic, 9).unwrap();
        assert_eq!(sample_k(&seq, 0, 1).unwrap(), Complex64::new(1.0, 0.0));
        for s in 0..20 {
            let z = sample_k(&seq, 1, s).unwrap();
            assert!(seq.arc(1).contains(z, 1e-12));
            assert!((z - seq.mu[0]).norm() <= (seq.mu[0] - seq.mu[1]).norm());
        }
        for s in 0..50 {
            let z = sample_k(&seq, 5, s).unwrap();
            for k in 1..=5 {
                let near = j_block(k).map(|p| (z - seq.mu[p]).norm()).fold(f64::INFINITY, f64::min);
                assert!(near <= seq.lk(k), "k={k} near={near} lk={}", seq.lk(k));
                assert!(seq.cantor_approx(k).unwrap().contains(z, 1e-12));
            }
        }
        assert!(matches!(sample_k(&seq, 6, 0), Err(Error::Range(_))));
    }

    #[test]
    fn product_bound_on_samples() {
        let w = unit_weights(6);
        let seq = build_sequence(&w, 6, SequenceMode::Generic, 2).unwrap();
        for z in sample_k_many(&seq, 6, 40, 8).unwrap() {
            for k in 1..=6 {
                for n in (1 << k)..seq.len() {
                    let prod: f64 = seq.mu[..n].iter().map(|m| (z - m).norm_sqr()).product();
                    assert!(prod < seq.lk(k) * seq.lk(k));
                }
            }
        }
    }

    #[test]
    fn pairs_share_ancestor() {
        let w = unit_weights(5);
        let seq = build_sequence(&w, 5, SequenceMode::Generic, 4).unwrap();
        for s in 0..30 {
            for shared in 1..=5 {
                let (a, b) = sample_k_pair(&seq, shared, 5, s).unwrap();
                assert!((a - b).norm() <= seq.lk(shared) + 1e-15);
            }
        }
    }

    #[test]
    fn cantor_levels_nest() {
        let w = unit_weights(6);
        let seq = build_sequence(&w, 6, SequenceMode::RootsOfUnity, 6).unwrap();
        for k in 2..=6 {
            let parent = seq.cantor_approx(k - 1).unwrap();
            let child = seq.cantor_approx(k).unwrap();
            assert!(child.nested_in(&parent, 1e-12));
        }
    }
}
