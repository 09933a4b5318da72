//! Minimisation of H(c1, c2) over c1 >= 0, c2 > c1 + beta.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::models::ProblemSpec;
use crate::parisian::{MonotonePiece, ThetaBasis};
use crate::quad::{self, bisect};
use crate::scale::Side;
use crate::valuation::{hjb_residual, H_surface, Policy, ValueCurve, ValueFunction, KINK_RADIUS};

/// Which first-order system the optimum satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumCase {
    /// theta'(c1) = theta'(c2) = H.
    Interior,
    /// c1 = b, theta'(c2) = H.
    C1AtB,
    /// c1 = 0, theta'(c2) = H.
    #[serde(rename = "c1_at_0")]
    C1AtZero,
    /// c2 = b, theta'(c1) = H.
    C2AtB,
    /// (0, b) with no first-order condition.
    #[serde(rename = "corner_0_b")]
    Corner0B,
}

impl OptimumCase {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimumCase::Interior => "interior",
            OptimumCase::C1AtB => "c1_at_b",
            OptimumCase::C1AtZero => "c1_at_0",
            OptimumCase::C2AtB => "c2_at_b",
            OptimumCase::Corner0B => "corner_0_b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub policy: Policy,
    pub case: OptimumCase,
    pub h: f64,
}

/// Relative residuals of the first-order conditions that apply to the case.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FirstOrderResiduals {
    /// |theta'(c1) - theta'(c2)| / H.
    pub slope_gap: Option<f64>,
    /// |theta'(c2) - H| / H.
    pub c2_condition: Option<f64>,
    /// |theta'(c1) - H| / H.
    pub c1_condition: Option<f64>,
}

impl FirstOrderResiduals {
    pub fn max(&self) -> f64 {
        [self.slope_gap, self.c2_condition, self.c1_condition]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerResult {
    pub policy: Policy,
    pub case: OptimumCase,
    pub h_value: f64,
    pub residuals: FirstOrderResiduals,
    /// (c1_max, c2_max).
    pub search_box: (f64, f64),
    /// Other candidates, best first.
    pub candidates: Vec<Candidate>,
    /// Conditions the caller should know about (ties, kink landings, uncertified corners).
    pub flags: Vec<String>,
}

const BOX_GRID: usize = 48;

/// A box [0, c1_max] x [0, c2_max] containing the minimisers of H.
pub fn search_box(basis: &ThetaBasis) -> Result<(f64, f64)> {
    let e = basis.spec.econ;
    let beta = e.beta;
    let mut c2max = basis.b().max(e.l).max(10.0 * beta);
    for _ in 0..60 {
        let mut best = f64::INFINITY;
        for i in 0..BOX_GRID {
            let c1 = (c2max - beta) * i as f64 / BOX_GRID as f64;
            for j in 1..=BOX_GRID {
                let c2 = c1 + beta + (c2max - c1 - beta) * j as f64 / BOX_GRID as f64;
                if c2 < c2max {
                    best = best.min(H_surface(basis, c1, c2)?);
                }
            }
        }
        let edge = (0..BOX_GRID)
            .map(|i| H_surface(basis, (c2max - beta) * i as f64 / BOX_GRID as f64, c2max))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if edge > 2.0 * best {
            return Ok((c2max, c2max));
        }
        c2max *= 2.0;
    }
    Err(Error::nonconvergence("search_box", "no containing box after 60 doublings"))
}

/// theta' at x seen from inside `piece`.
fn slope_in(basis: &ThetaBasis, piece: &MonotonePiece, x: f64) -> f64 {
    let side = if x >= piece.hi { Side::Left } else { Side::Right };
    basis.theta_deriv_side(x, side).unwrap_or(f64::NAN)
}

/// Point of `piece` where theta' equals `lambda`, clamped to the piece.
fn level_point(basis: &ThetaBasis, piece: &MonotonePiece, lambda: f64) -> f64 {
    let (a, b) = (piece.lo, piece.hi);
    let (fa, fb) = (slope_in(basis, piece, a) - lambda, slope_in(basis, piece, b) - lambda);
    if fa.signum() == fb.signum() {
        return if fa.abs() < fb.abs() { a } else { b };
    }
    bisect(|x| slope_in(basis, piece, x) - lambda, a, b, 0.0).unwrap_or(0.5 * (a + b))
}

fn interior_candidates(basis: &ThetaBasis, pieces: &[MonotonePiece]) -> Vec<Candidate> {
    let beta = basis.spec.econ.beta;
    let theta = |x: f64| basis.theta(x).unwrap_or(f64::NAN);
    let mut out = vec![];
    for d in pieces.iter().filter(|p| !p.increasing) {
        for i in pieces.iter().filter(|p| p.increasing && p.hi > d.lo) {
            let lam_lo = slope_in(basis, d, d.hi).max(slope_in(basis, i, i.lo));
            let lam_hi = slope_in(basis, d, d.lo).min(slope_in(basis, i, i.hi));
            if !(lam_hi > lam_lo) {
                continue;
            }
            let ends = |lam: f64| (level_point(basis, d, lam), level_point(basis, i, lam));
            let f = |lam: f64| {
                let (c1, c2) = ends(lam);
                theta(c2) - theta(c1) - lam * (c2 - c1 - beta)
            };
            let grid = quad::linspace(lam_lo, lam_hi, 65);
            let vals: Vec<f64> = grid.iter().map(|&g| f(g)).collect();
            for k in 0..grid.len() - 1 {
                if vals[k] > 0.0 && vals[k + 1] <= 0.0 {
                    let Ok(lam) = bisect(f, grid[k], grid[k + 1], 0.0) else { continue };
                    let (c1, c2) = ends(lam);
                    if let Ok(policy) = Policy::new(c1, c2, beta) {
                        if let Ok(h) = H_surface(basis, c1, c2) {
                            out.push(Candidate { policy, case: OptimumCase::Interior, h });
                        }
                    }
                }
            }
        }
    }
    out
}

/// c2 on an increasing piece with theta'(c2) (c2 - c1 - beta) = theta(c2) - theta(c1).
fn c2_condition_candidates(basis: &ThetaBasis, pieces: &[MonotonePiece], c1: f64, case: OptimumCase) -> Vec<Candidate> {
    let beta = basis.spec.econ.beta;
    let t1 = basis.theta(c1).unwrap_or(f64::NAN);
    let mut out = vec![];
    for p in pieces.iter().filter(|p| p.increasing) {
        let lo = p.lo.max(c1 + beta);
        if lo >= p.hi {
            continue;
        }
        let g = |c2: f64| slope_in(basis, p, c2) * (c2 - c1 - beta) - (basis.theta(c2).unwrap_or(f64::NAN) - t1);
        if g(lo) < 0.0 && g(p.hi) > 0.0 {
            if let Ok(c2) = bisect(g, lo, p.hi, 0.0) {
                if let (Ok(policy), Ok(h)) = (Policy::new(c1, c2, beta), H_surface(basis, c1, c2)) {
                    out.push(Candidate { policy, case, h });
                }
            }
        }
    }
    out
}

/// c1 on a decreasing piece with theta'(c1) (b - c1 - beta) = theta(b) - theta(c1).
fn c2_at_b_candidates(basis: &ThetaBasis, pieces: &[MonotonePiece]) -> Vec<Candidate> {
    let beta = basis.spec.econ.beta;
    let b = basis.b();
    let tb = basis.theta(b).unwrap_or(f64::NAN);
    let mut out = vec![];
    for p in pieces.iter().filter(|p| !p.increasing) {
        let hi = p.hi.min(b - beta);
        if hi <= p.lo {
            continue;
        }
        let g = |c1: f64| slope_in(basis, p, c1) * (b - c1 - beta) - (tb - basis.theta(c1).unwrap_or(f64::NAN));
        if g(p.lo) > 0.0 && g(hi) < 0.0 {
            if let Ok(c1) = bisect(g, p.lo, hi, 0.0) {
                if let (Ok(policy), Ok(h)) = (Policy::new(c1, b, beta), H_surface(basis, c1, b)) {
                    out.push(Candidate { policy, case: OptimumCase::C2AtB, h });
                }
            }
        }
    }
    out
}

pub fn residuals(basis: &ThetaBasis, cand: &Candidate) -> FirstOrderResiduals {
    let Policy { c1, c2 } = cand.policy;
    let h = cand.h;
    let d1 = basis.theta_deriv_side(c1, Side::Right).unwrap_or(f64::NAN);
    let d2 = basis.theta_deriv_side(c2, Side::Left).unwrap_or(f64::NAN);
    let rel = |v: f64| Some(v.abs() / h);
    match cand.case {
        OptimumCase::Interior => FirstOrderResiduals { slope_gap: rel(d1 - d2), c2_condition: rel(d2 - h), c1_condition: None },
        OptimumCase::C1AtB | OptimumCase::C1AtZero => FirstOrderResiduals { c2_condition: rel(d2 - h), ..Default::default() },
        OptimumCase::C2AtB => FirstOrderResiduals { c1_condition: rel(d1 - h), ..Default::default() },
        OptimumCase::Corner0B => FirstOrderResiduals::default(),
    }
}

/// Minimise H by the level-set method plus the boundary cases.
pub fn optimize(basis: &ThetaBasis) -> Result<OptimizerResult> {
    if !(basis.spec.econ.q > 0.0) {
        return Err(Error::degenerate("optimize", "needs q > 0"));
    }
    let (c1max, c2max) = search_box(basis)?;
    let beta = basis.spec.econ.beta;
    let b = basis.b();
    let pieces = basis.monotone_pieces(c2max);
    let mut cands = interior_candidates(basis, &pieces);
    if b > 0.0 {
        cands.extend(c2_condition_candidates(basis, &pieces, b, OptimumCase::C1AtB));
    }
    cands.extend(c2_condition_candidates(basis, &pieces, 0.0, OptimumCase::C1AtZero));
    if b > beta {
        cands.extend(c2_at_b_candidates(basis, &pieces));
        let policy = Policy::new(0.0, b, beta)?;
        cands.push(Candidate { policy, case: OptimumCase::Corner0B, h: H_surface(basis, 0.0, b)? });
    }
    cands.retain(|c| c.h.is_finite());
    cands.sort_by(|a, b| a.h.total_cmp(&b.h));
    let Some(best) = cands.first().copied() else {
        return Err(Error::Infeasible("no candidate optimum inside the search box".into()));
    };
    let mut flags = vec![];
    for other in cands.iter().skip(1) {
        if other.case != best.case && (other.h - best.h).abs() <= 1e-9 * best.h {
            flags.push(format!(
                "tie: {} candidate ({}, {}) has H within 1e-9 of the best",
                other.case.as_str(),
                other.policy.c1,
                other.policy.c2
            ));
        }
    }
    if best.case == OptimumCase::Corner0B {
        flags.push("corner (0, b) has no first-order certificate; accepted because it has the smallest H".into());
    }
    if basis.is_bv() && (best.policy.c2 - b).abs() < 1e-6 {
        flags.push("c2 lands on b in the bounded-variation case, where the optimal-value form is not stated".into());
    }
    Ok(OptimizerResult {
        policy: best.policy,
        case: best.case,
        h_value: best.h,
        residuals: residuals(basis, &best),
        search_box: (c1max, c2max),
        candidates: cands,
        flags,
    })
}

/// Brute-force minimum of H on nested grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOracle {
    pub policy: Policy,
    pub h: f64,
    /// Final grid step.
    pub step: f64,
    /// Number of separate local-minimum basins on the coarse grid.
    pub basins: usize,
}

/// Search H on a grid of `coarse` step over the box, then refine by factors of
/// ten around the incumbent until the step reaches `fine`.
pub fn grid_oracle(basis: &ThetaBasis, bx: (f64, f64), coarse: f64, fine: f64, exec: Execution) -> Result<GridOracle> {
    let beta = basis.spec.econ.beta;
    let n = (bx.1 / coarse).round() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|k| k as f64 * coarse).collect();
    let th: Vec<f64> = exec.map(&xs, |&x| basis.theta(x).unwrap_or(f64::NAN));
    let hval = |i: usize, j: usize| -> f64 {
        let gap = xs[j] - xs[i] - beta;
        if xs[i] > bx.0 || gap <= 1e-12 {
            f64::INFINITY
        } else {
            (th[j] - th[i]) / gap
        }
    };
    let rows: Vec<(f64, usize)> = exec.map_range(n, |i| {
        (0..n).map(|j| (hval(i, j), j)).fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    });
    let (mut bi, mut bj, mut best) = (0, 0, f64::INFINITY);
    for (i, &(h, j)) in rows.iter().enumerate() {
        if h < best {
            (bi, bj, best) = (i, j, h);
        }
    }
    // local minima over the 8-neighbourhood, grouped into connected basins
    let is_min = |i: usize, j: usize| {
        let h = hval(i, j);
        if !h.is_finite() {
            return false;
        }
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (a, c) = (i as i64 + di, j as i64 + dj);
                if (di, dj) == (0, 0) || a < 0 || c < 0 || a >= n as i64 || c >= n as i64 {
                    continue;
                }
                if hval(a as usize, c as usize) < h {
                    return false;
                }
            }
        }
        true
    };
    let minima: Vec<(usize, usize)> = exec
        .map_range(n, |i| (0..n).filter(|&j| is_min(i, j)).map(|j| (i, j)).collect::<Vec<_>>())
        .into_iter()
        .flatten()
        .collect();
    let basins = count_clusters(&minima);

    let (mut c1, mut c2, mut step) = (xs[bi], xs[bj], coarse);
    while step > fine * 1.0000001 {
        let next = (step / 10.0).max(fine);
        let half = (2.0 * step / next).round() as i64;
        let mut inc = (f64::INFINITY, c1, c2);
        for a in -half..=half {
            let x1 = c1 + a as f64 * next;
            if x1 < 0.0 || x1 > bx.0 {
                continue;
            }
            let t1 = basis.theta(x1)?;
            for c in -half..=half {
                let x2 = c2 + c as f64 * next;
                if x2 - x1 - beta <= 1e-12 || x2 > bx.1 {
                    continue;
                }
                let h = (basis.theta(x2)? - t1) / (x2 - x1 - beta);
                if h < inc.0 {
                    inc = (h, x1, x2);
                }
            }
        }
        (best, c1, c2) = inc;
        step = next;
    }
    let _ = best;
    Ok(GridOracle { policy: Policy { c1, c2 }, h: H_surface(basis, c1, c2)?, step, basins })
}

fn count_clusters(points: &[(usize, usize)]) -> usize {
    let mut seen = vec![false; points.len()];
    let mut clusters = 0;
    for s in 0..points.len() {
        if seen[s] {
            continue;
        }
        clusters += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(k) = stack.pop() {
            for (m, p) in points.iter().enumerate() {
                if !seen[m] && p.0.abs_diff(points[k].0) <= 1 && p.1.abs_diff(points[k].1) <= 1 {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
    }
    clusters
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    /// theta' nondecreasing on [c2*, c2* + 5l] at step 1e-2.
    pub tail_monotone: bool,
    /// Largest |residual| / (qV + 1) on (-l, c2*).
    pub hjb_inside: f64,
    /// Largest residual on (c2*, c2* + 3l).
    pub hjb_outside: f64,
    pub hjb_ok: bool,
    /// Smallest H(p) - H* over random feasible points.
    pub random_gap: f64,
    pub random_ok: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.tail_monotone && self.hjb_ok && self.random_ok
    }
}

pub const HJB_TOL: f64 = 1e-6;

/// Whether theta' is nondecreasing on a grid of [from, to], stepping over kinks.
pub fn derivative_nondecreasing(basis: &ThetaBasis, from: f64, to: f64, step: f64) -> bool {
    let n = ((to - from) / step).round() as usize;
    let mut prev: Option<f64> = None;
    for k in 0..=n {
        let x = from + k as f64 * step;
        if basis.kinks().iter().any(|&c| (x - c).abs() < 1e-12) {
            prev = None;
            continue;
        }
        let d = basis.theta_deriv_side(x, Side::Right).unwrap_or(f64::NAN);
        if let Some(p) = prev {
            if d < p - 1e-12 * p.abs() {
                return false;
            }
        }
        prev = Some(d);
    }
    true
}

/// HJB residuals of the optimal value curve on a grid over (-l, c2* + 3l).
pub fn hjb_scan(basis: &ThetaBasis, curve: &ValueCurve, n: usize, exec: Execution) -> Vec<(f64, f64, f64)> {
    let l = basis.l();
    let c2 = curve.policy.c2;
    let xs: Vec<f64> = quad::linspace(-l, c2 + 3.0 * l, n + 2)[1..=n].to_vec();
    let kinks = curve.kinks();
    let xs: Vec<f64> = xs.into_iter().filter(|x| kinks.iter().all(|k| (x - k).abs() >= KINK_RADIUS)).collect();
    exec.map(&xs, |&x| (x, curve.value(x), hjb_residual(basis, curve, x).unwrap_or(f64::NAN)))
}

pub fn verify_optimality(basis: &ThetaBasis, result: &OptimizerResult, exec: Execution) -> Result<VerificationReport> {
    let l = basis.l();
    let q = basis.spec.econ.q;
    let beta = basis.spec.econ.beta;
    let Policy { c1: _, c2 } = result.policy;
    let tail_monotone = derivative_nondecreasing(basis, c2, c2 + 5.0 * l, 1e-2);
    let curve = ValueCurve::new(basis, result.policy)?;
    let (mut inside, mut outside) = (0.0f64, f64::NEG_INFINITY);
    for (x, v, r) in hjb_scan(basis, &curve, 400, exec) {
        if x < c2 {
            inside = inside.max(r.abs() / (q * v + 1.0));
        } else {
            outside = outside.max(r);
        }
    }
    let hjb_ok = inside < HJB_TOL && outside <= HJB_TOL;
    let (c1max, c2max) = result.search_box;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut gap = f64::INFINITY;
    let mut drawn = 0;
    while drawn < 10_000 {
        let c1 = rng.random::<f64>() * c1max;
        let c2 = rng.random::<f64>() * c2max;
        if c2 <= c1 + beta {
            continue;
        }
        drawn += 1;
        gap = gap.min(H_surface(basis, c1, c2)? - result.h_value);
    }
    Ok(VerificationReport {
        tail_monotone,
        hjb_inside: inside,
        hjb_outside: outside,
        hjb_ok,
        random_gap: gap,
        random_ok: gap >= -1e-12 * result.h_value,
    })
}

/// A parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Beta,
    Delta,
    B,
    L,
    M,
    Q,
}

impl SweepParam {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "beta" => SweepParam::Beta,
            "delta" => SweepParam::Delta,
            "b" => SweepParam::B,
            "l" => SweepParam::L,
            "m" => SweepParam::M,
            "q" => SweepParam::Q,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::Delta => "delta",
            SweepParam::B => "b",
            SweepParam::L => "l",
            SweepParam::M => "m",
            SweepParam::Q => "q",
        }
    }

    pub fn apply(self, spec: &ProblemSpec, v: f64) -> ProblemSpec {
        let mut s = *spec;
        match self {
            SweepParam::Beta => s.econ.beta = v,
            SweepParam::Delta => s.refraction.delta = v,
            SweepParam::B => s.refraction.b = v,
            SweepParam::L => s.econ.l = v,
            SweepParam::M => s.econ.m = v,
            SweepParam::Q => s.econ.q = v,
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub result: std::result::Result<OptimizerResult, String>,
}

/// Optimise at each parameter value; failures are recorded per point.
pub fn sweep(spec: &ProblemSpec, param: SweepParam, values: &[f64], exec: Execution) -> Vec<SweepRow> {
    exec.map(values, |&v| {
        let s = param.apply(spec, v);
        let result = ThetaBasis::new(&s).and_then(|b| optimize(&b)).map_err(|e| e.to_string());
        SweepRow { value: v, result }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_optima() {
        let t = ThetaBasis::new(&ProblemSpec::brownian_reference()).unwrap();
        let r = optimize(&t).unwrap();
        assert_eq!(r.case, OptimumCase::Interior);
        assert!((r.policy.c1 - 0.064025).abs() < 1e-5, "{r:?}");
        assert!((r.policy.c2 - 5.183823).abs() < 1e-5);
        assert!((r.h_value - 0.8525374860).abs() < 1e-9);
        assert!(r.residuals.max() < 1e-9);

        let c = ThetaBasis::new(&ProblemSpec::cramer_lundberg_reference()).unwrap();
        let r = optimize(&c).unwrap();
        assert_eq!(r.case, OptimumCase::Interior);
        assert!((r.policy.c1 - 4.117259).abs() < 1e-5, "{r:?}");
        assert!((r.policy.c2 - 7.047918).abs() < 1e-5);
        assert!((r.h_value - 0.4747568569).abs() < 1e-9);
        let bp = c.breakpoints().unwrap();
        assert!(r.policy.c1 < bp.eps2 && bp.eps2 < r.policy.c2);
    }

    #[test]
    fn perturbation_raises_h() {
        let t = ThetaBasis::new(&ProblemSpec::brownian_reference()).unwrap();
        let r = optimize(&t).unwrap();
        let h = H_surface(&t, r.policy.c1 + 0.1, r.policy.c2).unwrap();
        assert!(h > r.h_value);
    }

    #[test]
    fn deterministic() {
        let t = ThetaBasis::new(&ProblemSpec::cramer_lundberg_reference()).unwrap();
        assert_eq!(optimize(&t).unwrap(), optimize(&t).unwrap());
    }

    #[test]
    fn cost_pushes_c1_to_zero() {
        let mut s = ProblemSpec::brownian_reference();
        s.econ.beta = 2.0;
        let r = optimize(&ThetaBasis::new(&s).unwrap()).unwrap();
        assert_eq!(r.case, OptimumCase::C1AtZero);
        assert_eq!(r.policy.c1, 0.0);
        assert!(r.residuals.c2_condition.unwrap() < 1e-9);
    }
}
