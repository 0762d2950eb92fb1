use std::fmt::Write as _;

use super::AnalysisError;
use crate::integrator::Solution;

/// Beyond this, `2^-t` is below credible global integration error.
pub const REALTIME_T_MAX: f64 = 25.0;
const ASSUMED_GLOBAL_ERROR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RealTimeVerdict {
    pub species: usize,
    pub alpha: f64,
    pub pass: bool,
    pub first_violation_time: Option<f64>,
    /// `(t, |x(t) − |α||, 2^-t)` on the checked grid.
    pub margin_curve: Vec<(f64, f64, f64)>,
    pub warnings: Vec<String>,
}

impl RealTimeVerdict {
    pub fn margin_csv(&self) -> String {
        let mut s = String::from("t,gap,budget\n");
        for (t, g, b) in &self.margin_curve {
            writeln!(s, "{t:.17e},{g:.17e},{b:.17e}").unwrap();
        }
        s
    }
}

/// Checks `|x(t) − |α|| < 2^-t` on the grid `1, 1 + h, …` up to `t_max`.
pub fn check_realtime(
    sol: &Solution,
    species: usize,
    alpha: f64,
    t_max: f64,
    grid_step: f64,
) -> Result<RealTimeVerdict, AnalysisError> {
    if !(1.0..=REALTIME_T_MAX).contains(&t_max) {
        return Err(AnalysisError::Precondition(format!("t_max = {t_max} must lie in [1, {REALTIME_T_MAX}]")));
    }
    if t_max > sol.t_end() {
        return Err(AnalysisError::Precondition(format!("solution ends at {} before t_max = {t_max}", sol.t_end())));
    }
    if !(grid_step > 0.0) {
        return Err(AnalysisError::Precondition(format!("grid step {grid_step} must be positive")));
    }
    if species >= sol.dim() {
        return Err(AnalysisError::Precondition(format!("no species with index {species}")));
    }
    let mut warnings = Vec::new();
    if 2f64.powf(-t_max) < 100.0 * ASSUMED_GLOBAL_ERROR * alpha.abs().max(1.0) {
        warnings.push(format!("2^-{t_max} is within 100x of the integrator's global error"));
    }
    let target = alpha.abs();
    let mut margin_curve = Vec::new();
    let mut first_violation_time = None;
    let mut i = 0u64;
    loop {
        let t = 1.0 + i as f64 * grid_step;
        if t > t_max * (1.0 + 1e-12) {
            break;
        }
        let gap = (sol.value_at(species, t) - target).abs();
        let budget = 2f64.powf(-t);
        if gap >= budget && first_violation_time.is_none() {
            first_violation_time = Some(t);
        }
        margin_curve.push((t, gap, budget));
        i += 1;
    }
    Ok(RealTimeVerdict { species, alpha, pass: first_violation_time.is_none(), first_violation_time, margin_curve, warnings })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EpsdVerdict {
    pub pass: bool,
    /// Earliest `t0` with `|x(t) − α| < ε` on all of `(t0, t0 + d)`.
    pub witness_t0: Option<f64>,
}

/// Scans the dense output on a grid no coarser than `d / 1000`.
pub fn check_epsd(sol: &Solution, species: usize, alpha: f64, eps: f64, d: f64) -> Result<EpsdVerdict, AnalysisError> {
    if !(eps > 0.0 && d > 0.0) {
        return Err(AnalysisError::Precondition(format!("eps = {eps} and d = {d} must be positive")));
    }
    if d > sol.t_end() {
        return Err(AnalysisError::Precondition(format!("horizon {} cannot contain a window of length {d}", sol.t_end())));
    }
    let t_end = sol.t_end();
    let n = ((t_end / (d / 1000.0)).ceil() as usize).max(1);
    let h = t_end / n as f64;
    let inside = |t: f64| (sol.value_at(species, t) - alpha).abs() < eps;
    // start of the current run of in-tube grid points
    let mut run: Option<usize> = None;
    for j in 0..=n {
        let t = j as f64 * h;
        if !inside(t) {
            run = None;
            continue;
        }
        let start = *run.get_or_insert(j);
        if t - start as f64 * h >= d * (1.0 - 1e-12) {
            let t0 = if start == 0 {
                0.0
            } else {
                // tube entry lies between the previous grid point and this run's start
                let (mut lo, mut hi) = ((start - 1) as f64 * h, start as f64 * h);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if inside(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            };
            return Ok(EpsdVerdict { pass: true, witness_t0: Some(t0) });
        }
    }
    Ok(EpsdVerdict { pass: false, witness_t0: None })
}

/// `d = ε / (2 β0)` where `β0` bounds `|x'|`.
pub fn universal_d(eps: f64, beta0: f64) -> f64 {
    eps / (2.0 * beta0)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Assignment {
    pub species: usize,
    pub alpha: f64,
    pub eps: f64,
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct UnambiguousVerdict {
    pub pass: bool,
    /// Index pairs whose tubes `(α − ε, α + ε)` overlap on the same species.
    pub overlaps: Vec<(usize, usize)>,
    /// Indices whose `(ε, d)` check fails.
    pub failures: Vec<usize>,
}

pub fn check_unambiguous(sol: &Solution, assignments: &[Assignment]) -> Result<UnambiguousVerdict, AnalysisError> {
    let mut overlaps = Vec::new();
    for (i, a) in assignments.iter().enumerate() {
        for (j, b) in assignments.iter().enumerate().skip(i + 1) {
            if a.species == b.species && (a.alpha - b.alpha).abs() < a.eps + b.eps {
                overlaps.push((i, j));
            }
        }
    }
    let mut failures = Vec::new();
    for (i, a) in assignments.iter().enumerate() {
        if !check_epsd(sol, a.species, a.alpha, a.eps, a.d)?.pass {
            failures.push(i);
        }
    }
    Ok(UnambiguousVerdict { pass: overlaps.is_empty() && failures.is_empty(), overlaps, failures })
}
