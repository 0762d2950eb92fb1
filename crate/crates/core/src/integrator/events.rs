use std::cmp::Ordering;

use super::Solution;

/// Sub-samples per accepted step used to bracket sign changes.
const SAMPLES_PER_STEP: usize = 16;
/// An excursion whose distance from the boundary never exceeds this is a touch.
pub const GRAZE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upward,
    Downward,
    Grazing,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EventRecord {
    pub species: usize,
    pub boundary: f64,
    pub time: f64,
    pub direction: Direction,
}

struct Sample {
    t: f64,
    x: f64,
}

/// Dense samples of one species: a fixed grid per step plus every interior
/// extremum, so that no excursion across a level can hide between samples.
fn species_samples(sol: &Solution, species: usize, levels: &[f64]) -> Vec<Sample> {
    let n = sol.dim();
    let mut x = vec![0.0; n];
    let mut d = vec![0.0; n];
    let probe = |t: f64, k: usize, x: &mut Vec<f64>, d: &mut Vec<f64>| {
        sol.interpolate_in_step(k, t, x);
        sol.system().rhs(t, x, d);
        (x[species], d[species])
    };

    let mut out: Vec<Sample> = Vec::new();
    if sol.steps().is_empty() {
        out.push(Sample { t: 0.0, x: sol.initial().concentrations[species] });
        return out;
    }
    for (k, step) in sol.steps().iter().enumerate() {
        let mut prev: Option<(f64, f64, f64)> = None;
        for j in 0..=SAMPLES_PER_STEP {
            if k > 0 && j == 0 {
                // shared with the end of the previous step
                let (t, xv) = (step.t0, out.last().map_or(0.0, |s| s.x));
                let (_, dv) = probe(t, k, &mut x, &mut d);
                prev = Some((t, xv, dv));
                continue;
            }
            let t = if j == SAMPLES_PER_STEP { step.t0 + step.h } else { step.t0 + step.h * j as f64 / SAMPLES_PER_STEP as f64 };
            let (xv, dv) = probe(t, k, &mut x, &mut d);
            if let Some((ta, xa, da)) = prev {
                let reach = (t - ta) * (da.abs().max(dv.abs())) * 2.0 + GRAZE_TOL;
                let near = levels.iter().any(|&b| (xa - b).abs() < reach || (xv - b).abs() < reach);
                if da * dv < 0.0 && near {
                    // bisect on the sign of x' for the extremum
                    let (mut lo, mut hi) = (ta, t);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        let (_, dm) = probe(mid, k, &mut x, &mut d);
                        if (dm > 0.0) == (da > 0.0) && dm != 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo < 1e-15 * t.abs().max(1.0) {
                            break;
                        }
                    }
                    let te = 0.5 * (lo + hi);
                    let (xe, _) = probe(te, k, &mut x, &mut d);
                    out.push(Sample { t: te, x: xe });
                }
            }
            out.push(Sample { t, x: xv });
            prev = Some((t, xv, dv));
        }
    }
    out
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn bisect(sol: &Solution, species: usize, level: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let s_lo = sign(sol.value_at(species, lo) - level);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sign(sol.value_at(species, mid) - level);
        if s == 0 {
            return mid;
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn level_events(sol: &Solution, species: usize, level: f64, samples: &[Sample], tol: f64, out: &mut Vec<EventRecord>) {
    // (sign, sample index) of the last sample strictly off the level
    let mut last: Option<(i8, usize)> = None;
    let mut found: Vec<(EventRecord, usize, usize)> = Vec::new();
    for (j, s) in samples.iter().enumerate() {
        let sg = sign(s.x - level);
        if sg == 0 {
            continue;
        }
        if let Some((ps, pj)) = last {
            if ps != sg {
                let t = bisect(sol, species, level, samples[pj].t, s.t, tol);
                let direction = if sg > 0 { Direction::Upward } else { Direction::Downward };
                found.push((EventRecord { species, boundary: level, time: t, direction }, pj, j));
            } else if j > pj + 1 && samples[pj + 1..j].iter().all(|m| m.x == level) {
                // touched exactly and came back
                out.push(EventRecord { species, boundary: level, time: samples[pj + 1].t, direction: Direction::Grazing });
            }
        }
        last = Some((sg, j));
    }
    // near-misses: an interior extremum within GRAZE_TOL of the level without a crossing
    for w in samples.windows(3) {
        let (a, m, b) = (&w[0], &w[1], &w[2]);
        let ga = a.x - level;
        let gm = m.x - level;
        let gb = b.x - level;
        let is_min = gm.abs() < ga.abs() && gm.abs() < gb.abs();
        if is_min && gm != 0.0 && gm.abs() < GRAZE_TOL && sign(ga) == sign(gm) && sign(gb) == sign(gm) {
            out.push(EventRecord { species, boundary: level, time: m.t, direction: Direction::Grazing });
        }
    }
    // a crossing pair whose excursion stays within GRAZE_TOL is a touch, not a visit
    let mut i = 0;
    while i < found.len() {
        if i + 1 < found.len() {
            let (ref e1, _, j1) = found[i];
            let (ref e2, j2s, _) = found[i + 1];
            let excursion = samples[j1..=j2s].iter().map(|s| (s.x - level).abs()).fold(0.0, f64::max);
            if e1.direction != e2.direction && excursion < GRAZE_TOL {
                out.push(EventRecord {
                    species,
                    boundary: level,
                    time: 0.5 * (e1.time + e2.time),
                    direction: Direction::Grazing,
                });
                i += 2;
                continue;
            }
        }
        out.push(found[i].0.clone());
        i += 1;
    }
}

pub(crate) fn sort_events(events: &mut [EventRecord]) {
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.species.cmp(&b.species))
            .then(a.boundary.partial_cmp(&b.boundary).unwrap_or(Ordering::Equal))
    });
}

/// Finds every time a species crosses (or touches) one of its boundary levels.
///
/// `boundaries[i]` lists the levels for species `i`; missing entries mean none.
/// Crossings are localized by bisection on the dense output to `time_tol`.
pub fn detect_events(sol: &Solution, boundaries: &[Vec<f64>], time_tol: f64) -> Vec<EventRecord> {
    let mut out = Vec::new();
    for (species, levels) in boundaries.iter().enumerate().take(sol.dim()) {
        if levels.is_empty() {
            continue;
        }
        let samples = species_samples(sol, species, levels);
        for &level in levels {
            let before = out.len();
            level_events(sol, species, level, &samples, time_tol, &mut out);
            for e in &mut out[before..] {
                if e.direction != Direction::Grazing {
                    e.time = e.time.clamp(0.0, sol.t_end());
                }
            }
        }
    }
    sort_events(&mut out);
    out
}
