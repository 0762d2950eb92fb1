//! Adaptive Dormand-Prince 5(4) integration of mass-action dynamics with
//! dense output, boundary-crossing detection, bound estimates and arc length.

mod events;
mod quad;

use std::io::Write;

use thiserror::Error;

use crate::crn::{derive_field, PolynomialField, ReactionNetwork, State, Waveform};

pub use events::{detect_events, Direction, EventRecord};
pub use quad::{estimate_bounds, sojourn_time, Bounds};

/// Threshold on the state's max-norm beyond which a run is declared unbounded.
pub const BLOWUP_NORM: f64 = 1e12;
/// Smallest step the controller may take before giving up.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("trajectory is unbounded: state norm {norm:e} exceeds {BLOWUP_NORM:e} at t = {time}")]
    Unbounded { time: f64, norm: f64 },
    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },
    #[error("initial state has dimension {got}, network has {expected} species")]
    Dimension { expected: usize, got: usize },
    #[error("invalid initial state: {0}")]
    InvalidInitial(String),
    #[error("t_end must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("interval [{t0}, {t1}] is outside the solution range [0, {t_end}]")]
    OutOfRange { t0: f64, t1: f64, t_end: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_time_tol: f64,
    pub negativity_clamp: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.5, event_time_tol: 1e-12, negativity_clamp: 1e-12 }
    }
}

impl IntegratorConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }
}

/// The ODE being integrated: a polynomial field plus prescribed species.
#[derive(Clone, Debug)]
pub struct MassActionSystem {
    field: PolynomialField,
    driven: Vec<(usize, Waveform)>,
}

impl MassActionSystem {
    pub fn autonomous(field: PolynomialField) -> Self {
        Self { field, driven: Vec::new() }
    }

    pub fn from_network(net: &ReactionNetwork) -> Self {
        Self {
            field: derive_field(net),
            driven: net.driven().iter().map(|d| (d.species, d.waveform.clone())).collect(),
        }
    }

    pub fn field(&self) -> &PolynomialField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn driven(&self) -> &[(usize, Waveform)] {
        &self.driven
    }

    pub fn is_driven(&self, i: usize) -> bool {
        self.driven.iter().any(|(j, _)| *j == i)
    }

    /// Overwrites the prescribed components of `x` with their values at `t`.
    pub fn apply_drive(&self, t: f64, x: &mut [f64]) {
        for (i, w) in &self.driven {
            x[*i] = w.value(t);
        }
    }

    /// `dx/dt` at time `t`. Driven components report the waveform slope.
    pub fn rhs(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.field.eval_into(x, out);
        for (i, w) in &self.driven {
            out[*i] = w.slope(t);
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut bps: Vec<f64> = self.driven.iter().flat_map(|(_, w)| w.breakpoint_times()).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps
    }
}

/// One accepted step and its dense-output coefficients.
#[derive(Clone, Debug)]
pub(crate) struct Step {
    pub t0: f64,
    pub h: f64,
    // y(t0 + θh) = r0 + θ(r1 + (1-θ)(r2 + θ(r3 + (1-θ) r4)))
    pub rcont: [Vec<f64>; 5],
}

/// Output of [`integrate`]: accepted grid, derivatives and dense output.
#[derive(Clone, Debug)]
pub struct Solution {
    system: MassActionSystem,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    steps: Vec<Step>,
    t_end: f64,
}

impl Solution {
    pub fn system(&self) -> &MassActionSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Accepted grid points as `(time, state, derivative)`.
    pub fn accepted(&self) -> impl Iterator<Item = (f64, &[f64], &[f64])> {
        self.times
            .iter()
            .zip(&self.states)
            .zip(&self.derivs)
            .map(|((t, x), d)| (*t, x.as_slice(), d.as_slice()))
    }

    pub fn initial(&self) -> State {
        State::new(0.0, self.states[0].clone())
    }

    pub fn final_state(&self) -> State {
        State::new(self.t_end, self.states[self.states.len() - 1].clone())
    }

    pub(crate) fn steps(&self) -> &[Step] {
        &self.steps
    }

    fn step_index(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.steps.len().saturating_sub(1))
    }

    pub(crate) fn interpolate_in_step(&self, k: usize, t: f64, out: &mut [f64]) {
        let s = &self.steps[k];
        let theta = ((t - s.t0) / s.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let [r0, r1, r2, r3, r4] = &s.rcont;
        for i in 0..out.len() {
            let v = r0[i] + theta * (r1[i] + theta1 * (r2[i] + theta * (r3[i] + theta1 * r4[i])));
            out[i] = v.max(0.0);
        }
        self.system.apply_drive(t, out);
    }

    /// Dense-output state at time `t` (clamped into `[0, t_end]`).
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.t_end);
        let mut out = vec![0.0; self.dim()];
        if self.steps.is_empty() {
            out.copy_from_slice(&self.states[0]);
            return out;
        }
        self.interpolate_in_step(self.step_index(t), t, &mut out);
        out
    }

    pub fn value_at(&self, species: usize, t: f64) -> f64 {
        self.state_at(t)[species]
    }

    /// `x'(t)` from the vector field at the interpolated state.
    pub fn derivative_at(&self, t: f64) -> Vec<f64> {
        let x = self.state_at(t);
        let mut d = vec![0.0; x.len()];
        self.system.rhs(t.clamp(0.0, self.t_end), &x, &mut d);
        d
    }

    /// Writes `t,<species...>` rows every `stride` seconds (plus the final time).
    pub fn write_csv<W: Write>(&self, mut w: W, names: &[String], stride: f64) -> std::io::Result<()> {
        writeln!(w, "t,{}", names.join(","))?;
        let n = if stride > 0.0 { (self.t_end / stride).floor() as usize } else { 0 };
        let mut ts: Vec<f64> = (0..=n).map(|i| i as f64 * stride).collect();
        if ts.last().is_none_or(|&t| (self.t_end - t).abs() > 1e-12 * self.t_end.max(1.0)) {
            ts.push(self.t_end);
        }
        for t in ts {
            let x = self.state_at(t);
            let cols: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{},{}", format_time(t), cols.join(","))?;
        }
        Ok(())
    }
}

fn format_time(t: f64) -> String {
    format!("{t:.17e}")
}

// Dormand-Prince 5(4) tableau with Hairer's dense-output weights.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller (Hairer's DOPRI5 defaults)
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn check_initial(system: &MassActionSystem, x0: &State) -> Result<(), IntegrateError> {
    if x0.dim() != system.dim() {
        return Err(IntegrateError::Dimension { expected: system.dim(), got: x0.dim() });
    }
    if let Some(v) = x0.concentrations.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(IntegrateError::InvalidInitial(format!("concentration {v} is not a finite nonnegative number")));
    }
    Ok(())
}

/// Integrates `system` from `x0` (taken at t = 0) to `t_end`.
///
/// Steps never straddle a waveform breakpoint, so the piecewise-linear drive
/// stays smooth inside every step. A component falling below
/// `-negativity_clamp` rejects the step; smaller negative values are set to 0.
pub fn integrate(
    system: &MassActionSystem,
    x0: &State,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Solution, IntegrateError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(IntegrateError::BadHorizon(t_end));
    }
    check_initial(system, x0)?;
    let n = system.dim();
    let active: Vec<usize> = (0..n).filter(|&i| !system.is_driven(i)).collect();
    let breakpoints = system.breakpoints();

    let mut t = 0.0;
    let mut y = x0.concentrations.clone();
    system.apply_drive(0.0, &mut y);
    let mut k1 = vec![0.0; n];
    system.rhs(0.0, &y, &mut k1);

    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut derivs = vec![k1.clone()];
    let mut steps = Vec::new();

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];

    let mut h = initial_step(system, &y, &k1, cfg, t_end);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut bp_idx = 0;

    while t < t_end {
        while bp_idx < breakpoints.len() && breakpoints[bp_idx] <= t + MIN_STEP * 10.0 {
            bp_idx += 1;
        }
        let stop = breakpoints.get(bp_idx).copied().unwrap_or(f64::INFINITY).min(t_end);
        h = h.min(cfg.max_step);
        let mut lands_on_stop = false;
        if t + h >= stop - MIN_STEP * 10.0 {
            h = stop - t;
            lands_on_stop = true;
        }
        if h < MIN_STEP {
            return Err(IntegrateError::StepUnderflow { time: t, step: h });
        }

        let stage = |ys: &mut Vec<f64>, coeffs: &[(f64, &Vec<f64>)], tc: f64| {
            for i in 0..n {
                let mut acc = y[i];
                for (a, k) in coeffs {
                    acc += h * a * k[i];
                }
                ys[i] = acc;
            }
            system.apply_drive(tc, ys);
        };
        stage(&mut ys, &[(A21, &k1)], t + C2 * h);
        system.rhs(t + C2 * h, &ys, &mut k2);
        stage(&mut ys, &[(A31, &k1), (A32, &k2)], t + C3 * h);
        system.rhs(t + C3 * h, &ys, &mut k3);
        stage(&mut ys, &[(A41, &k1), (A42, &k2), (A43, &k3)], t + C4 * h);
        system.rhs(t + C4 * h, &ys, &mut k4);
        stage(&mut ys, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], t + C5 * h);
        system.rhs(t + C5 * h, &ys, &mut k5);
        stage(&mut ys, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], t + h);
        system.rhs(t + h, &ys, &mut k6);
        let t_new = if lands_on_stop { stop } else { t + h };
        stage(&mut y1, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], t_new);
        system.rhs(t_new, &y1, &mut k7);

        let mut err_sq = 0.0;
        for &i in &active {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sc).powi(2);
        }
        let err = if active.is_empty() { 0.0 } else { (err_sq / active.len() as f64).sqrt() };
        let negative = active.iter().any(|&i| y1[i] < -cfg.negativity_clamp);
        if !err.is_finite() {
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        if err <= 1.0 && !negative {
            fac_old = err.max(1e-4);
            let mut clamped = false;
            for &i in &active {
                if y1[i] < 0.0 {
                    y1[i] = 0.0;
                    clamped = true;
                }
            }
            let norm = y1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !norm.is_finite() || norm > BLOWUP_NORM {
                return Err(IntegrateError::Unbounded { time: t_new, norm });
            }
            if clamped {
                system.rhs(t_new, &y1, &mut k7);
            }
            let mut dense = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
            for i in 0..n {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                dense[0][i] = y[i];
                dense[1][i] = dy;
                dense[2][i] = bspl;
                dense[3][i] = dy - h * k7[i] - bspl;
                dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(Step { t0: t, h: t_new - t, rcont: dense });
            t = t_new;
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            times.push(t);
            states.push(y.clone());
            derivs.push(k1.clone());
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            last_rejected = true;
            h = if negative { h * 0.5 } else { h / (fac11 / SAFETY).min(1.0 / FAC_MIN) };
        }
    }

    Ok(Solution { system: system.clone(), times, states, derivs, steps, t_end })
}

fn initial_step(system: &MassActionSystem, y: &[f64], f0: &[f64], cfg: &IntegratorConfig, t_end: f64) -> f64 {
    let n = y.len();
    let sc = |i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
    let d0 = (0..n).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
    let d1 = (0..n).map(|i| (f0[i] / sc(i)).powi(2)).sum::<f64>().sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = (y[i] + h0 * f0[i]).max(0.0);
    }
    system.apply_drive(h0, &mut y1);
    let mut f1 = vec![0.0; n];
    system.rhs(h0, &y1, &mut f1);
    let d2 = (0..n).map(|i| ((f1[i] - f0[i]) / sc(i)).powi(2)).sum::<f64>().sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(t_end).min(cfg.max_step)
}
