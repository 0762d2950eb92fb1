use super::{IntegrateError, Solution};

const BOUND_SAMPLES_PER_STEP: usize = 64;
const BOUND_INFLATION: f64 = 1.0 + 1e-6;

/// Empirical bounds over the simulated horizon.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Bounds {
    /// Bound on every concentration.
    pub beta: f64,
    /// Bound on every `|f_i|`, i.e. on the speed of every non-driven species.
    pub beta0: f64,
    pub species_max: Vec<f64>,
    pub species_max_rate: Vec<f64>,
}

pub fn estimate_bounds(sol: &Solution) -> Bounds {
    let n = sol.dim();
    let mut species_max = vec![0.0f64; n];
    let mut species_max_rate = vec![0.0f64; n];
    let mut x = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut visit = |x: &[f64], f: &mut [f64]| {
        sol.system().field().eval_into(x, f);
        for i in 0..n {
            species_max[i] = species_max[i].max(x[i]);
            species_max_rate[i] = species_max_rate[i].max(f[i].abs());
        }
    };
    if sol.steps().is_empty() {
        x.copy_from_slice(&sol.initial().concentrations);
        visit(&x, &mut f);
    }
    for (k, step) in sol.steps().iter().enumerate() {
        for j in 0..=BOUND_SAMPLES_PER_STEP {
            let t = step.t0 + step.h * j as f64 / BOUND_SAMPLES_PER_STEP as f64;
            sol.interpolate_in_step(k, t, &mut x);
            visit(&x, &mut f);
        }
    }
    let beta = species_max.iter().copied().fold(0.0, f64::max) * BOUND_INFLATION;
    let beta0 = species_max_rate.iter().copied().fold(0.0, f64::max) * BOUND_INFLATION;
    for v in species_max.iter_mut().chain(species_max_rate.iter_mut()) {
        *v *= BOUND_INFLATION;
    }
    Bounds { beta, beta0, species_max, species_max_rate }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Arc length of species `species` over `[t0, t1]`: the integral of `sqrt(1 + x'(t)^2)`.
///
/// Integrates piecewise over accepted steps so the integrand is smooth on
/// every piece; each piece is refined to relative accuracy 1e-8.
pub fn sojourn_time(sol: &Solution, species: usize, t0: f64, t1: f64) -> Result<f64, IntegrateError> {
    if !(0.0 <= t0 && t0 <= t1 && t1 <= sol.t_end()) {
        return Err(IntegrateError::OutOfRange { t0, t1, t_end: sol.t_end() });
    }
    if t0 == t1 {
        return Ok(0.0);
    }
    let speed = |t: f64| {
        let d = sol.derivative_at(t)[species];
        (1.0 + d * d).sqrt()
    };
    let mut cuts: Vec<f64> = vec![t0];
    cuts.extend(sol.times().iter().copied().filter(|&t| t > t0 && t < t1));
    cuts.push(t1);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (fa, fm, fb) = (speed(a), speed(0.5 * (a + b)), speed(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(&speed, a, b, fa, fm, fb, whole, 1e-9 * whole, 40);
    }
    Ok(total)
}
