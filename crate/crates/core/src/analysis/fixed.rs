use nalgebra::{DMatrix, DVector};

use crate::crn::{derive_jacobian, Jacobian, PolynomialField, State};
use crate::integrator::{integrate, IntegratorConfig, MassActionSystem};
use crate::sampling::Halton;

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const STABILITY_MARGIN: f64 = 1e-6;
const DEDUP_DIST: f64 = 1e-7;
const ISOLATION_DIST: f64 = 1e-9;
const NEWTON_MAX_ITER: usize = 200;
const NEWTON_STEP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    ExpStable,
    Unstable,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Isolation {
    IsolatedCertified,
    NotCertified,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FixedPointReport {
    pub point: Vec<f64>,
    pub residual: f64,
    pub jacobian_spectral_abscissa: f64,
    pub classification: Stability,
    pub isolation: Isolation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    pub seeds: usize,
    /// Radius of the box probed by the isolation certificate.
    pub isolation_delta: f64,
    pub isolation_probes: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { seeds: 64, isolation_delta: 0.05, isolation_probes: 64 }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton's method with the analytic Jacobian; `None` when it does not converge.
pub fn newton(field: &PolynomialField, jac: &Jacobian, seed: &[f64]) -> Option<Vec<f64>> {
    let n = field.dim();
    let mut x = seed.to_vec();
    let mut f = vec![0.0; n];
    for _ in 0..NEWTON_MAX_ITER {
        field.eval_into(&x, &mut f);
        if inf_norm(&f) == 0.0 {
            return Some(x);
        }
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let Some(dx) = jac.eval(&x).lu().solve(&rhs) else { break };
        if !dx.iter().all(|v| v.is_finite()) {
            break;
        }
        for (xi, di) in x.iter_mut().zip(dx.iter()) {
            *xi += di;
        }
        if inf_norm(&x) > 1e8 {
            return None;
        }
        if dx.amax() <= NEWTON_STEP_TOL * inf_norm(&x).max(1.0) {
            break;
        }
    }
    field.eval_into(&x, &mut f);
    (inf_norm(&f) < FIXED_POINT_TOL).then_some(x)
}

/// Largest real part among the eigenvalues of `m`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn classify(abscissa: f64) -> Stability {
    if abscissa < -STABILITY_MARGIN {
        Stability::ExpStable
    } else if abscissa > STABILITY_MARGIN {
        Stability::Unstable
    } else {
        Stability::Inconclusive
    }
}

/// Newton from a Halton grid over `region`, clipped to the nonnegative orthant.
pub fn find_fixed_points(
    field: &PolynomialField,
    region: &[(f64, f64)],
    opts: &FixedPointOptions,
) -> Vec<FixedPointReport> {
    let jac = derive_jacobian(field);
    let region: Vec<(f64, f64)> = region.iter().map(|&(lo, hi)| (lo.max(0.0), hi.max(0.0))).collect();
    let inside = |x: &[f64]| x.iter().zip(&region).all(|(v, (lo, hi))| *v >= lo - 1e-9 && *v <= hi + 1e-9);
    let mut halton = Halton::new(field.dim());
    let mut found: Vec<Vec<f64>> = Vec::new();
    for _ in 0..opts.seeds {
        let seed = halton.next_in(&region);
        let Some(mut z) = newton(field, &jac, &seed) else { continue };
        if !inside(&z) {
            continue;
        }
        for v in z.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if found.iter().all(|p| inf_norm(&p.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>()) > DEDUP_DIST) {
            found.push(z);
        }
    }
    found.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    found
        .into_iter()
        .map(|z| {
            let residual = inf_norm(&field.eval(&z).expect("dimension"));
            let abscissa = spectral_abscissa(&jac.eval(&z));
            FixedPointReport {
                isolation: certify_isolation(field, &z, opts.isolation_delta, opts.isolation_probes),
                point: z,
                residual,
                jacobian_spectral_abscissa: abscissa,
                classification: classify(abscissa),
            }
        })
        .collect()
}

/// Newton probes from the `delta`-box around `point`: certified iff every probe
/// that converges inside the box lands on `point`.
pub fn certify_isolation(field: &PolynomialField, point: &[f64], delta: f64, probes: usize) -> Isolation {
    let jac = derive_jacobian(field);
    let bounds: Vec<(f64, f64)> = point.iter().map(|&z| ((z - delta).max(0.0), z + delta)).collect();
    let mut halton = Halton::new(field.dim());
    let mut landed = 0;
    for _ in 0..probes {
        let seed = halton.next_in(&bounds);
        let Some(z) = newton(field, &jac, &seed) else { continue };
        let dist = inf_norm(&z.iter().zip(point).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dist <= ISOLATION_DIST {
            landed += 1;
        } else if dist <= delta {
            return Isolation::NotCertified;
        }
    }
    if landed > 0 {
        Isolation::IsolatedCertified
    } else {
        Isolation::NotCertified
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DecayFit {
    /// Mean fitted exponent `λ` in `‖x(t) − z‖ ≈ C e^{λt}`.
    pub exponent: f64,
    pub per_run: Vec<f64>,
}

/// Simulates from `count` perturbations of size `radius` around `point` and
/// fits the late-time slope of `log ‖x(t) − z‖` over `[0, horizon]`.
pub fn fit_decay(field: &PolynomialField, point: &[f64], radius: f64, count: usize, horizon: f64) -> DecayFit {
    let n = field.dim();
    let sys = MassActionSystem::autonomous(field.clone());
    let cfg = IntegratorConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-15);
    let mut halton = Halton::new(n);
    let mut per_run = Vec::new();
    for _ in 0..count {
        let (u, norm) = loop {
            let u = halton.next_in(&vec![(-1.0, 1.0); n]);
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-3 {
                break (u, norm);
            }
        };
        let x0: Vec<f64> = point
            .iter()
            .zip(&u)
            .map(|(z, v)| {
                let step = radius * v / norm;
                if z + step < 0.0 { z - step } else { z + step }
            })
            .collect();
        let Ok(sol) = integrate(&sys, &State::new(0.0, x0), horizon, &cfg) else { continue };
        let samples: Vec<(f64, f64)> = (0..=400)
            .map(|j| {
                let t = horizon * j as f64 / 400.0;
                let x = sol.state_at(t);
                let d = x.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (t, d)
            })
            .filter(|&(_, d)| d > 1e-9 && d < radius)
            .collect();
        if samples.len() < 8 {
            continue;
        }
        let tail = &samples[samples.len() / 2..];
        let m = tail.len() as f64;
        let (st, sy) = tail.iter().fold((0.0, 0.0), |(a, b), &(t, d)| (a + t, b + d.ln()));
        let (mt, my) = (st / m, sy / m);
        let (num, den) = tail
            .iter()
            .fold((0.0, 0.0), |(a, b), &(t, d)| (a + (t - mt) * (d.ln() - my), b + (t - mt) * (t - mt)));
        per_run.push(num / den);
    }
    let exponent = if per_run.is_empty() { f64::NAN } else { per_run.iter().sum::<f64>() / per_run.len() as f64 };
    DecayFit { exponent, per_run }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{derive_field, parse_network, Polynomial};

    fn field(text: &str) -> PolynomialField {
        derive_field(&parse_network(text).unwrap())
    }

    #[test]
    fn sqrt2_fixed_point() {
        let pts = find_fixed_points(&field("0 -> X : 2\n2X -> X : 1"), &[(0.0, 3.0)], &FixedPointOptions::default());
        assert_eq!(pts.len(), 1);
        assert!((pts[0].point[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((pts[0].jacobian_spectral_abscissa + 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(pts[0].classification, Stability::ExpStable);
        assert_eq!(pts[0].isolation, Isolation::IsolatedCertified);
    }

    #[test]
    fn logistic_fixed_points() {
        let pts = find_fixed_points(&field("X -> 2X : 1\n2X -> X : 1"), &[(-0.5, 2.0)], &FixedPointOptions::default());
        let got: Vec<_> = pts.iter().map(|p| (p.point[0].round(), p.classification)).collect();
        assert_eq!(got, vec![(0.0, Stability::Unstable), (1.0, Stability::ExpStable)]);
        assert!((pts[0].jacobian_spectral_abscissa - 1.0).abs() < 1e-9);
        assert!((pts[1].jacobian_spectral_abscissa + 1.0).abs() < 1e-9);
    }

    #[test]
    fn do_nothing_field() {
        let f = PolynomialField::new(vec![Polynomial::zero(1)]);
        let opts = FixedPointOptions { seeds: 10, ..Default::default() };
        let pts = find_fixed_points(&f, &[(0.0, 1.0)], &opts);
        assert_eq!(pts.len(), 10);
        assert!(pts.iter().all(|p| p.classification == Stability::Inconclusive && p.jacobian_spectral_abscissa == 0.0));
        assert!(pts.iter().all(|p| p.isolation == Isolation::NotCertified));
    }

    #[test]
    fn double_root_isolated_not_stable() {
        let f = PolynomialField::new(vec![Polynomial::from_terms(1, [(vec![2], 1)])]);
        assert_eq!(certify_isolation(&f, &[0.0], 0.05, 64), Isolation::IsolatedCertified);
        assert_eq!(classify(spectral_abscissa(&derive_jacobian(&f).eval(&[0.0]))), Stability::Inconclusive);
    }

    #[test]
    fn decay_matches_abscissa() {
        let f = field("0 -> X : 2\n2X -> X : 1");
        let fit = fit_decay(&f, &[2f64.sqrt()], 0.01, 10, 6.0);
        assert_eq!(fit.per_run.len(), 10);
        assert!((fit.exponent + 2.0 * 2f64.sqrt()).abs() < 0.25 * 2.0 * 2f64.sqrt(), "{fit:?}");
    }
}
