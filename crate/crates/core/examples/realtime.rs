//! Real-time convergence and (eps, d)-computation checks.

use crnmem::analysis::{check_epsd, check_realtime, check_unambiguous, universal_d, Assignment};
use crnmem::crn::{parse_network, State};
use crnmem::integrator::{estimate_bounds, integrate, IntegratorConfig, MassActionSystem};

fn main() {
    let net = parse_network("0 -> X : 2\n2X -> X : 1").unwrap();
    let cfg = IntegratorConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-14);
    let sol = integrate(&MassActionSystem::from_network(&net), &State::zeros(1), 20.0, &cfg).unwrap();

    for alpha in [2f64.sqrt(), 1.5] {
        let v = check_realtime(&sol, 0, alpha, 20.0, 0.1).unwrap();
        println!("alpha = {alpha:.6}: pass = {}, first violation = {:?}", v.pass, v.first_violation_time);
    }

    let beta0 = estimate_bounds(&sol).beta0;
    let d = universal_d(0.1, beta0);
    println!("eps = 0.1, beta0 = {beta0:.4} gives d = {d:.6}");
    for alpha in [0.0, 0.5, 1.0, 1.2, 2f64.sqrt()] {
        let v = check_epsd(&sol, 0, alpha, 0.1, d).unwrap();
        println!("  alpha = {alpha:.4}: pass = {}, witness t0 = {:?}", v.pass, v.witness_t0);
    }

    let a = |alpha| Assignment { species: 0, alpha, eps: 0.1, d };
    let v = check_unambiguous(&sol, &[a(1.0), a(1.15), a(1.4)]).unwrap();
    println!("overlapping assignments: {:?}", v.overlaps);
}
