//! Threshold crossings, concentration bounds and arc length along a run.

use crnmem::crn::{parse_network, State};
use crnmem::integrator::{detect_events, estimate_bounds, integrate, sojourn_time, IntegratorConfig, MassActionSystem};

fn main() {
    let net = parse_network("0 -> X : 2\n2X -> X : 1").unwrap();
    let sol = integrate(&MassActionSystem::from_network(&net), &State::zeros(1), 10.0, &IntegratorConfig::default())
        .unwrap();

    for e in detect_events(&sol, &[vec![0.5, 0.75, 1.5]], 1e-12) {
        println!("X crosses {} {:?} at t = {:.10}", e.boundary, e.direction, e.time);
    }

    let b = estimate_bounds(&sol);
    println!("beta = {:.8}, beta0 = {:.8}", b.beta, b.beta0);

    // arc length exceeds elapsed time by at most a factor beta0 + 1
    let arc = sojourn_time(&sol, 0, 0.0, 1.0).unwrap();
    println!("arc length over [0, 1] = {arc:.10}, cap = {:.10}", b.beta0 + 1.0);
}
