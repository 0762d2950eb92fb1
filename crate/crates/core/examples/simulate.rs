//! Integrates the sqrt(2) network from zero and prints a few samples.

use crnmem::crn::{parse_network, State};
use crnmem::integrator::{integrate, IntegratorConfig, MassActionSystem};

fn main() {
    let net = parse_network("0 -> X : 2\n2X -> X : 1").unwrap();
    let sys = MassActionSystem::from_network(&net);
    let sol = integrate(&sys, &State::zeros(1), 10.0, &IntegratorConfig::default()).unwrap();

    println!("{} accepted steps", sol.num_steps());
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let exact = 2f64.sqrt() * (2f64.sqrt() * t).tanh();
        println!("t = {t:>4}  x = {:.12}  error = {:.1e}", sol.value_at(0, t), (sol.value_at(0, t) - exact).abs());
    }

    let mut csv = Vec::new();
    sol.write_csv(&mut csv, net.species_names(), 2.5).unwrap();
    print!("{}", String::from_utf8(csv).unwrap());
}
