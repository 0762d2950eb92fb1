//! Compiles the parity automaton on 1111 and watches the memory pattern toggle.

use crnmem::crn::State;
use crnmem::integrator::{integrate, IntegratorConfig, MassActionSystem};
use crnmem::memory::extract_trajectory_with;
use crnmem::nfa::{compile, Automaton};

const PARITY: &str = r#"{"states": ["even", "odd"], "start": ["even"], "accept": ["even"],
    "transitions": [["even", "1", "odd"], ["odd", "1", "even"], ["even", "0", "even"], ["odd", "0", "odd"]]}"#;

fn main() {
    let aut = Automaton::from_json(PARITY).unwrap();
    let out = compile(&aut, "1111", 10.0, 5).unwrap();
    println!("{} species, {} reactions", out.network.num_species(), out.network.reactions().len());
    println!("lead-in {:.4}, horizon {:.4}", out.schedule.lead_in, out.horizon());
    println!("accepts: {}", aut.accepts("1111"));

    let sys = MassActionSystem::from_network(&out.network);
    let sol = integrate(&sys, &State::new(0.0, out.x0.clone()), out.horizon(), &IntegratorConfig::default()).unwrap();
    let traj = extract_trajectory_with(&sol, &out.maps, out.delay, out.trajectory_options).unwrap();
    for e in &traj.entries {
        println!("t = {:>8.4}  (X_even, X_odd) = {:?}", e.time, e.state);
    }
    assert_eq!(traj.states(), out.expected_pattern());

    let dir = std::env::temp_dir().join("crnmem-parity");
    out.write_bundle(&dir).unwrap();
    println!("bundle written to {}", dir.display());
}
