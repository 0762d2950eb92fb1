//! Memory maps and the trajectory of committed memory states.

use crnmem::crn::{parse_network, State};
use crnmem::integrator::{integrate, IntegratorConfig, MassActionSystem};
use crnmem::memory::{check_rate_bound, extract_trajectory, MemoryMaps};

const MAPS: &str = r#"{"species": {"X": {"c": "2", "states": [
    {"id": 0, "lo": "0", "hi": "1/2", "lo_closed": true},
    {"id": 1, "lo": "3/4", "hi": "15/8", "lo_closed": false}]}}}"#;

fn main() {
    let net = parse_network("0 -> X : 2\n2X -> X : 1").unwrap();
    let maps = MemoryMaps::from_json(MAPS, &net).unwrap();
    let sol = integrate(&MassActionSystem::from_network(&net), &State::zeros(1), 20.0, &IntegratorConfig::default())
        .unwrap();

    for d in [0.05, 1.0, 30.0] {
        let traj = extract_trajectory(&sol, &maps, d).unwrap();
        println!("d = {d}: {:?} at {:?}, partial = {}", traj.states(), traj.times(), traj.partial);
        for w in &traj.warnings {
            println!("  warning: {w}");
        }
        let v = check_rate_bound(&traj, net.num_species(), d);
        println!("  at most {} entries per window (limit {})", v.max_entries, v.limit);
    }

    print!("{}", extract_trajectory(&sol, &maps, 1.0).unwrap().to_csv());
}
