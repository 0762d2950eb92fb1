//! Builds a Turing machine from the parity table and checks it keeps pace with the network.

use crnmem::determinism::{extract_delta, run_trajectory, DeltaConfig};
use crnmem::nfa::{compile, Automaton};
use crnmem::tm::{generate_tm_from_table, run_tm, steps_for_checkpoints, verify_realtime_follow};

const PARITY: &str = r#"{"states": ["even", "odd"], "start": ["even"], "accept": ["even"],
    "transitions": [["even", "1", "odd"], ["odd", "1", "even"], ["even", "0", "even"], ["odd", "0", "odd"]]}"#;

fn main() {
    let out = compile(&Automaton::from_json(PARITY).unwrap(), "1111", 10.0, 5).unwrap();
    let cfg = DeltaConfig {
        trajectory: out.trajectory_options,
        x0_template: Some(out.x0.clone()),
        complements: out.complements(),
        ..DeltaConfig::new(out.delay, 4, out.horizon())
    };
    let delta = extract_delta(&out.network, &out.maps, &[vec![1, 0], vec![0, 1]], &cfg).unwrap();
    let table = delta.table().expect("parity is deterministic");
    let tm = generate_tm_from_table(table).unwrap();
    println!("{} tapes, {} control states, word width {}", tm.tapes.len(), tm.states.len(), tm.width);

    let traj = run_trajectory(&out.network, &out.maps, &out.x0, &cfg).unwrap();
    let trace = run_tm(&tm, &traj.entries[0].state, steps_for_checkpoints(&tm, traj.len() - 1)).unwrap();
    for (cp, e) in trace.checkpoints.iter().zip(&traj.entries) {
        println!("step {:>2}  tapes {:?}  network t = {:.4}", cp.step, cp.tapes, e.time);
    }
    let v = verify_realtime_follow(&trace, &traj).unwrap();
    println!("follows: {}, c = {:.6}, ratios {:?}", v.pass, v.c, v.ratios);
}
