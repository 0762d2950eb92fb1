mod common;

use std::collections::HashSet;

use common::*;
use crnmem::crn::parse_network;
use crnmem::determinism::{extract_delta, run_trajectory, DeltaConfig};
use crnmem::nfa::{compile, Automaton};
use crnmem::tm::{generate_tm_from_table, itoa, run_tm, steps_for_checkpoints, verify_realtime_follow};

// arctanh(0.75 / sqrt 2) / sqrt 2
const CROSS_3_4: f64 = 0.4176203041011986;

fn parity() -> Automaton {
    Automaton::from_json(
        r#"{"states":["even","odd"],"start":["even"],"accept":["even"],
            "transitions":[["even","1","odd"],["odd","1","even"],["even","0","even"],["odd","0","odd"]]}"#,
    )
    .unwrap()
}

#[test]
fn parity_machine_follows_in_real_time() {
    let out = compile(&parity(), "1111", 10.0, 5).unwrap();
    let cfg = DeltaConfig {
        trajectory: out.trajectory_options,
        x0_template: Some(out.x0.clone()),
        complements: out.complements(),
        ..DeltaConfig::new(out.delay, 4, out.horizon())
    };
    let delta = extract_delta(&out.network, &out.maps, &[vec![1, 0], vec![0, 1]], &cfg).unwrap();
    let table = delta.table().expect("parity is sampled-deterministic");
    assert_eq!(table.get(&[1, 0]), Some(&vec![0, 1]));
    assert_eq!(table.get(&[0, 1]), Some(&vec![1, 0]));

    let tm = generate_tm_from_table(table).unwrap();
    let traj = run_trajectory(&out.network, &out.maps, &out.x0, &cfg).unwrap();
    assert_eq!(traj.len(), 5);
    let trace = run_tm(&tm, &traj.entries[0].state, steps_for_checkpoints(&tm, traj.len() - 1)).unwrap();
    let v = verify_realtime_follow(&trace, &traj).unwrap();
    assert!(v.pass, "{v:?}");
    let min = v.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(v.c / min - 1.0 < 0.01, "{:?}", v.ratios);
    assert!((v.c - 0.2).abs() < 0.002);

    let mut bad = trace.clone();
    bad.checkpoints[3].tapes[1] = if bad.checkpoints[3].tapes[1] == "1" { "0".into() } else { "1".into() };
    let v = verify_realtime_follow(&bad, &traj).unwrap();
    assert!(!v.pass);
    assert_eq!(v.first_mismatch, Some(3));

    let mut short = trace.clone();
    short.checkpoints.truncate(2);
    assert_eq!(verify_realtime_follow(&short, &traj).unwrap().first_mismatch, Some(2));
}

#[test]
fn sqrt2_machine() {
    let net = parse_network(SQRT2).unwrap();
    let maps = single(&net, "X", sqrt2_map());
    let cfg = DeltaConfig::new(1.0, 25, 20.0);
    let delta = extract_delta(&net, &maps, &[vec![0], vec![1]], &cfg).unwrap();
    let tm = generate_tm_from_table(delta.table().unwrap()).unwrap();
    let trace = run_tm(&tm, &[0], 1000).unwrap();
    assert!(trace.halted);
    let traj = run_trajectory(&net, &maps, &[0.0], &cfg).unwrap();
    let v = verify_realtime_follow(&trace, &traj).unwrap();
    assert!(v.pass);
    assert!((v.c - 2.0 / CROSS_3_4).abs() < 1e-6);
}

#[test]
fn itoa_is_injective() {
    let words: HashSet<String> = (0..1u32 << 20).map(itoa).collect();
    assert_eq!(words.len(), 1 << 20);
}

#[test]
fn machine_json_lists_programs() {
    let net = parse_network(SQRT2).unwrap();
    let maps = single(&net, "X", sqrt2_map());
    let delta = extract_delta(&net, &maps, &[vec![0], vec![1]], &DeltaConfig::new(1.0, 4, 20.0)).unwrap();
    let tm = generate_tm_from_table(delta.table().unwrap()).unwrap();
    let j = tm.to_json_value();
    assert_eq!(j["states"][0]["name"], "q0");
    assert_eq!(j["states"][0]["program"]["write"][0], "1");
    assert_eq!(j["states"][1]["program"]["next"], "q1");
    assert_eq!(j["states"][2]["program"], "halt");
}
