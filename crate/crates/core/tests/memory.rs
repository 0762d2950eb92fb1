mod common;

use approx::assert_abs_diff_eq;
use common::*;
use crnmem::crn::parse_network;
use crnmem::memory::{
    check_rate_bound, entry_times, extract_events, extract_trajectory, state_time, visits, MemoryError, MemoryId,
    MemoryMaps, StateTime, TransitionKind,
};
use proptest::prelude::*;

// arctanh(0.5 / sqrt 2) / sqrt 2
const CROSS_1_2: f64 = 0.2612752286902399;
// arctanh(0.75 / sqrt 2) / sqrt 2
const CROSS_3_4: f64 = 0.4176203041011986;

#[test]
fn sqrt2_events() {
    let (net, sol) = solve(SQRT2, &[0.0], 20.0);
    let ev = extract_events(&sol, &single(&net, "X", sqrt2_map())).unwrap();
    let got: Vec<_> = ev.iter().map(|e| (e.kind, e.state, e.synthetic)).collect();
    assert_eq!(
        got,
        vec![(TransitionKind::Enter, 0, true), (TransitionKind::Leave, 0, false), (TransitionKind::Enter, 1, false)]
    );
    assert_abs_diff_eq!(ev[1].time, CROSS_1_2, epsilon = 1e-9);
    assert_abs_diff_eq!(ev[2].time, CROSS_3_4, epsilon = 1e-9);
}

#[test]
fn residual_start_only_enters() {
    let (net, sol) = solve(SQRT2, &[0.6], 20.0);
    let ev = extract_events(&sol, &single(&net, "X", sqrt2_map())).unwrap();
    assert_eq!(ev.len(), 1);
    assert_eq!((ev[0].kind, ev[0].state), (TransitionKind::Enter, 1));
}

#[test]
fn constant_species_has_no_real_events() {
    let (net, sol) = solve("X -> 2X : 1\n2X -> X : 1", &[1.0], 10.0);
    let ev = extract_events(&sol, &single(&net, "X", sqrt2_map())).unwrap();
    assert_eq!(ev.len(), 1);
    assert!(ev[0].synthetic);
    let traj = extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 1.0).unwrap();
    assert_eq!(traj.len(), 1);
}

#[test]
fn sqrt2_state_times() {
    let (net, sol) = solve(SQRT2, &[0.0], 20.0);
    let ev = extract_events(&sol, &single(&net, "X", sqrt2_map())).unwrap();
    let vs = visits(&ev, 0);
    assert_eq!(vs.len(), 2);
    match state_time(&vs[0], 20.0) {
        StateTime::Finite(t) => assert_abs_diff_eq!(t, CROSS_1_2, epsilon = 1e-9),
        other => panic!("{other:?}"),
    }
    match state_time(&vs[1], 20.0) {
        StateTime::Unbounded { lower_bound } => assert_abs_diff_eq!(lower_bound, 20.0 - CROSS_3_4, epsilon = 1e-9),
        other => panic!("{other:?}"),
    }
    let et = entry_times(&vs, 1.0, 20.0);
    assert_eq!(et.times.len(), 2);
    assert_abs_diff_eq!(et.times[1], CROSS_3_4, epsilon = 1e-9);
    let et = entry_times(&vs, 30.0, 20.0);
    assert_eq!(et.times, vec![0.0]);
    assert!(et.truncated);
}

#[test]
fn sqrt2_trajectory() {
    let (net, sol) = solve(SQRT2, &[0.0], 20.0);
    let traj = extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 1.0).unwrap();
    assert_eq!(traj.states(), vec![vec![0], vec![1]]);
    assert_eq!(traj.entries[0].time, 0.0);
    assert_abs_diff_eq!(traj.entries[1].time, CROSS_3_4, epsilon = 1e-9);
    assert!(!traj.partial);
    let v = check_rate_bound(&traj, 1, 1.0);
    assert!(v.pass);
    assert_eq!(v.max_entries, 2);

    let long = extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 30.0).unwrap();
    assert_eq!(long.len(), 1);
    assert!(long.partial && !long.warnings.is_empty());
}

#[test]
fn trajectory_errors() {
    let (net, sol) = solve(SQRT2, &[0.6], 5.0);
    let err = extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 1.0).unwrap_err();
    assert!(matches!(err, MemoryError::InitialResidual { .. }));
    let (net, sol) = solve(SQRT2, &[0.0], 5.0);
    let small = map(r(1, 1), &[(0, r(0, 1), r(1, 2)), (1, r(3, 4), r(1, 1))]);
    let err = extract_trajectory(&sol, &single(&net, "X", small), 1.0).unwrap_err();
    assert!(matches!(err, MemoryError::ExceedsCap { .. }));
    assert!(matches!(
        extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 0.0),
        Err(MemoryError::BadDelay(_))
    ));
}

#[test]
fn short_visits_do_not_commit() {
    // bistable from 0.2: drifts down through state 0's edge quickly; d longer than any transient
    let (net, sol) = solve(BISTABLE, &[0.7], 30.0);
    let traj = extract_trajectory(&sol, &single(&net, "X", bistable_map()), 1.0).unwrap();
    let states = traj.states();
    assert_eq!(states[0], vec![1]);
    assert_eq!(states.last().unwrap(), &vec![2]);
    for w in states.windows(2) {
        assert_ne!(w[0], w[1]);
    }
}

#[test]
fn map_json_round_trip() {
    let net = parse_network(SQRT2).unwrap();
    let text = r#"{"species":{"X":{"c":"2","states":[{"id":0,"lo":"0","hi":"1/2","lo_closed":true},{"id":1,"lo":"3/4","hi":"15/8","lo_closed":false}]}}}"#;
    let maps = MemoryMaps::from_json(text, &net).unwrap();
    assert_eq!(maps.map_for(0).unwrap(), &sqrt2_map());
    let back = MemoryMaps::from_json(&maps.to_json_value().to_string(), &net).unwrap();
    assert_eq!(back, maps);
    let bad = text.replace("\"X\"", "\"Q\"");
    assert!(matches!(MemoryMaps::from_json(&bad, &net), Err(MemoryError::UnknownSpecies(_))));
    let bad = text.replace("\"1/2\"", "\"one half\"");
    assert!(MemoryMaps::from_json(&bad, &net).is_err());
}

#[test]
fn csv_and_json_exports() {
    let (net, sol) = solve(SQRT2, &[0.0], 20.0);
    let traj = extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 1.0).unwrap();
    let csv = traj.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,time,X");
    assert!(lines[1].starts_with("0,0.") && lines[1].ends_with(",0"));
    assert!(lines[2].starts_with("1,4.17620") && lines[2].ends_with(",1"));
    let j = traj.to_json_value();
    assert_eq!(j["entries"][1]["state"]["X"], 1);
    assert_eq!(j["visits"]["X"][1]["state_time"]["inf"], true);
}

/// Exact sign of `r - p/q` via a single-rounding product.
fn cmp_rational(r: f64, p: i64, q: i64) -> f64 {
    r.mul_add(q as f64, -(p as f64))
}

fn in_interval(x: f64, iv: &crnmem::memory::MemoryInterval) -> bool {
    let lo = cmp_rational(x, *iv.lo.numer(), *iv.lo.denom());
    let hi = cmp_rational(x, *iv.hi.numer(), *iv.hi.denom());
    (if iv.lo_closed { lo >= 0.0 } else { lo > 0.0 }) && hi < 0.0
}

fn arb_map() -> impl Strategy<Value = crnmem::memory::MemoryMap> {
    (2i64..64, prop::collection::vec(1i64..1000, 2..9)).prop_map(|(q, mut cuts)| {
        cuts.sort();
        cuts.dedup();
        let c = r(1000, q);
        let mut states = vec![(0, r(0, 1), r(cuts[0], q))];
        // pair up the remaining cut points into open intervals
        for (k, w) in cuts[1..].chunks(2).enumerate() {
            let hi = if w.len() == 2 { w[1] } else { w[0] };
            states.push((k as u32 + 1, r(w[0], q), r(hi, q)));
        }
        map(c, &states)
    })
}

proptest! {
    #[test]
    fn lookup_partitions(m in arb_map(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c = crnmem::memory::to_f64(m.c());
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(0.0..=c);
            let id = m.inverse_lookup(x).unwrap();
            let holders: Vec<u32> = m.states().iter().filter(|s| in_interval(x, s)).map(|s| s.id).collect();
            match id {
                MemoryId::State(k) => prop_assert_eq!(holders, vec![k]),
                MemoryId::Residual => prop_assert!(holders.len() <= 1),
            }
        }
    }

    #[test]
    fn events_alternate(x0 in 0.0f64..1.45) {
        let (net, sol) = solve(BISTABLE, &[x0], 20.0);
        let maps = single(&net, "X", bistable_map());
        let ev = extract_events(&sol, &maps).unwrap();
        let mut inside: Option<u32> = None;
        for e in &ev {
            match e.kind {
                TransitionKind::Enter => { prop_assert!(inside.is_none()); inside = Some(e.state); }
                TransitionKind::Leave => { prop_assert_eq!(inside, Some(e.state)); inside = None; }
            }
        }
        for w in ev.windows(2) {
            prop_assert!(w[0].time <= w[1].time);
        }
    }
}
