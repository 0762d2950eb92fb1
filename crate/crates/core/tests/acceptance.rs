#![allow(clippy::approx_constant)]

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use crnmem::analysis::*;
use crnmem::crn::{derive_field, parse_network, State};
use crnmem::determinism::{extract_delta, run_trajectory, DeltaConfig, DeltaOutcome};
use crnmem::integrator::{estimate_bounds, integrate, sojourn_time, IntegratorConfig, MassActionSystem, Solution};
use crnmem::memory::{
    check_rate_bound, extract_events, extract_trajectory, extract_trajectory_with, visits, MemoryMaps, MemoryTrajectory,
};
use crnmem::nfa::{compile, Automaton};
use crnmem::tm::{generate_tm_from_table, run_tm, steps_for_checkpoints, verify_realtime_follow};

// arctanh(0.75 / sqrt 2) / sqrt 2
const CROSS_3_4: f64 = 0.4176203041011986;

const ODE_TOL: f64 = 1e-8;
const ODE_BUDGET: Duration = Duration::from_secs(1);
const MINPOLY_BUDGET: Duration = Duration::from_secs(10);
const NFA_BUDGET: Duration = Duration::from_secs(30);

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn parity() -> Automaton {
    let text = std::fs::read_to_string(data("parity.nfa.json")).unwrap();
    Automaton::from_json(&text).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn integrator_accuracy() -> Outcome {
    let cases: [(&str, fn(f64) -> f64); 2] = [
        ("0 -> X : 1\nX -> 0 : 1", |t| 1.0 - (-t).exp()),
        (SQRT2, |t| 2f64.sqrt() * (2f64.sqrt() * t).tanh()),
    ];
    let mut notes = Vec::new();
    for (text, exact) in cases {
        let start = Instant::now();
        let net = parse_network(text).unwrap();
        let sol = integrate(&MassActionSystem::from_network(&net), &State::zeros(1), 10.0, &IntegratorConfig::default())
            .map_err(|e| e.to_string())?;
        let err = (0..=10_000)
            .map(|j| j as f64 * 1e-3)
            .map(|t| (sol.value_at(0, t) - exact(t)).abs())
            .fold(0.0, f64::max);
        let took = start.elapsed();
        ensure(err < ODE_TOL, || format!("max error {err:e}"))?;
        ensure(took < ODE_BUDGET, || format!("took {took:?}"))?;
        notes.push(format!("err {err:.1e} in {took:.1?}"));
    }
    Ok(notes.join("; "))
}

fn realtime() -> Outcome {
    let net = parse_network(SQRT2).unwrap();
    let cfg = IntegratorConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-14);
    let sol = integrate(&MassActionSystem::from_network(&net), &State::zeros(1), 20.0, &cfg).map_err(|e| e.to_string())?;
    let good = check_realtime(&sol, 0, 2f64.sqrt(), 20.0, 0.1).map_err(|e| e.to_string())?;
    ensure(good.pass, || format!("sqrt2 violated at {:?}", good.first_violation_time))?;
    let bad = check_realtime(&sol, 0, 1.5, 20.0, 0.1).map_err(|e| e.to_string())?;
    let t = bad.first_violation_time.ok_or("alpha = 1.5 passed")?;
    ensure(!bad.pass && t <= 4.1, || format!("alpha = 1.5 first violation at {t}"))?;
    Ok(format!("alpha = 1.5 first violated at t = {t:.1}"))
}

fn trajectory_extraction() -> Outcome {
    let (net, sol) = solve(SQRT2, &[0.0], 20.0);
    let traj = extract_trajectory(&sol, &single(&net, "X", sqrt2_map()), 1.0).map_err(|e| e.to_string())?;
    ensure(traj.states() == vec![vec![0], vec![1]], || format!("states {:?}", traj.states()))?;
    let t = traj.times();
    ensure(t[0] == 0.0 && (t[1] - CROSS_3_4).abs() < 1e-6, || format!("times {t:?}"))?;
    Ok(format!("entries at 0 and {:.6}", t[1]))
}

struct Run {
    species: usize,
    d: f64,
    maps: MemoryMaps,
    sol: Solution,
    traj: MemoryTrajectory,
}

/// Trajectories from the sqrt2, bistable and parity runs.
fn corpus() -> Vec<Run> {
    let mut out = Vec::new();
    for x0 in [0.0, 0.2, 0.45] {
        let (net, sol) = solve(SQRT2, &[x0], 20.0);
        let maps = single(&net, "X", sqrt2_map());
        let traj = extract_trajectory(&sol, &maps, 1.0).unwrap();
        out.push(Run { species: net.num_species(), d: 1.0, maps, sol, traj });
    }
    for x0 in [0.05, 0.3, 0.6, 0.7, 1.0] {
        for d in [0.1, 1.0] {
            let (net, sol) = solve(BISTABLE, &[x0], 30.0);
            let maps = single(&net, "X", bistable_map());
            let traj = extract_trajectory(&sol, &maps, d).unwrap();
            out.push(Run { species: net.num_species(), d, maps, sol, traj });
        }
    }
    let nfa = compile(&parity(), "1101", 10.0, 5).unwrap();
    let sys = MassActionSystem::from_network(&nfa.network);
    let sol = integrate(&sys, &State::new(0.0, nfa.x0.clone()), nfa.horizon(), &IntegratorConfig::default()).unwrap();
    let traj = extract_trajectory_with(&sol, &nfa.maps, nfa.delay, nfa.trajectory_options).unwrap();
    out.push(Run { species: nfa.network.num_species(), d: nfa.delay, maps: nfa.maps, sol, traj });
    out
}

fn rate_bound() -> Outcome {
    let corpus = corpus();
    for run in &corpus {
        let v = check_rate_bound(&run.traj, run.species, run.d);
        ensure(v.pass, || format!("{} entries in a window of {}", v.max_entries, run.d))?;
    }
    // four entries inside one window of a one-species network
    let fake = MemoryTrajectory::from_entries(
        vec!["X".into()],
        vec![(0.0, vec![0]), (0.1, vec![1]), (0.2, vec![2]), (0.3, vec![1])],
        1.0,
    );
    let v = check_rate_bound(&fake, 1, 1.0);
    ensure(!v.pass && v.max_entries == 4, || format!("violation fixture accepted: {v:?}"))?;
    Ok(format!("{} trajectories within 2|S|; fixture rejected", corpus.len()))
}

fn sojourn() -> Outcome {
    let mut count = 0;
    for Run { maps, sol, .. } in corpus() {
        let beta0 = estimate_bounds(&sol).beta0;
        let ev = extract_events(&sol, &maps).map_err(|e| e.to_string())?;
        for s in maps.species() {
            for v in visits(&ev, s) {
                let Some(leave) = v.leave else { continue };
                let st = leave - v.enter;
                let arc = sojourn_time(&sol, s, v.enter, leave).map_err(|e| e.to_string())?;
                ensure(arc <= (beta0 + 1.0) * st * (1.0 + 1e-9) + 1e-12, || {
                    format!("sojourn {arc} above ({beta0} + 1) * {st}")
                })?;
                count += 1;
            }
        }
    }
    ensure(count > 0, || "no completed visits".into())?;
    Ok(format!("{count} completed visits"))
}

fn stability() -> Outcome {
    let opts = FixedPointOptions { isolation_delta: 0.1, isolation_probes: 100, ..Default::default() };
    let f = derive_field(&parse_network(SQRT2).unwrap());
    let pts = find_fixed_points(&f, &[(0.0, 3.0)], &opts);
    ensure(pts.len() == 1, || format!("{} fixed points for 2 - x^2", pts.len()))?;
    let p = &pts[0];
    ensure((p.point[0] - 2f64.sqrt()).abs() < 1e-9, || format!("point {}", p.point[0]))?;
    ensure(p.classification == Stability::ExpStable, || format!("{:?}", p.classification))?;
    ensure((p.jacobian_spectral_abscissa + 2.0 * 2f64.sqrt()).abs() < 1e-6, || {
        format!("abscissa {}", p.jacobian_spectral_abscissa)
    })?;
    ensure(p.isolation == Isolation::IsolatedCertified, || "sqrt2 not certified isolated".into())?;
    let fit = fit_decay(&f, &p.point, 0.01, 10, 6.0);
    let rel = (fit.exponent - p.jacobian_spectral_abscissa).abs() / p.jacobian_spectral_abscissa.abs();
    ensure(rel < 0.25, || format!("decay fit {} vs {}", fit.exponent, p.jacobian_spectral_abscissa))?;

    let f = derive_field(&parse_network("X -> 2X : 1\n2X -> X : 1").unwrap());
    let got: Vec<_> = find_fixed_points(&f, &[(0.0, 2.0)], &opts)
        .iter()
        .map(|p| (p.point[0].round(), p.classification))
        .collect();
    ensure(got == vec![(0.0, Stability::Unstable), (1.0, Stability::ExpStable)], || format!("logistic {got:?}"))?;

    let f = derive_field(&parse_network(&std::fs::read_to_string(data("constant.crn")).unwrap()).unwrap());
    let pts = find_fixed_points(&f, &[(0.0, 1.0)], &opts);
    ensure(
        !pts.is_empty()
            && pts.iter().all(|p| p.classification == Stability::Inconclusive && p.isolation == Isolation::NotCertified),
        || format!("constant network {pts:?}"),
    )?;
    Ok(format!("decay fit {:.3} vs abscissa {:.3}", fit.exponent, p.jacobian_spectral_abscissa))
}

fn algebraicity() -> Outcome {
    let mut notes = Vec::new();
    for (v, want) in [(1.41421356237, "x^2 - 2"), (1.6180339887, "x^2 - x - 1")] {
        let start = Instant::now();
        let got = minpoly_probe(v, 3, 10).map(|p| p.to_string());
        let took = start.elapsed();
        ensure(got.as_deref() == Some(want), || format!("{v}: got {got:?}"))?;
        ensure(took < MINPOLY_BUDGET, || format!("{v}: took {took:?}"))?;
        notes.push(format!("{want} in {took:.1?}"));
    }
    Ok(notes.join("; "))
}

fn epsilon_d() -> Outcome {
    let (_, sol) = solve(SQRT2, &[0.0], 20.0);
    let d = universal_d(0.1, 2.0);
    ensure(d == 0.025, || format!("d = {d}"))?;
    for alpha in [0.0, 0.5, 1.0, 1.2, 2f64.sqrt()] {
        let v = check_epsd(&sol, 0, alpha, 0.1, d).map_err(|e| e.to_string())?;
        ensure(v.pass, || format!("alpha = {alpha} fails"))?;
    }
    ensure(dense_encode(1) == 0.5 && dense_encode(2) == 0.25 && dense_encode(3) == 0.75, || "dense encoding".into())?;
    let best = (0..1u64 << 16).map(|n| (dense_encode(n) - 1.0 / 3.0).abs()).fold(f64::INFINITY, f64::min);
    ensure(best < 2f64.powi(-16), || format!("closest to 1/3 is {best:e} away"))?;
    Ok(format!("five alphas at d = {d}; min |f(n) - 1/3| = {best:.2e}"))
}

fn nfa_pipeline() -> Outcome {
    let start = Instant::now();
    let out = compile(&parity(), "1111", 10.0, 5).map_err(|e| e.to_string())?;
    let sys = MassActionSystem::from_network(&out.network);
    let sol = integrate(&sys, &State::new(0.0, out.x0.clone()), out.horizon(), &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let traj = extract_trajectory_with(&sol, &out.maps, out.delay, out.trajectory_options).map_err(|e| e.to_string())?;
    let want = vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0]];
    ensure(traj.states() == want, || format!("pattern {:?}", traj.states()))?;
    let names = out.network.species_names();
    let pairs: Vec<(usize, usize)> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with("X_") || n.starts_with("Y_"))
        .map(|(i, n)| (i, out.network.species_index(&n.replacen('_', "b_", 1)).unwrap()))
        .collect();
    let mut worst_gap = 0.0f64;
    let mut peak = 0.0f64;
    let steps = 20_000;
    for j in 0..=steps {
        let x = sol.state_at(out.horizon() * j as f64 / steps as f64);
        for &(a, b) in &pairs {
            worst_gap = worst_gap.max((x[a] + x[b] - 1.0).abs());
        }
        peak = x.iter().copied().fold(peak, f64::max);
    }
    let took = start.elapsed();
    ensure(worst_gap < 0.05, || format!("rail gap {worst_gap}"))?;
    ensure(peak < 1.5, || format!("peak concentration {peak}"))?;
    ensure(took < NFA_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("rail gap {worst_gap:.1e}, peak {peak:.4}, {took:.1?}"))
}

fn determinism() -> Outcome {
    let net = parse_network(SQRT2).unwrap();
    let maps = single(&net, "X", sqrt2_map());
    let out = extract_delta(&net, &maps, &[vec![0], vec![1]], &DeltaConfig::new(1.0, 25, 20.0)).map_err(|e| e.to_string())?;
    ensure(out.table().is_some(), || "sqrt2 reported a conflict".into())?;

    let net = parse_network(BISTABLE).unwrap();
    let maps = single(&net, "X", bistable_map());
    let out = extract_delta(&net, &maps, &[vec![1]], &DeltaConfig::new(1.0, 25, 30.0)).map_err(|e| e.to_string())?;
    let DeltaOutcome::Conflict { conflicts, .. } = &out else { return Err("bistable has no conflict".into()) };
    let c = &conflicts[0];
    let (a, b) = (c.witnesses.0[0], c.witnesses.1[0]);
    ensure((a - 0.5) * (b - 0.5) < 0.0, || format!("witnesses {a} and {b} on one side"))?;
    Ok(format!("bistable witnesses {a:.4} and {b:.4}"))
}

fn realtime_follow() -> Outcome {
    let out = compile(&parity(), "1111", 10.0, 5).unwrap();
    let cfg = DeltaConfig {
        trajectory: out.trajectory_options,
        x0_template: Some(out.x0.clone()),
        complements: out.complements(),
        ..DeltaConfig::new(out.delay, 4, out.horizon())
    };
    let delta = extract_delta(&out.network, &out.maps, &[vec![1, 0], vec![0, 1]], &cfg).map_err(|e| e.to_string())?;
    let table = delta.table().ok_or("parity reported a conflict")?;
    let tm = generate_tm_from_table(table).map_err(|e| e.to_string())?;
    let traj = run_trajectory(&out.network, &out.maps, &out.x0, &cfg).map_err(|e| e.to_string())?;
    let trace = run_tm(&tm, &traj.entries[0].state, steps_for_checkpoints(&tm, traj.len() - 1)).map_err(|e| e.to_string())?;
    let v = verify_realtime_follow(&trace, &traj).map_err(|e| e.to_string())?;
    ensure(v.pass, || format!("first mismatch {:?}", v.first_mismatch))?;
    let min = v.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(v.c / min - 1.0 < 0.01, || format!("ratios {:?}", v.ratios))?;

    let mut bad = trace.clone();
    let tape = &mut bad.checkpoints[2].tapes[0];
    *tape = if tape == "1" { "0".into() } else { "1".into() };
    let v2 = verify_realtime_follow(&bad, &traj).map_err(|e| e.to_string())?;
    ensure(!v2.pass && v2.first_mismatch == Some(2), || format!("corrupted trace gave {:?}", v2.first_mismatch))?;
    Ok(format!("c = {:.5}, spread {:.2e}", v.c, v.c / min - 1.0))
}

fn run_cli(args: &[&str]) -> Result<i32, String> {
    let mut full = vec!["crnmem"];
    full.extend_from_slice(args);
    Ok(crnmem::cli::main_with(full))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .flat_map(|p| if p.is_dir() { snapshot(&p) } else { vec![(p.display().to_string(), std::fs::read(&p).unwrap())] })
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let s = |n: &str| data(n).display().to_string();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = |n: &str| dir.path().join(n).display().to_string();
        let commands: Vec<Vec<String>> = vec![
            vec!["simulate".into(), s("sqrt2.crn"), "--t-end".into(), "10".into(), "--out".into(), o("sim.csv")],
            vec![
                "trajectory".into(), s("sqrt2.crn"), "--memory".into(), s("sqrt2.memory.json"), "--delay".into(),
                "1".into(), "--csv".into(), o("traj.csv"), "--out".into(), o("traj.json"),
            ],
            vec![
                "analyze".into(), s("sqrt2.crn"), "--region".into(), "0:3".into(), "--realtime".into(),
                "1.41421356237".into(), "--minpoly".into(), "1.41421356237".into(), "--out".into(), o("analyze.json"),
            ],
            vec!["compile-nfa".into(), s("parity.nfa.json"), "--input".into(), "1101".into(), "--out".into(), o("bundle")],
            vec![
                "determinism".into(), s("bistable.crn"), "--memory".into(), s("bistable.memory.json"), "--delay".into(),
                "1".into(), "--t-end".into(), "30".into(), "--states".into(), "0;1;2".into(), "--out".into(), o("delta.json"),
            ],
            vec![
                "follow".into(), s("sqrt2.crn"), "--memory".into(), s("sqrt2.memory.json"), "--delay".into(), "1".into(),
                "--tm-out".into(), o("tm.json"), "--out".into(), o("follow.json"),
            ],
        ];
        let mut codes = Vec::new();
        for c in &commands {
            let args: Vec<&str> = c.iter().map(String::as_str).collect();
            codes.push(run_cli(&args)?);
        }
        ensure(codes == [0, 0, 0, 0, 5, 0], || format!("exit codes {codes:?}"))?;
        let files: Vec<(String, Vec<u8>)> = snapshot(dir.path())
            .into_iter()
            .map(|(p, b)| (p.trim_start_matches(&dir.path().display().to_string()).to_string(), b))
            .collect();
        runs.push(files);
    }
    ensure(runs[0] == runs[1], || {
        let diff: Vec<_> = runs[0].iter().zip(&runs[1]).filter(|(a, b)| a != b).map(|(a, _)| a.0.clone()).collect();
        format!("outputs differ: {diff:?}")
    })?;
    Ok(format!("{} files byte-identical across two runs", runs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("integrator accuracy", integrator_accuracy),
        ("real-time computability", realtime),
        ("trajectory extraction", trajectory_extraction),
        ("state change rate bound", rate_bound),
        ("sojourn vs state time", sojourn),
        ("stability suite", stability),
        ("algebraicity probe", algebraicity),
        ("epsilon-d computation", epsilon_d),
        ("NFA pipeline", nfa_pipeline),
        ("determinism checker", determinism),
        ("real-time following", realtime_follow),
        ("CLI reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(note) => println!("PASS {:>2} {name}: {note}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
