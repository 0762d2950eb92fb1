//! Command-line front end. Exit codes: 0 pass, 1 check failed, 2 parse error,
//! 3 invalid initialization, 4 precondition violation, 5 nondeterminism.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{self, AnalysisError, FixedPointOptions};
use crate::crn::{derive_field, parse_network, ParseError, ReactionNetwork, State};
use crate::determinism::{extract_delta, run_trajectory, DeltaConfig, DeltaOutcome, DeterminismError};
use crate::integrator::{estimate_bounds, integrate, IntegrateError, IntegratorConfig, MassActionSystem, Solution};
use crate::json::to_canonical_string;
use crate::memory::{extract_trajectory_with, MemoryError, MemoryMaps, TrajectoryOptions};
use crate::nfa::{compile, Automaton, NfaError};
use crate::tm::{generate_tm_from_table, run_tm, steps_for_checkpoints, verify_realtime_follow, TmError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVALID_INIT: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_NONDETERMINISM: i32 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::new(EXIT_PARSE, e.to_string())
    }
}

impl From<IntegrateError> for Failure {
    fn from(e: IntegrateError) -> Self {
        let code = match e {
            IntegrateError::InvalidInitial(_) | IntegrateError::Dimension { .. } => EXIT_INVALID_INIT,
            _ => EXIT_PRECONDITION,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<MemoryError> for Failure {
    fn from(e: MemoryError) -> Self {
        let code = match e {
            MemoryError::InvalidMap(_) | MemoryError::UnknownSpecies(_) => EXIT_PARSE,
            MemoryError::InitialResidual { .. } | MemoryError::OutOfRange { .. } => EXIT_INVALID_INIT,
            MemoryError::ExceedsCap { .. } | MemoryError::BadDelay(_) => EXIT_PRECONDITION,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::new(EXIT_PRECONDITION, e.to_string())
    }
}

impl From<NfaError> for Failure {
    fn from(e: NfaError) -> Self {
        let code = match e {
            NfaError::Settling { .. } => EXIT_PRECONDITION,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<DeterminismError> for Failure {
    fn from(e: DeterminismError) -> Self {
        match e {
            DeterminismError::Integrate(e) => e.into(),
            DeterminismError::Memory(e) => e.into(),
            DeterminismError::UnknownState(_) => Failure::new(EXIT_NONDETERMINISM, e.to_string()),
            other => Failure::new(EXIT_PRECONDITION, other.to_string()),
        }
    }
}

impl From<TmError> for Failure {
    fn from(e: TmError) -> Self {
        let code = match e {
            TmError::MissingEntry(_) => EXIT_NONDETERMINISM,
            TmError::StepBudget { .. } => EXIT_PRECONDITION,
            _ => EXIT_CHECK_FAILED,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult = Result<i32, Failure>;

#[derive(Parser, Debug)]
#[command(name = "crnmem", version, about = "Memory trajectories of deterministic chemical reaction networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate a network and write dense samples as CSV.
    Simulate(SimulateArgs),
    /// Extract the memory trajectory of one run.
    Trajectory(TrajectoryArgs),
    /// Fixed points, real-time and (eps, d) checks, algebraicity probe.
    Analyze(AnalyzeArgs),
    /// Compile an automaton and input word into a dual-rail network bundle.
    CompileNfa(CompileArgs),
    /// Sample memory states and extract the transition table.
    Determinism(DeterminismArgs),
    /// Build a Turing machine from the transition table and check it follows the trajectory.
    Follow(FollowArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Network file in `.crn` format.
    pub crn: PathBuf,
    /// Initial concentrations: `X=0.5,Y=1` or `@init.json`; unspecified species start at 0.
    #[arg(long, default_value = "")]
    pub x0: String,
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
}

#[derive(Args, Debug)]
pub struct MemoryArgs {
    /// Memory-map JSON file.
    #[arg(long)]
    pub memory: PathBuf,
    #[arg(long)]
    pub delay: f64,
    /// Qualifying enters of different species closer than this merge into one entry.
    #[arg(long, default_value_t = 1e-6)]
    pub merge_window: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 0.1)]
    pub stride: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub mem: MemoryArgs,
    /// Trajectory CSV destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON report destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Species to check; defaults to the first one.
    #[arg(long)]
    pub species: Option<String>,
    /// Search box for fixed points, `lo:hi` per species separated by commas.
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub seeds: usize,
    /// Check real-time convergence to this value from the all-zero state.
    #[arg(long, allow_negative_numbers = true)]
    pub realtime: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid: f64,
    /// Margin curve CSV for `--realtime`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// `alpha eps d`: check (eps, d)-computation.
    #[arg(long, num_args = 3, value_names = ["ALPHA", "EPS", "D"])]
    pub epsd: Option<Vec<f64>>,
    /// Search for an integer polynomial vanishing at this value.
    #[arg(long)]
    pub minpoly: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 20)]
    pub max_coeff: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Automaton JSON file.
    pub nfa: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub period: f64,
    #[arg(long, default_value_t = 5)]
    pub rate: u64,
    #[arg(long)]
    pub input: String,
    /// Bundle directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dual-rail pair `A:B`; `B` is set to `1 - A` in every sample.
    #[arg(long)]
    pub complement: Vec<String>,
}

#[derive(Args, Debug)]
pub struct DeterminismArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub mem: MemoryArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Memory states to test, e.g. `0;1` or `1,0;0,1`; defaults to those visited from `--x0`.
    #[arg(long)]
    pub states: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FollowArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub mem: MemoryArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Step budget; by default exactly enough for every trajectory entry.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Machine description destination.
    #[arg(long)]
    pub tm_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("CRNMEM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // a second configuration attempt in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cmd: &Command) -> CliResult {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Trajectory(a) => trajectory(a),
        Command::Analyze(a) => analyze(a),
        Command::CompileNfa(a) => compile_nfa(a),
        Command::Determinism(a) => determinism(a),
        Command::Follow(a) => follow(a),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(EXIT_PRECONDITION, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn digest(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    Ok(format!("{:x}", Sha256::digest(bytes)))
}

/// Written next to `out` as `<out>.manifest.json`.
fn write_manifest(out: Option<&Path>, command: &str, inputs: &[&Path], config: Value, seed: u64) -> Result<(), Failure> {
    let Some(out) = out else { return Ok(()) };
    let mut digests = BTreeMap::new();
    for p in inputs {
        digests.insert(p.display().to_string(), digest(p)?);
    }
    let manifest = json!({
        "command": command,
        "inputs": digests,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
    });
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    write_out(Some(Path::new(&name)), &to_canonical_string(&manifest))
}

fn load_network(path: &Path) -> Result<ReactionNetwork, Failure> {
    Ok(parse_network(&read(path)?)?)
}

/// `X=0.5,Y=1` or `@file.json` holding `{"X": 0.5}`.
pub fn parse_x0(spec: &str, net: &ReactionNetwork) -> Result<Vec<f64>, Failure> {
    let mut x0 = vec![0.0; net.num_species()];
    let mut set = |name: &str, v: f64| -> Result<(), Failure> {
        let i = net
            .species_index(name)
            .ok_or_else(|| Failure::new(EXIT_INVALID_INIT, format!("--x0 names unknown species `{name}`")))?;
        x0[i] = v;
        Ok(())
    };
    if let Some(path) = spec.strip_prefix('@') {
        let text = read(Path::new(path))?;
        let obj: BTreeMap<String, f64> =
            serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{path}: {e}")))?;
        for (k, v) in obj {
            set(&k, v)?;
        }
    } else {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Failure::new(EXIT_PARSE, format!("--x0 entry `{part}` is not NAME=VALUE")))?;
            let v: f64 = v.trim().parse().map_err(|_| Failure::new(EXIT_PARSE, format!("--x0 value `{v}` is not a number")))?;
            set(k.trim(), v)?;
        }
    }
    Ok(x0)
}

fn integrator_config(run: &RunArgs) -> IntegratorConfig {
    IntegratorConfig::default().with_rel_tol(run.rel_tol).with_abs_tol(run.abs_tol)
}

fn solve(net: &ReactionNetwork, run: &RunArgs) -> Result<Solution, Failure> {
    let x0 = parse_x0(&run.x0, net)?;
    Ok(integrate(&MassActionSystem::from_network(net), &State::new(0.0, x0), run.t_end, &integrator_config(run))?)
}

fn run_config(run: &RunArgs) -> Value {
    json!({ "x0": run.x0, "t_end": run.t_end, "rel_tol": run.rel_tol, "abs_tol": run.abs_tol })
}

fn mem_config(mem: &MemoryArgs) -> Value {
    json!({ "memory": mem.memory.display().to_string(), "delay": mem.delay, "merge_window": mem.merge_window })
}

fn x0_inputs(run: &RunArgs) -> Vec<&Path> {
    let mut v = vec![run.crn.as_path()];
    if let Some(p) = run.x0.strip_prefix('@') {
        v.push(Path::new(p));
    }
    v
}

fn simulate(a: &SimulateArgs) -> CliResult {
    let net = load_network(&a.run.crn)?;
    let sol = solve(&net, &a.run)?;
    let mut buf = Vec::new();
    sol.write_csv(&mut buf, net.species_names(), a.stride).expect("writing to memory");
    write_out(a.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    let mut cfg = run_config(&a.run);
    cfg["stride"] = json!(a.stride);
    write_manifest(a.out.as_deref(), "simulate", &x0_inputs(&a.run), cfg, 0)?;
    Ok(EXIT_PASS)
}

fn load_maps(mem: &MemoryArgs, net: &ReactionNetwork) -> Result<MemoryMaps, Failure> {
    Ok(MemoryMaps::from_json(&read(&mem.memory)?, net)?)
}

fn trajectory(a: &TrajectoryArgs) -> CliResult {
    let net = load_network(&a.run.crn)?;
    let maps = load_maps(&a.mem, &net)?;
    let sol = solve(&net, &a.run)?;
    let traj = extract_trajectory_with(&sol, &maps, a.mem.delay, TrajectoryOptions { merge_window: a.mem.merge_window })?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(p) = &a.csv {
        write_out(Some(p), &traj.to_csv())?;
    }
    write_out(a.out.as_deref(), &to_canonical_string(&traj.to_json_value()))?;
    let mut inputs = x0_inputs(&a.run);
    inputs.push(&a.mem.memory);
    let cfg = json!({ "run": run_config(&a.run), "memory": mem_config(&a.mem) });
    write_manifest(a.out.as_deref(), "trajectory", &inputs, cfg, 0)?;
    Ok(EXIT_PASS)
}

fn species_arg(net: &ReactionNetwork, name: Option<&str>) -> Result<usize, Failure> {
    match name {
        Some(n) => net.species_index(n).ok_or_else(|| Failure::new(EXIT_PRECONDITION, format!("unknown species `{n}`"))),
        None if net.num_species() > 0 => Ok(0),
        None => Err(Failure::new(EXIT_PRECONDITION, "the network has no species")),
    }
}

fn parse_region(spec: &str, n: usize) -> Result<Vec<(f64, f64)>, Failure> {
    let parts: Vec<&str> = spec.split(',').collect();
    let bad = || Failure::new(EXIT_PARSE, format!("--region `{spec}` is not lo:hi per species"));
    let mut out = Vec::new();
    for p in &parts {
        let (lo, hi) = p.split_once(':').ok_or_else(bad)?;
        out.push((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?));
    }
    match out.len() {
        1 => Ok(vec![out[0]; n]),
        k if k == n => Ok(out),
        _ => Err(bad()),
    }
}

fn analyze(a: &AnalyzeArgs) -> CliResult {
    let net = load_network(&a.run.crn)?;
    let mut report = serde_json::Map::new();
    let mut code = EXIT_PASS;
    if let Some(v) = a.minpoly {
        let p = analysis::minpoly_probe(v, a.max_degree, a.max_coeff);
        if p.is_none() {
            code = EXIT_CHECK_FAILED;
        }
        report.insert(
            "minpoly".into(),
            json!({
                "value": v,
                "polynomial": p.as_ref().map(ToString::to_string),
                "coefficients": p.as_ref().map(|p| p.coeffs.clone()),
            }),
        );
    }
    if let Some(alpha) = a.realtime {
        let species = species_arg(&net, a.species.as_deref())?;
        let cfg = IntegratorConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-14);
        let sol = integrate(&MassActionSystem::from_network(&net), &State::zeros(net.num_species()), a.t_max, &cfg)?;
        let v = analysis::check_realtime(&sol, species, alpha, a.t_max, a.grid)?;
        if let Some(p) = &a.curve {
            write_out(Some(p), &v.margin_csv())?;
        }
        if !v.pass {
            code = EXIT_CHECK_FAILED;
        }
        report.insert(
            "realtime".into(),
            json!({
                "species": net.species_names()[species],
                "alpha": alpha,
                "pass": v.pass,
                "first_violation_time": v.first_violation_time,
                "t_max": a.t_max,
                "grid": a.grid,
                "warnings": v.warnings,
            }),
        );
    }
    if let Some(e) = &a.epsd {
        let species = species_arg(&net, a.species.as_deref())?;
        let sol = solve(&net, &a.run)?;
        let v = analysis::check_epsd(&sol, species, e[0], e[1], e[2])?;
        if !v.pass {
            code = EXIT_CHECK_FAILED;
        }
        let b = estimate_bounds(&sol);
        report.insert(
            "epsd".into(),
            json!({
                "species": net.species_names()[species],
                "alpha": e[0], "eps": e[1], "d": e[2],
                "pass": v.pass,
                "witness_t0": v.witness_t0,
                "beta": b.beta,
                "beta0": b.beta0,
                "universal_d": analysis::universal_d(e[1], b.beta0),
            }),
        );
    }
    if let Some(r) = &a.region {
        let region = parse_region(r, net.num_species())?;
        let opts = FixedPointOptions { seeds: a.seeds, ..Default::default() };
        let pts = analysis::find_fixed_points(&derive_field(&net), &region, &opts);
        report.insert("species".into(), json!(net.species_names()));
        report.insert("fixed_points".into(), serde_json::to_value(&pts).expect("reports serialize"));
    }
    if report.is_empty() {
        return Err(Failure::new(EXIT_PARSE, "analyze needs one of --region, --realtime, --epsd, --minpoly"));
    }
    write_out(a.out.as_deref(), &to_canonical_string(&Value::Object(report)))?;
    let cfg = json!({
        "run": run_config(&a.run), "species": a.species, "region": a.region, "seeds": a.seeds,
        "realtime": a.realtime, "t_max": a.t_max, "grid": a.grid, "epsd": a.epsd,
        "minpoly": a.minpoly, "max_degree": a.max_degree, "max_coeff": a.max_coeff,
    });
    write_manifest(a.out.as_deref(), "analyze", &x0_inputs(&a.run), cfg, 0)?;
    Ok(code)
}

fn compile_nfa(a: &CompileArgs) -> CliResult {
    let aut = Automaton::from_json(&read(&a.nfa)?)?;
    let out = compile(&aut, &a.input, a.period, a.rate)?;
    out.write_bundle(&a.out)
        .map_err(|e| Failure::new(EXIT_PRECONDITION, format!("cannot write bundle {}: {e}", a.out.display())))?;
    let cfg = json!({ "period": a.period, "rate": a.rate, "input": a.input });
    write_manifest(Some(&a.out.join("bundle.json")), "compile-nfa", &[&a.nfa], cfg, 0)?;
    Ok(EXIT_PASS)
}

fn parse_states(spec: &str, width: usize) -> Result<Vec<Vec<u32>>, Failure> {
    let bad = || Failure::new(EXIT_PARSE, format!("--states `{spec}` is not a `;`-separated list of id tuples"));
    spec.split(';')
        .map(|s| {
            let v = s.split(',').map(|t| t.trim().parse::<u32>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
            if v.len() == width {
                Ok(v)
            } else {
                Err(bad())
            }
        })
        .collect()
}

fn delta_config(run: &RunArgs, mem: &MemoryArgs, s: &SamplingArgs, net: &ReactionNetwork) -> Result<DeltaConfig, Failure> {
    let mut complements = Vec::new();
    for c in &s.complement {
        let (p, q) = c
            .split_once(':')
            .ok_or_else(|| Failure::new(EXIT_PARSE, format!("--complement `{c}` is not A:B")))?;
        let idx = |n: &str| {
            net.species_index(n.trim()).ok_or_else(|| Failure::new(EXIT_PARSE, format!("unknown species `{n}`")))
        };
        complements.push((idx(p)?, idx(q)?));
    }
    Ok(DeltaConfig {
        seed: s.seed,
        integrator: integrator_config(run),
        trajectory: TrajectoryOptions { merge_window: mem.merge_window },
        x0_template: Some(parse_x0(&run.x0, net)?),
        complements,
        ..DeltaConfig::new(mem.delay, s.samples, run.t_end)
    })
}

/// Extracts δ on `seed_states` and on every successor it reaches.
fn closed_delta(
    net: &ReactionNetwork,
    maps: &MemoryMaps,
    seed_states: Vec<Vec<u32>>,
    cfg: &DeltaConfig,
) -> Result<DeltaOutcome, Failure> {
    let mut states: BTreeSet<Vec<u32>> = seed_states.into_iter().collect();
    loop {
        let list: Vec<Vec<u32>> = states.iter().cloned().collect();
        let outcome = extract_delta(net, maps, &list, cfg)?;
        let Some(table) = outcome.table() else { return Ok(outcome) };
        let missing: Vec<Vec<u32>> = table.entries.values().filter(|m| !states.contains(*m)).cloned().collect();
        if missing.is_empty() {
            return Ok(outcome);
        }
        states.extend(missing);
    }
}

fn visited_states(net: &ReactionNetwork, maps: &MemoryMaps, cfg: &DeltaConfig) -> Result<Vec<Vec<u32>>, Failure> {
    let x0 = cfg.x0_template.clone().unwrap_or_else(|| vec![0.0; net.num_species()]);
    Ok(run_trajectory(net, maps, &x0, cfg)?.states())
}

fn sampling_config(a: &RunArgs, m: &MemoryArgs, s: &SamplingArgs) -> Value {
    json!({
        "run": run_config(a), "memory": mem_config(m),
        "samples": s.samples, "seed": s.seed, "complement": s.complement,
    })
}

fn determinism(a: &DeterminismArgs) -> CliResult {
    let net = load_network(&a.run.crn)?;
    let maps = load_maps(&a.mem, &net)?;
    let cfg = delta_config(&a.run, &a.mem, &a.sampling, &net)?;
    let states = match &a.states {
        Some(s) => parse_states(s, maps.len())?,
        None => visited_states(&net, &maps, &cfg)?,
    };
    let outcome = extract_delta(&net, &maps, &states, &cfg)?;
    write_out(a.out.as_deref(), &to_canonical_string(&outcome.to_json_value()))?;
    let mut inputs = x0_inputs(&a.run);
    inputs.push(&a.mem.memory);
    let mut cfg_json = sampling_config(&a.run, &a.mem, &a.sampling);
    cfg_json["states"] = json!(states);
    write_manifest(a.out.as_deref(), "determinism", &inputs, cfg_json, a.sampling.seed)?;
    Ok(match outcome {
        DeltaOutcome::Deterministic(_) => EXIT_PASS,
        DeltaOutcome::Conflict { .. } => EXIT_NONDETERMINISM,
    })
}

fn follow(a: &FollowArgs) -> CliResult {
    let net = load_network(&a.run.crn)?;
    let maps = load_maps(&a.mem, &net)?;
    let cfg = delta_config(&a.run, &a.mem, &a.sampling, &net)?;
    let x0 = cfg.x0_template.clone().expect("set by delta_config");
    let traj = run_trajectory(&net, &maps, &x0, &cfg)?;
    let outcome = closed_delta(&net, &maps, traj.states(), &cfg)?;
    let Some(table) = outcome.table() else {
        write_out(a.out.as_deref(), &to_canonical_string(&outcome.to_json_value()))?;
        return Ok(EXIT_NONDETERMINISM);
    };
    let tm = generate_tm_from_table(table)?;
    if let Some(p) = &a.tm_out {
        write_out(Some(p), &to_canonical_string(&tm.to_json_value()))?;
    }
    let budget = a.max_steps.unwrap_or_else(|| steps_for_checkpoints(&tm, traj.len() - 1));
    let trace = run_tm(&tm, &traj.entries[0].state, budget)?;
    let v = verify_realtime_follow(&trace, &traj)?;
    let report = json!({
        "pass": v.pass,
        "c": v.c,
        "ratios": v.ratios,
        "first_mismatch": v.first_mismatch,
        "trajectory": traj.to_json_value(),
        "trace": trace.to_json_value(),
        "delta": table.to_json_value(),
    });
    write_out(a.out.as_deref(), &to_canonical_string(&report))?;
    let mut inputs = x0_inputs(&a.run);
    inputs.push(&a.mem.memory);
    let mut cfg_json = sampling_config(&a.run, &a.mem, &a.sampling);
    cfg_json["max_steps"] = json!(a.max_steps);
    write_manifest(a.out.as_deref(), "follow", &inputs, cfg_json, a.sampling.seed)?;
    Ok(if v.pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}
