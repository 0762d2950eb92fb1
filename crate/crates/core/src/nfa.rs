//! Compiles a binary-alphabet automaton into a clocked dual-rail network.
//!
//! Each state `q` gets main rails `X_q`/`Xb_q` and staging rails `Y_q`/`Yb_q`.
//! Every symbol period is split into compute, commit and reset phases driven by
//! the clock signals `C`, `Cb` and `Cr`; the input word drives `S0` and `S1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::crn::{is_valid_name, DrivenSignal, ModelError, Reaction, ReactionNetwork, State, Waveform};
use crate::json::to_canonical_string;
use crate::memory::{MemoryInterval, MemoryMap, MemoryMaps, Rational, TrajectoryOptions};

const COMPUTE_END: f64 = 0.5;
const COMMIT_END: f64 = 0.8;
/// Ramp width of every clock and input edge, as a fraction of the period.
const RAMP: f64 = 0.01;
/// Time for a committed rail to cross from 0 to 7/8 at unit rate: the integral
/// of 1/((1-x)(2x^2-x+1)) over [0, 7/8].
const RAIL_SWITCH_INTEGRAL: f64 = 1.799_960_3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NfaError {
    #[error("invalid automaton: {0}")]
    Invalid(String),
    #[error("input word must be a nonempty string over {{0, 1}}, got `{0}`")]
    BadWord(String),
    #[error("symbol period {period} is below the settling bound 10/k = {bound}")]
    Settling { period: f64, bound: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Automaton {
    pub states: Vec<String>,
    pub start: Vec<String>,
    #[serde(default)]
    pub accept: Vec<String>,
    pub transitions: Vec<(String, String, String)>,
}

impl Automaton {
    pub fn from_json(text: &str) -> Result<Self, NfaError> {
        let a: Automaton = serde_json::from_str(text).map_err(|e| NfaError::Invalid(e.to_string()))?;
        a.validate()?;
        Ok(a)
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(self).expect("automaton serializes")
    }

    pub fn validate(&self) -> Result<(), NfaError> {
        if self.states.is_empty() {
            return Err(NfaError::Invalid("no states".into()));
        }
        let known: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        if known.len() != self.states.len() {
            return Err(NfaError::Invalid("duplicate state names".into()));
        }
        for q in &self.states {
            if !is_valid_name(&format!("X_{q}")) {
                return Err(NfaError::Invalid(format!("state name `{q}` cannot form a species name")));
            }
        }
        if self.start.is_empty() {
            return Err(NfaError::Invalid("start set is empty".into()));
        }
        for q in self.start.iter().chain(&self.accept) {
            if !known.contains(q.as_str()) {
                return Err(NfaError::Invalid(format!("undeclared state `{q}`")));
            }
        }
        for (p, a, q) in &self.transitions {
            if !known.contains(p.as_str()) || !known.contains(q.as_str()) {
                return Err(NfaError::Invalid(format!("transition ({p}, {a}, {q}) names an undeclared state")));
            }
            if a != "0" && a != "1" {
                return Err(NfaError::Invalid(format!("symbol `{a}` is not 0 or 1")));
            }
        }
        Ok(())
    }

    /// Sets of reachable states before and after each symbol.
    pub fn subset_run(&self, word: &str) -> Vec<BTreeSet<String>> {
        let mut cur: BTreeSet<String> = self.start.iter().cloned().collect();
        let mut out = vec![cur.clone()];
        for sym in word.chars() {
            let sym = sym.to_string();
            cur = self
                .transitions
                .iter()
                .filter(|(p, a, _)| *a == sym && cur.contains(p))
                .map(|(_, _, q)| q.clone())
                .collect();
            out.push(cur.clone());
        }
        out
    }

    pub fn accepts(&self, word: &str) -> bool {
        self.subset_run(word).last().is_some_and(|s| s.iter().any(|q| self.accept.contains(q)))
    }

    /// Memory ids (1 high, 0 low) of each state for a reachable set, in state order.
    pub fn rail_pattern(&self, set: &BTreeSet<String>) -> Vec<u32> {
        self.states.iter().map(|q| u32::from(set.contains(q))).collect()
    }
}

/// Clock phase layout shared by the clocks and the input signals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub period: f64,
    /// Idle time before the first symbol.
    pub lead_in: f64,
    pub symbols: usize,
}

impl Schedule {
    /// Lead-in that places each commit's rail crossing near a multiple of the period.
    pub fn new(period: f64, rate_k: u64, symbols: usize) -> Self {
        let latency = RAIL_SWITCH_INTEGRAL / rate_k as f64 + 0.5 * RAMP * period;
        Self { period, lead_in: (COMPUTE_END * period - latency).max(0.0), symbols }
    }

    pub fn symbol_start(&self, n: usize) -> f64 {
        self.lead_in + n as f64 * self.period
    }

    pub fn commit_start(&self, n: usize) -> f64 {
        self.symbol_start(n) + COMPUTE_END * self.period
    }

    pub fn commit_end(&self, n: usize) -> f64 {
        self.symbol_start(n) + COMMIT_END * self.period
    }

    pub fn end(&self) -> f64 {
        self.symbol_start(self.symbols)
    }

    fn pulses(&self, frac: (f64, f64), active: impl Fn(usize) -> bool) -> Result<Waveform, ModelError> {
        let r = RAMP * self.period;
        let mut pts = vec![(0.0, 0.0)];
        for n in (0..self.symbols).filter(|&n| active(n)) {
            let a = self.symbol_start(n) + frac.0 * self.period;
            let b = self.symbol_start(n) + frac.1 * self.period;
            for p in [(a, 0.0), (a + r, 1.0), (b - r, 1.0), (b, 0.0)] {
                if p.0 > pts.last().unwrap().0 {
                    pts.push(p);
                }
            }
        }
        Waveform::new(pts)
    }
}

/// `S0` and `S1` square waves: `S_b` is high during the compute phase of each position holding `b`.
pub fn encode_input(word: &str, schedule: &Schedule) -> Result<(Waveform, Waveform), NfaError> {
    if word.is_empty() || !word.chars().all(|c| c == '0' || c == '1') {
        return Err(NfaError::BadWord(word.to_string()));
    }
    let bits: Vec<char> = word.chars().collect();
    let s = Schedule { symbols: bits.len(), ..*schedule };
    let s0 = s.pulses((0.0, COMPUTE_END), |n| bits[n] == '0')?;
    let s1 = s.pulses((0.0, COMPUTE_END), |n| bits[n] == '1')?;
    Ok((s0, s1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompilationOutput {
    pub automaton: Automaton,
    pub word: String,
    pub network: ReactionNetwork,
    /// Maps of the observed rails `X_q`, one per automaton state.
    pub maps: MemoryMaps,
    /// Maps of every rail, for restoration checks.
    pub rail_maps: MemoryMaps,
    pub x0: Vec<f64>,
    pub schedule: Schedule,
    pub rate_k: u64,
    /// Recommended delay: one clock phase.
    pub delay: f64,
    pub trajectory_options: TrajectoryOptions,
}

fn rail_map() -> MemoryMap {
    let r = Rational::new;
    MemoryMap::new(
        r(3, 2),
        vec![
            MemoryInterval { id: 0, lo: r(0, 1), hi: r(1, 8), lo_closed: true },
            MemoryInterval { id: 1, lo: r(7, 8), hi: r(9, 8), lo_closed: false },
            MemoryInterval { id: 2, lo: r(3, 8), hi: r(5, 8), lo_closed: false },
        ],
    )
    .expect("rail map is valid")
}

pub fn compile(aut: &Automaton, word: &str, period: f64, rate_k: u64) -> Result<CompilationOutput, NfaError> {
    aut.validate()?;
    if rate_k == 0 {
        return Err(NfaError::Invalid("rate must be a positive integer".into()));
    }
    let bound = 10.0 / rate_k as f64;
    if !(period >= bound) {
        return Err(NfaError::Settling { period, bound });
    }
    let schedule = Schedule::new(period, rate_k, word.chars().count());
    let (s0, s1) = encode_input(word, &schedule)?;
    let clock = schedule.pulses((0.0, COMPUTE_END), |_| true)?;
    let commit = schedule.pulses((COMPUTE_END, COMMIT_END), |_| true)?;
    let reset = schedule.pulses((COMMIT_END, 1.0), |_| true)?;

    let mut names: Vec<String> = ["C", "Cb", "Cr", "S0", "S1"].iter().map(|s| s.to_string()).collect();
    let (c, cb, cr) = (0, 1, 2);
    let sym = |a: &str| if a == "0" { 3 } else { 4 };
    let mut idx = BTreeMap::new();
    for q in &aut.states {
        let base = names.len();
        for p in ["X", "Xb", "Y", "Yb"] {
            names.push(format!("{p}_{q}"));
        }
        idx.insert(q.clone(), base);
    }
    let (x, xb, y, yb) = (|b: usize| b, |b: usize| b + 1, |b: usize| b + 2, |b: usize| b + 3);
    let k = rate_k as i64;
    let rx = |lhs: &[(usize, u32)], rhs: &[(usize, u32)]| Reaction::new(lhs, rhs, k);

    let mut reactions = Vec::new();
    for q in &aut.states {
        let b = idx[q];
        for (hi, lo) in [(x(b), xb(b)), (y(b), yb(b))] {
            // bistable restoration toward the nearer rail
            reactions.push(rx(&[(hi, 1), (lo, 2)], &[(lo, 3)])?);
            reactions.push(rx(&[(lo, 1), (hi, 2)], &[(hi, 3)])?);
            // pull the rail sum back to 1
            for (z, o) in [(hi, lo), (lo, hi)] {
                reactions.push(rx(&[(z, 1)], &[(z, 2)])?);
                reactions.push(rx(&[(z, 2)], &[(z, 1)])?);
                reactions.push(rx(&[(z, 1), (o, 1)], &[(o, 1)])?);
            }
        }
    }
    for (p, a, q) in &aut.transitions {
        let (bp, bq) = (idx[p], idx[q]);
        let cat = [(c, 1), (sym(a), 1), (x(bp), 1)];
        let mut lhs = cat.to_vec();
        lhs.push((yb(bq), 1));
        let mut rhs = cat.to_vec();
        rhs.push((y(bq), 1));
        reactions.push(rx(&lhs, &rhs)?);
    }
    for q in &aut.states {
        let b = idx[q];
        reactions.push(rx(&[(cb, 1), (y(b), 1), (xb(b), 1)], &[(cb, 1), (y(b), 1), (x(b), 1)])?);
        reactions.push(rx(&[(cb, 1), (yb(b), 1), (x(b), 1)], &[(cb, 1), (yb(b), 1), (xb(b), 1)])?);
        reactions.push(rx(&[(cr, 1), (y(b), 1)], &[(cr, 1), (yb(b), 1)])?);
    }
    let driven = vec![
        DrivenSignal { species: c, waveform: clock },
        DrivenSignal { species: cb, waveform: commit },
        DrivenSignal { species: cr, waveform: reset },
        DrivenSignal { species: 3, waveform: s0 },
        DrivenSignal { species: 4, waveform: s1 },
    ];
    let network = ReactionNetwork::new(names.clone(), reactions, driven)?;

    let mut x0 = vec![0.0; names.len()];
    let mut observed = Vec::new();
    let mut rails = Vec::new();
    for q in &aut.states {
        let b = idx[q];
        let high = aut.start.contains(q);
        x0[x(b)] = if high { 1.0 } else { 0.0 };
        x0[xb(b)] = 1.0 - x0[x(b)];
        x0[yb(b)] = 1.0;
        observed.push((x(b), names[x(b)].clone(), rail_map()));
        for i in [x(b), xb(b), y(b), yb(b)] {
            rails.push((i, names[i].clone(), rail_map()));
        }
    }
    Ok(CompilationOutput {
        automaton: aut.clone(),
        word: word.to_string(),
        network,
        maps: MemoryMaps::new(observed).expect("distinct species"),
        rail_maps: MemoryMaps::new(rails).expect("distinct species"),
        x0,
        schedule,
        rate_k,
        delay: COMPUTE_END * period,
        trajectory_options: TrajectoryOptions { merge_window: RAMP * period },
    })
}

impl CompilationOutput {
    /// Simulation horizon covering the word plus one idle period.
    pub fn horizon(&self) -> f64 {
        self.schedule.end() + self.schedule.period
    }

    /// `(X_q, Xb_q)` index pairs.
    pub fn complements(&self) -> Vec<(usize, usize)> {
        self.maps.species().into_iter().map(|i| (i, i + 1)).collect()
    }

    pub fn initial_state(&self) -> State {
        State::new(0.0, self.x0.clone())
    }

    /// Expected trajectory states: the subset run with repeats collapsed.
    pub fn expected_pattern(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = Vec::new();
        for set in self.automaton.subset_run(&self.word) {
            let p = self.automaton.rail_pattern(&set);
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        out
    }

    pub fn init_json(&self) -> Value {
        let m: serde_json::Map<String, Value> =
            self.network.species_names().iter().zip(&self.x0).map(|(n, v)| (n.clone(), json!(v))).collect();
        Value::Object(m)
    }

    pub fn waveforms_json(&self) -> Value {
        let names = self.network.species_names();
        let m: serde_json::Map<String, Value> = self
            .network
            .driven()
            .iter()
            .map(|d| (names[d.species].clone(), json!(d.waveform.points())))
            .collect();
        json!({ "signals": m })
    }

    pub fn manifest_json(&self) -> Value {
        json!({
            "crn": "network.crn",
            "memory": "memory.json",
            "rail_memory": "rails.json",
            "waveforms": "waveforms.json",
            "init": "init.json",
            "word": self.word,
            "period": self.schedule.period,
            "lead_in": self.schedule.lead_in,
            "rate_k": self.rate_k,
            "delay": self.delay,
            "merge_window": self.trajectory_options.merge_window,
            "horizon": self.horizon(),
            "expected_pattern": self.expected_pattern(),
            "complements": self.complements().iter().map(|&(a, b)| {
                let n = self.network.species_names();
                [n[a].clone(), n[b].clone()]
            }).collect::<Vec<_>>(),
        })
    }

    /// Writes `network.crn`, `memory.json`, `rails.json`, `waveforms.json`,
    /// `init.json` and `bundle.json` into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("network.crn"), self.network.to_crn_text())?;
        fs::write(dir.join("memory.json"), to_canonical_string(&self.maps.to_json_value()))?;
        fs::write(dir.join("rails.json"), to_canonical_string(&self.rail_maps.to_json_value()))?;
        fs::write(dir.join("waveforms.json"), to_canonical_string(&self.waveforms_json()))?;
        fs::write(dir.join("init.json"), to_canonical_string(&self.init_json()))?;
        fs::write(dir.join("bundle.json"), to_canonical_string(&self.manifest_json()))?;
        Ok(())
    }
}
