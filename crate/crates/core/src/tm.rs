//! Multi-tape Turing machines that replay a memory transition table, and the
//! check that such a machine keeps pace with a memory trajectory.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::determinism::DeltaTable;
use crate::memory::MemoryTrajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TmError {
    #[error("memory state {0:?} has no transition entry")]
    MissingEntry(Vec<u32>),
    #[error("step budget {budget} ran out in the middle of a write after {completed} completed writes")]
    StepBudget { budget: u64, completed: usize },
    #[error("tape word `{0}` is not the binary expansion of a natural")]
    BadWord(String),
    #[error("memory state {0:?} has {1} components but the machine has {2} tapes")]
    Dimension(Vec<u32>, usize, usize),
}

/// Binary expansion without leading zeros; `0` is `"0"`.
pub fn itoa(n: u32) -> String {
    format!("{n:b}")
}

/// Inverse of [`itoa`]; rejects anything `itoa` cannot produce.
pub fn atoi(word: &str) -> Result<u32, TmError> {
    let canonical = !word.is_empty() && word.bytes().all(|b| b == b'0' || b == b'1') && (word == "0" || !word.starts_with('0'));
    if !canonical {
        return Err(TmError::BadWord(word.to_string()));
    }
    u32::from_str_radix(word, 2).map_err(|_| TmError::BadWord(word.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Zero,
    One,
    Blank,
}

impl Symbol {
    fn from_char(c: char) -> Self {
        match c {
            '0' => Symbol::Zero,
            '1' => Symbol::One,
            _ => Symbol::Blank,
        }
    }

    fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Blank => '_',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
    Stay,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::Left => "L",
            Move::Right => "R",
            Move::Stay => "S",
        })
    }
}

/// What a control state does regardless of the symbols under the heads.
#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    /// `None` keeps the symbol that was read.
    Step { write: Vec<Option<Symbol>>, moves: Vec<Move>, next: usize },
    Halt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlState {
    pub name: String,
    pub memory: Vec<u32>,
    pub program: Program,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiTapeTM {
    pub tapes: Vec<String>,
    pub states: Vec<ControlState>,
    /// Control state `q_m` for each memory state `m`.
    pub entry: BTreeMap<Vec<u32>, usize>,
    /// Cells rewritten per macro write: the longest word in the table.
    pub width: usize,
}

fn state_label(m: &[u32]) -> String {
    m.iter().map(u32::to_string).collect::<Vec<_>>().join("_")
}

/// Builds the machine from `δ`: for each `m`, `q_m` rewrites every tape with
/// `itoa(δ(m))` in one left-to-right sweep, walks back, and enters `q_δ(m)`;
/// `q_m` halts instead when `δ(m) = m`.
pub fn generate_tm(tapes: &[String], delta: &BTreeMap<Vec<u32>, Vec<u32>>) -> Result<MultiTapeTM, TmError> {
    let k = tapes.len();
    for (m, next) in delta {
        for s in [m, next] {
            if s.len() != k {
                return Err(TmError::Dimension(s.clone(), s.len(), k));
            }
        }
        if !delta.contains_key(next) {
            return Err(TmError::MissingEntry(next.clone()));
        }
    }
    let width = delta.iter().flat_map(|(a, b)| a.iter().chain(b)).map(|&v| itoa(v).len()).max().unwrap_or(1);

    // q_m occupies the first slot of each block; moving states follow it
    let mut entry = BTreeMap::new();
    let mut next_id = 0;
    for (m, next) in delta {
        entry.insert(m.clone(), next_id);
        next_id += if next == m { 1 } else { 2 * width };
    }
    let mut states = Vec::with_capacity(next_id);
    for (m, next) in delta {
        let label = state_label(m);
        if next == m {
            states.push(ControlState { name: format!("q{label}"), memory: m.clone(), program: Program::Halt });
            continue;
        }
        let base = entry[m];
        let words: Vec<Vec<char>> = next.iter().map(|&v| itoa(v).chars().collect()).collect();
        for j in 0..width {
            let write = words.iter().map(|w| Some(w.get(j).map_or(Symbol::Blank, |&c| Symbol::from_char(c)))).collect();
            let name = if j == 0 { format!("q{label}") } else { format!("q{label}.w{j}") };
            states.push(ControlState {
                name,
                memory: m.clone(),
                program: Program::Step { write, moves: vec![Move::Right; k], next: base + j + 1 },
            });
        }
        for j in 0..width {
            let target = if j + 1 == width { entry[next] } else { base + width + j + 1 };
            states.push(ControlState {
                name: format!("q{label}.l{j}"),
                memory: m.clone(),
                program: Program::Step { write: vec![None; k], moves: vec![Move::Left; k], next: target },
            });
        }
    }
    Ok(MultiTapeTM { tapes: tapes.to_vec(), states, entry, width })
}

pub fn generate_tm_from_table(table: &DeltaTable) -> Result<MultiTapeTM, TmError> {
    generate_tm(&table.species, &table.entries)
}

impl MultiTapeTM {
    pub fn is_entry(&self, id: usize) -> bool {
        self.entry.values().any(|&e| e == id)
    }

    pub fn to_json_value(&self) -> Value {
        let states: Vec<Value> = self
            .states
            .iter()
            .map(|s| {
                let program = match &s.program {
                    Program::Halt => json!("halt"),
                    Program::Step { write, moves, next } => json!({
                        "write": write.iter().map(|w| w.map_or("*".to_string(), |c| c.as_char().to_string())).collect::<Vec<_>>(),
                        "moves": moves.iter().map(Move::to_string).collect::<Vec<_>>(),
                        "next": self.states[*next].name,
                    }),
                };
                json!({ "name": s.name, "memory": s.memory, "program": program })
            })
            .collect();
        let entry: serde_json::Map<String, Value> =
            self.entry.iter().map(|(m, &id)| (state_label(m), json!(self.states[id].name))).collect();
        json!({ "tapes": self.tapes, "width": self.width, "entry": entry, "states": states })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub n: usize,
    pub step: u64,
    pub tapes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FollowTrace {
    pub checkpoints: Vec<Checkpoint>,
    pub steps: u64,
    pub halted: bool,
    /// Full cell contents at the end of the run, blanks included.
    pub final_cells: Vec<String>,
}

impl FollowTrace {
    pub fn to_json_value(&self) -> Value {
        json!({
            "steps": self.steps,
            "halted": self.halted,
            "checkpoints": self.checkpoints.iter().map(|c| json!({ "n": c.n, "step": c.step, "tapes": c.tapes })).collect::<Vec<_>>(),
        })
    }
}

struct Tape {
    cells: Vec<Symbol>,
    head: usize,
}

impl Tape {
    fn read(&self) -> Symbol {
        self.cells.get(self.head).copied().unwrap_or(Symbol::Blank)
    }

    fn write(&mut self, s: Symbol) {
        if self.head >= self.cells.len() {
            self.cells.resize(self.head + 1, Symbol::Blank);
        }
        self.cells[self.head] = s;
    }

    fn word(&self) -> String {
        self.cells.iter().take_while(|&&s| s != Symbol::Blank).map(|s| s.as_char()).collect()
    }

    fn raw(&self) -> String {
        self.cells.iter().map(|s| s.as_char()).collect()
    }
}

/// Runs from tapes holding `itoa(initial)`; a checkpoint follows every completed write.
pub fn run_tm(tm: &MultiTapeTM, initial: &[u32], max_steps: u64) -> Result<FollowTrace, TmError> {
    let mut control = *tm.entry.get(initial).ok_or_else(|| TmError::MissingEntry(initial.to_vec()))?;
    let mut tapes: Vec<Tape> = initial
        .iter()
        .map(|&v| Tape { cells: itoa(v).chars().map(Symbol::from_char).collect(), head: 0 })
        .collect();
    let words = |tapes: &[Tape]| tapes.iter().map(Tape::word).collect::<Vec<_>>();
    let mut checkpoints = vec![Checkpoint { n: 0, step: 0, tapes: words(&tapes) }];
    let mut steps = 0u64;
    while let Program::Step { write, moves, next } = &tm.states[control].program {
        if steps == max_steps {
            return if tm.is_entry(control) {
                Ok(FollowTrace { checkpoints, steps, halted: false, final_cells: tapes.iter().map(Tape::raw).collect() })
            } else {
                Err(TmError::StepBudget { budget: max_steps, completed: checkpoints.len() - 1 })
            };
        }
        for ((tape, w), mv) in tapes.iter_mut().zip(write).zip(moves) {
            let s = w.unwrap_or_else(|| tape.read());
            tape.write(s);
            match mv {
                Move::Left => tape.head = tape.head.saturating_sub(1),
                Move::Right => tape.head += 1,
                Move::Stay => {}
            }
        }
        steps += 1;
        control = *next;
        if tm.is_entry(control) {
            checkpoints.push(Checkpoint { n: checkpoints.len(), step: steps, tapes: words(&tapes) });
        }
    }
    Ok(FollowTrace { checkpoints, steps, halted: true, final_cells: tapes.iter().map(Tape::raw).collect() })
}

/// Step budget after which exactly `n` writes have completed (or the machine halted).
pub fn steps_for_checkpoints(tm: &MultiTapeTM, n: usize) -> u64 {
    2 * tm.width as u64 * n as u64
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FollowVerdict {
    pub pass: bool,
    /// `max s_n / t_n` over `n ≥ 1`.
    pub c: f64,
    pub ratios: Vec<f64>,
    /// First checkpoint that disagrees with (or is missing from) the trajectory.
    pub first_mismatch: Option<usize>,
}

/// Decodes every checkpoint and compares it with trajectory entry `n`.
pub fn verify_realtime_follow(trace: &FollowTrace, traj: &MemoryTrajectory) -> Result<FollowVerdict, TmError> {
    let mut ratios = Vec::new();
    let mut first_mismatch = None;
    for (n, entry) in traj.entries.iter().enumerate() {
        let Some(cp) = trace.checkpoints.get(n) else {
            first_mismatch = Some(n);
            break;
        };
        let decoded = cp.tapes.iter().map(|w| atoi(w)).collect::<Result<Vec<u32>, _>>();
        if decoded.as_ref().ok() != Some(&entry.state) {
            first_mismatch = Some(n);
            break;
        }
        if n >= 1 {
            ratios.push(cp.step as f64 / entry.time);
        }
    }
    let c = ratios.iter().copied().fold(0.0, f64::max);
    Ok(FollowVerdict { pass: first_mismatch.is_none() && c.is_finite(), c, ratios, first_mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(pairs: &[(&[u32], &[u32])]) -> BTreeMap<Vec<u32>, Vec<u32>> {
        pairs.iter().map(|(a, b)| (a.to_vec(), b.to_vec())).collect()
    }

    #[test]
    fn itoa_examples() {
        assert_eq!(itoa(5), "101");
        assert_eq!(itoa(0), "0");
        assert_eq!(itoa(1), "1");
        assert_eq!(atoi("101").unwrap(), 5);
        assert!(atoi("011").is_err());
        assert!(atoi("").is_err());
        assert!(atoi("1_").is_err());
    }

    #[test]
    fn swap_machine_cycles() {
        let names = vec!["A".to_string(), "B".to_string()];
        let tm = generate_tm(&names, &table(&[(&[1, 0], &[0, 1]), (&[0, 1], &[1, 0])])).unwrap();
        assert_eq!(tm.entry.len(), 2);
        assert_eq!(tm.width, 1);
        let trace = run_tm(&tm, &[1, 0], steps_for_checkpoints(&tm, 4)).unwrap();
        assert!(!trace.halted);
        let steps: Vec<u64> = trace.checkpoints.iter().map(|c| c.step).collect();
        assert_eq!(steps, vec![0, 2, 4, 6, 8]);
        let a: Vec<&str> = trace.checkpoints.iter().map(|c| c.tapes[0].as_str()).collect();
        assert_eq!(a, vec!["1", "0", "1", "0", "1"]);
        assert!(matches!(run_tm(&tm, &[1, 0], 3), Err(TmError::StepBudget { .. })));
    }

    #[test]
    fn identity_halts_immediately() {
        let tm = generate_tm(&["X".to_string()], &table(&[(&[3], &[3])])).unwrap();
        let trace = run_tm(&tm, &[3], 100).unwrap();
        assert!(trace.halted);
        assert_eq!(trace.checkpoints.len(), 1);
        assert_eq!(trace.checkpoints[0].tapes, vec!["11"]);
    }

    #[test]
    fn writes_then_halts() {
        let tm = generate_tm(&["X".to_string()], &table(&[(&[0], &[1]), (&[1], &[1])])).unwrap();
        let trace = run_tm(&tm, &[0], 100).unwrap();
        assert!(trace.halted);
        assert_eq!(trace.checkpoints.iter().map(|c| (c.step, c.tapes[0].clone())).collect::<Vec<_>>(), vec![(0, "0".into()), (2, "1".into())]);
    }

    #[test]
    fn longer_words_are_cleared() {
        // 5 = "101" shrinks to 2 = "10", then to 0
        let tm = generate_tm(&["X".to_string()], &table(&[(&[5], &[2]), (&[2], &[0]), (&[0], &[0])])).unwrap();
        assert_eq!(tm.width, 3);
        let trace = run_tm(&tm, &[5], 1000).unwrap();
        let words: Vec<&str> = trace.checkpoints.iter().map(|c| c.tapes[0].as_str()).collect();
        assert_eq!(words, vec!["101", "10", "0"]);
        assert_eq!(trace.final_cells[0].trim_end_matches('_'), "0");
        assert_eq!(trace.checkpoints[2].step, 12);
    }

    #[test]
    fn missing_entry() {
        let err = generate_tm(&["X".to_string()], &table(&[(&[0], &[1])])).unwrap_err();
        assert_eq!(err, TmError::MissingEntry(vec![1]));
    }
}
