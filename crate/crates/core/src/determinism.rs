//! Sampled extraction of the memory transition function and determinism checks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::crn::{ReactionNetwork, State};
use crate::integrator::{integrate, IntegrateError, IntegratorConfig, MassActionSystem};
use crate::memory::{extract_trajectory_with, MemoryError, MemoryMaps, MemoryTrajectory, TrajectoryOptions};
use crate::sampling::Halton;

/// Samples stay this fraction of the interval width away from its endpoints.
pub const SAMPLE_MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeterminismError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("memory state {0:?} has an empty or unknown interval")]
    EmptyBox(Vec<u32>),
    #[error("memory state {0:?} has {1} components, expected {2}")]
    Dimension(Vec<u32>, usize, usize),
    #[error("at least 2 samples per state are required, got {0}")]
    TooFewSamples(usize),
    #[error("memory state {0:?} is not in the table")]
    UnknownState(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct DeltaConfig {
    pub d: f64,
    pub samples_per_state: usize,
    pub horizon: f64,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    pub trajectory: TrajectoryOptions,
    /// Concentrations for unmapped species; zeros when absent.
    pub x0_template: Option<Vec<f64>>,
    /// Dual-rail pairs `(a, b)`: after sampling `a`, `b` is set to `1 - a`.
    pub complements: Vec<(usize, usize)>,
}

impl DeltaConfig {
    pub fn new(d: f64, samples_per_state: usize, horizon: f64) -> Self {
        Self {
            d,
            samples_per_state,
            horizon,
            seed: 0,
            integrator: IntegratorConfig::default(),
            trajectory: TrajectoryOptions::default(),
            x0_template: None,
            complements: Vec::new(),
        }
    }
}

/// Two samples from one state whose memory sequences first differ at `step`.
#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub step: usize,
    pub witnesses: (Vec<f64>, Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evidence {
    pub samples: usize,
    /// Samples whose trajectory never left the state before the horizon.
    pub no_successor: usize,
    pub witnesses: Vec<Vec<f64>>,
    /// Disagreement beyond the first successor, for diagnostics only.
    pub later_divergence: Option<Divergence>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaTable {
    pub species: Vec<String>,
    pub entries: BTreeMap<Vec<u32>, Vec<u32>>,
    pub evidence: BTreeMap<Vec<u32>, Evidence>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conflict {
    pub state: Vec<u32>,
    pub successors: (Vec<u32>, Vec<u32>),
    pub witnesses: (Vec<f64>, Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeltaOutcome {
    /// Every sample agreed; evidence, not proof.
    Deterministic(DeltaTable),
    Conflict { species: Vec<String>, conflicts: Vec<Conflict> },
}

impl DeltaOutcome {
    pub fn table(&self) -> Option<&DeltaTable> {
        match self {
            DeltaOutcome::Deterministic(t) => Some(t),
            DeltaOutcome::Conflict { .. } => None,
        }
    }

    pub fn to_json_value(&self) -> Value {
        match self {
            DeltaOutcome::Deterministic(t) => t.to_json_value(),
            DeltaOutcome::Conflict { species, conflicts } => json!({
                "verdict": "conflict",
                "species": species,
                "conflicts": conflicts.iter().map(|c| json!({
                    "state": c.state,
                    "step": 1,
                    "successors": [c.successors.0, c.successors.1],
                    "witnesses": [c.witnesses.0, c.witnesses.1],
                })).collect::<Vec<_>>(),
            }),
        }
    }
}

impl DeltaTable {
    pub fn get(&self, state: &[u32]) -> Option<&Vec<u32>> {
        self.entries.get(state)
    }

    pub fn to_json_value(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(m, next)| {
                let ev = &self.evidence[m];
                json!({
                    "state": m,
                    "next": next,
                    "samples": ev.samples,
                    "no_successor": ev.no_successor,
                    "witnesses": ev.witnesses,
                    "later_divergence": ev.later_divergence.as_ref().map(|d| json!({
                        "step": d.step,
                        "witnesses": [d.witnesses.0, d.witnesses.1],
                    })),
                })
            })
            .collect();
        json!({ "verdict": "sampled-deterministic", "species": self.species, "entries": entries })
    }
}

fn sample_points(
    net: &ReactionNetwork,
    maps: &MemoryMaps,
    state: &[u32],
    cfg: &DeltaConfig,
) -> Result<Vec<Vec<f64>>, DeterminismError> {
    // salted by the state itself so the listing order does not matter
    let salt = state.iter().fold(0u64, |h, &v| h.wrapping_mul(1_000_003).wrapping_add(v as u64 + 1));
    if state.len() != maps.len() {
        return Err(DeterminismError::Dimension(state.to_vec(), state.len(), maps.len()));
    }
    let mut bounds = Vec::with_capacity(state.len());
    for ((_, _, map), &m) in maps.iter().zip(state) {
        let iv = map.interval(m).filter(|iv| !iv.is_empty()).ok_or_else(|| DeterminismError::EmptyBox(state.to_vec()))?;
        bounds.push(iv.sampling_box(SAMPLE_MARGIN));
    }
    let template = cfg.x0_template.clone().unwrap_or_else(|| vec![0.0; net.num_species()]);
    let mut halton = Halton::shifted(bounds.len(), cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt));
    Ok((0..cfg.samples_per_state)
        .map(|_| {
            let p = halton.next_in(&bounds);
            let mut x = template.clone();
            for ((i, _, _), v) in maps.iter().zip(p) {
                x[i] = v;
            }
            for &(a, b) in &cfg.complements {
                x[b] = (1.0 - x[a]).max(0.0);
            }
            x
        })
        .collect())
}

/// Memory-state sequence of one run.
pub fn run_trajectory(
    net: &ReactionNetwork,
    maps: &MemoryMaps,
    x0: &[f64],
    cfg: &DeltaConfig,
) -> Result<MemoryTrajectory, DeterminismError> {
    let sys = MassActionSystem::from_network(net);
    let sol = integrate(&sys, &State::new(0.0, x0.to_vec()), cfg.horizon, &cfg.integrator)?;
    Ok(extract_trajectory_with(&sol, maps, cfg.d, cfg.trajectory)?)
}

/// Samples each listed memory state, simulates, and records first successors.
pub fn extract_delta(
    net: &ReactionNetwork,
    maps: &MemoryMaps,
    states: &[Vec<u32>],
    cfg: &DeltaConfig,
) -> Result<DeltaOutcome, DeterminismError> {
    if cfg.samples_per_state < 2 {
        return Err(DeterminismError::TooFewSamples(cfg.samples_per_state));
    }
    let mut jobs = Vec::new();
    for (k, m) in states.iter().enumerate() {
        for x in sample_points(net, maps, m, cfg)? {
            jobs.push((k, x));
        }
    }
    let runs: Vec<(usize, Vec<f64>, Vec<Vec<u32>>)> = jobs
        .into_par_iter()
        .map(|(k, x)| run_trajectory(net, maps, &x, cfg).map(|t| (k, x, t.states())))
        .collect::<Result<_, _>>()?;

    let mut entries = BTreeMap::new();
    let mut evidence = BTreeMap::new();
    let mut conflicts = Vec::new();
    for (k, m) in states.iter().enumerate() {
        let group: Vec<&(usize, Vec<f64>, Vec<Vec<u32>>)> = runs.iter().filter(|r| r.0 == k).collect();
        let next = |seq: &[Vec<u32>]| seq.get(1).cloned().unwrap_or_else(|| m.clone());
        let first = group[0];
        let expected = next(&first.2);
        if let Some(other) = group.iter().find(|r| next(&r.2) != expected) {
            conflicts.push(Conflict {
                state: m.clone(),
                successors: (expected, next(&other.2)),
                witnesses: (first.1.clone(), other.1.clone()),
            });
            continue;
        }
        let later_divergence = group.iter().find_map(|r| {
            let step = first.2.iter().zip(&r.2).position(|(a, b)| a != b).or_else(|| {
                (first.2.len() != r.2.len()).then(|| first.2.len().min(r.2.len()))
            })?;
            Some(Divergence { step, witnesses: (first.1.clone(), r.1.clone()) })
        });
        evidence.insert(
            m.clone(),
            Evidence {
                samples: group.len(),
                no_successor: group.iter().filter(|r| r.2.len() < 2).count(),
                witnesses: group.iter().take(2).map(|r| r.1.clone()).collect(),
                later_divergence,
            },
        );
        entries.insert(m.clone(), expected);
    }
    if conflicts.is_empty() {
        Ok(DeltaOutcome::Deterministic(DeltaTable { species: maps.names(), entries, evidence }))
    } else {
        Ok(DeltaOutcome::Conflict { species: maps.names(), conflicts })
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DeltaVerdict {
    pub pass: bool,
    /// `(step, expected, observed)` at the first disagreement.
    pub first_mismatch: Option<(usize, Vec<u32>, Vec<u32>)>,
}

/// Every consecutive pair `(m, m')` of the trajectory must satisfy `m' = δ(m)`.
pub fn verify_delta(table: &DeltaTable, traj: &MemoryTrajectory) -> Result<DeltaVerdict, DeterminismError> {
    for (k, w) in traj.entries.windows(2).enumerate() {
        let expected = table.get(&w[0].state).ok_or_else(|| DeterminismError::UnknownState(w[0].state.clone()))?;
        if *expected != w[1].state {
            return Ok(DeltaVerdict { pass: false, first_mismatch: Some((k + 1, expected.clone(), w[1].state.clone())) });
        }
    }
    Ok(DeltaVerdict { pass: true, first_mismatch: None })
}
