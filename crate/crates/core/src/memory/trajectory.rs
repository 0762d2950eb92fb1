use std::fmt::Write as _;

use serde_json::{json, Value};

use super::map::{bracket, to_f64, MemoryId, MemoryMaps};
use super::MemoryError;
use crate::crn::State;
use crate::integrator::{detect_events, estimate_bounds, Direction, Solution};

const DEFAULT_EVENT_TIME_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Enter,
    Leave,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TransitionEvent {
    pub species: usize,
    pub state: u32,
    pub kind: TransitionKind,
    pub time: f64,
    /// The enter implied by starting inside a state.
    pub synthetic: bool,
}

/// Enter/leave events of every mapped species, in time order.
///
/// Boundary touches produce nothing, and the residual set is never entered or left.
pub fn extract_events(sol: &Solution, maps: &MemoryMaps) -> Result<Vec<TransitionEvent>, MemoryError> {
    let bounds = estimate_bounds(sol);
    let x0 = sol.initial().concentrations;
    let mut levels = vec![Vec::new(); sol.dim()];
    let mut out = Vec::new();
    for (i, name, map) in maps.iter() {
        let (_, c_up) = bracket(map.c());
        // estimate_bounds inflates by 1e-6; undo it before comparing
        let max = bounds.species_max[i] / (1.0 + 1e-6);
        if max > c_up {
            return Err(MemoryError::ExceedsCap { species: name.to_string(), max, c: to_f64(map.c()) });
        }
        if let MemoryId::State(m) = map.inverse_lookup(x0[i].min(c_up))? {
            out.push(TransitionEvent { species: i, state: m, kind: TransitionKind::Enter, time: 0.0, synthetic: true });
        }
        levels[i] = map.boundaries().iter().map(|&b| to_f64(b)).collect();
    }
    for ev in detect_events(sol, &levels, DEFAULT_EVENT_TIME_TOL) {
        let upward = match ev.direction {
            Direction::Upward => true,
            Direction::Downward => false,
            Direction::Grazing => continue,
        };
        let map = maps.map_for(ev.species).expect("levels only for mapped species");
        let b = map
            .boundaries()
            .into_iter()
            .find(|&b| to_f64(b) == ev.boundary)
            .expect("event on a map boundary");
        if let MemoryId::State(m) = map.region_beside(b, !upward) {
            out.push(TransitionEvent { species: ev.species, state: m, kind: TransitionKind::Leave, time: ev.time, synthetic: false });
        }
        if let MemoryId::State(m) = map.region_beside(b, upward) {
            out.push(TransitionEvent { species: ev.species, state: m, kind: TransitionKind::Enter, time: ev.time, synthetic: false });
        }
    }
    // stable: keeps leave before enter at a shared crossing
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.species.cmp(&b.species)));
    Ok(out)
}

/// One stay of a species inside a memory state.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Visit {
    pub species: usize,
    pub state: u32,
    pub enter: f64,
    /// `None` when the species is still inside at the horizon.
    pub leave: Option<f64>,
    pub synthetic: bool,
}

pub fn visits(events: &[TransitionEvent], species: usize) -> Vec<Visit> {
    let mut out: Vec<Visit> = Vec::new();
    for e in events.iter().filter(|e| e.species == species) {
        match e.kind {
            TransitionKind::Enter => out.push(Visit {
                species,
                state: e.state,
                enter: e.time,
                leave: None,
                synthetic: e.synthetic,
            }),
            TransitionKind::Leave => {
                if let Some(v) = out.last_mut().filter(|v| v.leave.is_none() && v.state == e.state) {
                    v.leave = Some(e.time);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateTime {
    Finite(f64),
    /// Never left before the horizon; the value is a lower bound.
    Unbounded { lower_bound: f64 },
}

impl StateTime {
    pub fn at_least(&self, d: f64) -> bool {
        match *self {
            StateTime::Finite(t) => t >= d,
            StateTime::Unbounded { lower_bound } => lower_bound >= d,
        }
    }

    pub fn to_json(&self) -> Value {
        match *self {
            StateTime::Finite(t) => json!(t),
            StateTime::Unbounded { lower_bound } => json!({ "inf": true, "lower_bound": lower_bound }),
        }
    }
}

pub fn state_time(visit: &Visit, horizon: f64) -> StateTime {
    match visit.leave {
        Some(t) => StateTime::Finite(t - visit.enter),
        None => StateTime::Unbounded { lower_bound: horizon - visit.enter },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntryTimes {
    pub times: Vec<f64>,
    /// Some visit was cut by the horizon before reaching `d`.
    pub truncated: bool,
}

/// `T(X)`: enter times of visits lasting at least `d`, always including 0.
pub fn entry_times(visits: &[Visit], d: f64, horizon: f64) -> EntryTimes {
    let mut times = vec![0.0];
    let mut truncated = false;
    for v in visits {
        let st = state_time(v, horizon);
        if st.at_least(d) {
            if v.enter > 0.0 {
                times.push(v.enter);
            }
        } else if matches!(st, StateTime::Unbounded { .. }) {
            truncated = true;
        }
    }
    EntryTimes { times, truncated }
}

/// Least time in any of the sets strictly after `t`; `None` marks the end.
pub fn next_transition(sets: &[Vec<f64>], t: f64) -> Option<f64> {
    sets.iter().flatten().copied().filter(|&s| s > t).min_by(f64::total_cmp)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TrajectoryEntry {
    pub step: usize,
    pub time: f64,
    pub state: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryTrajectory {
    /// Mapped species indices; `state` vectors follow this order.
    pub species: Vec<usize>,
    pub names: Vec<String>,
    pub entries: Vec<TrajectoryEntry>,
    pub delay: f64,
    pub x0: State,
    pub horizon: f64,
    pub partial: bool,
    pub warnings: Vec<String>,
    pub visits: Vec<Vec<Visit>>,
}

impl MemoryTrajectory {
    /// A bare trajectory from explicit entries, e.g. for checking a claimed run.
    pub fn from_entries(names: Vec<String>, entries: Vec<(f64, Vec<u32>)>, delay: f64) -> Self {
        let horizon = entries.last().map_or(0.0, |e| e.0);
        Self {
            species: (0..names.len()).collect(),
            names,
            entries: entries
                .into_iter()
                .enumerate()
                .map(|(step, (time, state))| TrajectoryEntry { step, time, state })
                .collect(),
            delay,
            x0: State::zeros(0),
            horizon,
            partial: false,
            warnings: Vec::new(),
            visits: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn states(&self) -> Vec<Vec<u32>> {
        self.entries.iter().map(|e| e.state.clone()).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.time).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,time");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for e in &self.entries {
            write!(s, "{},{:.17e}", e.step, e.time).unwrap();
            for m in &e.state {
                write!(s, ",{m}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json_value(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let state: serde_json::Map<String, Value> =
                    self.names.iter().zip(&e.state).map(|(n, m)| (n.clone(), json!(m))).collect();
                json!({ "step": e.step, "time": e.time, "state": state })
            })
            .collect();
        let visits: serde_json::Map<String, Value> = self
            .names
            .iter()
            .zip(&self.visits)
            .map(|(n, vs)| {
                let list: Vec<Value> = vs
                    .iter()
                    .map(|v| {
                        json!({
                            "state": v.state,
                            "enter": v.enter,
                            "leave": v.leave,
                            "synthetic": v.synthetic,
                            "state_time": state_time(v, self.horizon).to_json(),
                        })
                    })
                    .collect();
                (n.clone(), Value::Array(list))
            })
            .collect();
        json!({
            "species": self.names,
            "delay": self.delay,
            "horizon": self.horizon,
            "partial": self.partial,
            "warnings": self.warnings,
            "entries": entries,
            "visits": visits,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryOptions {
    /// Qualifying enters of different species closer than this form one entry.
    pub merge_window: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { merge_window: 1e-6 }
    }
}

pub fn extract_trajectory(sol: &Solution, maps: &MemoryMaps, d: f64) -> Result<MemoryTrajectory, MemoryError> {
    extract_trajectory_with(sol, maps, d, TrajectoryOptions::default())
}

pub fn extract_trajectory_with(
    sol: &Solution,
    maps: &MemoryMaps,
    d: f64,
    opts: TrajectoryOptions,
) -> Result<MemoryTrajectory, MemoryError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(MemoryError::BadDelay(d));
    }
    let x0 = sol.initial();
    let horizon = sol.t_end();
    let mut initial = Vec::with_capacity(maps.len());
    for (i, name, map) in maps.iter() {
        match map.inverse_lookup(x0.concentrations[i])? {
            MemoryId::State(m) => initial.push(m),
            MemoryId::Residual => {
                return Err(MemoryError::InitialResidual { species: name.to_string(), value: x0.concentrations[i] })
            }
        }
    }
    let events = extract_events(sol, maps)?;
    let mut warnings = Vec::new();
    let mut sets = Vec::new();
    let mut committed: Vec<Vec<(f64, u32)>> = Vec::new();
    let mut all_visits = Vec::new();
    for (slot, (i, name, _)) in maps.iter().enumerate() {
        let vs = visits(&events, i);
        let et = entry_times(&vs, d, horizon);
        if et.truncated {
            warnings.push(format!("{name}: a visit is still unresolved at the horizon t = {horizon}"));
        }
        let mut c = vec![(0.0, initial[slot])];
        c.extend(vs.iter().filter(|v| v.enter > 0.0 && state_time(v, horizon).at_least(d)).map(|v| (v.enter, v.state)));
        committed.push(c);
        sets.push(et.times);
        all_visits.push(vs);
    }
    let last_at = |t: f64| -> Vec<u32> {
        committed
            .iter()
            .map(|c| c.iter().take_while(|(te, _)| *te <= t).last().map_or(0, |(_, m)| *m))
            .collect()
    };
    let mut entries = vec![TrajectoryEntry { step: 0, time: 0.0, state: initial }];
    let mut t = 0.0;
    while let Some(tn) = next_transition(&sets, t) {
        let group_end = sets
            .iter()
            .flatten()
            .copied()
            .filter(|&s| s >= tn && s <= tn + opts.merge_window)
            .fold(tn, f64::max);
        let state = last_at(group_end);
        if state != entries.last().unwrap().state {
            entries.push(TrajectoryEntry { step: entries.len(), time: tn, state });
        }
        t = group_end;
    }
    Ok(MemoryTrajectory {
        species: maps.species(),
        names: maps.names(),
        entries,
        delay: d,
        x0,
        horizon,
        partial: !warnings.is_empty(),
        warnings,
        visits: all_visits,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RateBoundVerdict {
    pub pass: bool,
    pub limit: usize,
    pub max_entries: usize,
    pub worst_window_start: f64,
}

/// Every window `[t, t + d)` may hold at most `2|S|` trajectory entries.
pub fn check_rate_bound(traj: &MemoryTrajectory, num_species: usize, d: f64) -> RateBoundVerdict {
    let times = traj.times();
    let limit = 2 * num_species;
    let mut max_entries = 0;
    let mut worst = 0.0;
    let mut hi = 0;
    for (lo, &t) in times.iter().enumerate() {
        while hi < times.len() && times[hi] < t + d {
            hi += 1;
        }
        if hi - lo > max_entries {
            max_entries = hi - lo;
            worst = t;
        }
    }
    RateBoundVerdict { pass: max_entries <= limit, limit, max_entries, worst_window_start: worst }
}
