//! Memory maps: disjoint rational intervals of `[0, c]` labelled by naturals.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::MemoryError;
use crate::crn::ReactionNetwork;

pub type Rational = Ratio<i64>;

const MAX_EXACT: i64 = 1 << 53;

/// The label of a memory region: a numbered state or the residual set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemoryId {
    State(u32),
    Residual,
}

impl MemoryId {
    pub fn state(self) -> Option<u32> {
        match self {
            MemoryId::State(n) => Some(n),
            MemoryId::Residual => None,
        }
    }
}

impl fmt::Display for MemoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryId::State(n) => write!(f, "{n}"),
            MemoryId::Residual => write!(f, "inf"),
        }
    }
}

/// The two doubles nearest to a rational; equal when it is exactly representable.
pub fn bracket(r: Rational) -> (f64, f64) {
    let (p, q) = (*r.numer() as f64, *r.denom() as f64);
    let f = p / q;
    // sign of f*q - p is exact under a single rounding
    let s = f.mul_add(q, -p);
    if s > 0.0 {
        (f.next_down(), f)
    } else if s < 0.0 {
        (f, f.next_up())
    } else {
        (f, f)
    }
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryInterval {
    pub id: u32,
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
}

impl MemoryInterval {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    /// Whether `r` lies inside, comparing against the bracketing doubles of each endpoint.
    pub fn contains(&self, r: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        let (_, lo_up) = bracket(self.lo);
        let (hi_dn, _) = bracket(self.hi);
        let above_lo = if self.lo_closed { r >= lo_up } else { r > lo_up };
        above_lo && r < hi_dn
    }

    /// Interior sub-interval with a relative margin trimmed from both ends.
    pub fn sampling_box(&self, margin: f64) -> (f64, f64) {
        let (lo, hi) = (to_f64(self.lo), to_f64(self.hi));
        let w = hi - lo;
        (lo + margin * w, hi - margin * w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryMap {
    c: Rational,
    states: Vec<MemoryInterval>,
}

fn check_exact(r: Rational) -> Result<(), MemoryError> {
    if r.numer().abs() > MAX_EXACT || *r.denom() > MAX_EXACT {
        return Err(MemoryError::InvalidMap(format!("rational {r} has components too large for exact comparison")));
    }
    Ok(())
}

impl MemoryMap {
    pub fn new(c: Rational, mut states: Vec<MemoryInterval>) -> Result<Self, MemoryError> {
        let zero = Rational::from_integer(0);
        check_exact(c)?;
        if c <= zero {
            return Err(MemoryError::InvalidMap(format!("c = {c} must be positive")));
        }
        states.sort_by_key(|s| s.id);
        if states.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(MemoryError::InvalidMap("duplicate state id".into()));
        }
        match states.first() {
            Some(s0) if s0.id == 0 => {
                if s0.lo != zero || !s0.lo_closed || s0.hi <= zero {
                    return Err(MemoryError::InvalidMap("state 0 must be [0, b) with b > 0".into()));
                }
            }
            _ => return Err(MemoryError::InvalidMap("state 0 is required".into())),
        }
        for s in &states {
            check_exact(s.lo)?;
            check_exact(s.hi)?;
            if s.hi > c {
                return Err(MemoryError::InvalidMap(format!("state {} extends beyond c = {c}", s.id)));
            }
            if s.id != 0 && (s.lo_closed || s.lo <= zero || s.lo > s.hi) {
                return Err(MemoryError::InvalidMap(format!(
                    "state {} must be an open interval (a, b) with 0 < a <= b",
                    s.id
                )));
            }
        }
        let mut live: Vec<&MemoryInterval> = states.iter().filter(|s| !s.is_empty()).collect();
        live.sort_by_key(|s| s.lo);
        if live.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(MemoryError::InvalidMap("memory intervals overlap".into()));
        }
        Ok(Self { c, states })
    }

    pub fn c(&self) -> Rational {
        self.c
    }

    pub fn states(&self) -> &[MemoryInterval] {
        &self.states
    }

    pub fn interval(&self, id: u32) -> Option<&MemoryInterval> {
        self.states.iter().find(|s| s.id == id)
    }

    /// Ids of nonempty intervals (the support used for order).
    pub fn support(&self) -> Vec<u32> {
        self.states.iter().filter(|s| !s.is_empty()).map(|s| s.id).collect()
    }

    pub fn order(&self) -> usize {
        self.support().len()
    }

    /// Which region holds `r`; `r` must lie in `[0, c]`.
    pub fn inverse_lookup(&self, r: f64) -> Result<MemoryId, MemoryError> {
        let (_, c_up) = bracket(self.c);
        if !(r >= 0.0 && r <= c_up) {
            return Err(MemoryError::OutOfRange { value: r, c: to_f64(self.c) });
        }
        Ok(self
            .states
            .iter()
            .find(|s| s.contains(r))
            .map_or(MemoryId::Residual, |s| MemoryId::State(s.id)))
    }

    /// Every finite endpoint a trajectory can cross, as exact rationals. The
    /// closed end of state 0 at 0 is excluded: concentrations never go below it.
    pub fn boundaries(&self) -> Vec<Rational> {
        let zero = Rational::from_integer(0);
        let mut b: Vec<Rational> = self
            .states
            .iter()
            .filter(|s| !s.is_empty())
            .flat_map(|s| [s.lo, s.hi])
            .filter(|r| *r > zero)
            .collect();
        b.sort();
        b.dedup();
        b
    }

    /// Region immediately above (`upward`) or below the level `b`.
    pub fn region_beside(&self, b: Rational, upward: bool) -> MemoryId {
        self.states
            .iter()
            .filter(|s| !s.is_empty())
            .find(|s| if upward { s.lo == b || (s.lo < b && b < s.hi) } else { s.hi == b || (s.lo < b && b < s.hi) })
            .map_or(MemoryId::Residual, |s| MemoryId::State(s.id))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct IntervalJson {
    id: u32,
    lo: String,
    hi: String,
    lo_closed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MapJson {
    c: String,
    states: Vec<IntervalJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MapFileJson {
    species: BTreeMap<String, MapJson>,
}

fn parse_rational(s: &str) -> Result<Rational, MemoryError> {
    s.trim().parse::<Rational>().map_err(|_| MemoryError::InvalidMap(format!("`{s}` is not a rational p/q")))
}

impl MapJson {
    fn to_map(&self) -> Result<MemoryMap, MemoryError> {
        let states = self
            .states
            .iter()
            .map(|s| {
                Ok(MemoryInterval { id: s.id, lo: parse_rational(&s.lo)?, hi: parse_rational(&s.hi)?, lo_closed: s.lo_closed })
            })
            .collect::<Result<Vec<_>, MemoryError>>()?;
        MemoryMap::new(parse_rational(&self.c)?, states)
    }

    fn from_map(m: &MemoryMap) -> Self {
        Self {
            c: m.c.to_string(),
            states: m
                .states
                .iter()
                .map(|s| IntervalJson { id: s.id, lo: s.lo.to_string(), hi: s.hi.to_string(), lo_closed: s.lo_closed })
                .collect(),
        }
    }
}

/// Memory maps for a subset of a network's species, ordered by species index.
///
/// Species without a map are not observed by trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryMaps {
    entries: Vec<(usize, String, MemoryMap)>,
}

impl MemoryMaps {
    pub fn new(mut entries: Vec<(usize, String, MemoryMap)>) -> Result<Self, MemoryError> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(MemoryError::InvalidMap("species mapped twice".into()));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, &MemoryMap)> {
        self.entries.iter().map(|(i, n, m)| (*i, n.as_str(), m))
    }

    pub fn species(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.1.clone()).collect()
    }

    pub fn map_for(&self, species: usize) -> Option<&MemoryMap> {
        self.entries.iter().find(|e| e.0 == species).map(|e| &e.2)
    }

    /// Position of a species within the mapped list.
    pub fn slot(&self, species: usize) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == species)
    }

    /// Reads the JSON memory-map file and resolves names against `net`.
    pub fn from_json(text: &str, net: &ReactionNetwork) -> Result<Self, MemoryError> {
        let file: MapFileJson = serde_json::from_str(text).map_err(|e| MemoryError::InvalidMap(e.to_string()))?;
        let mut entries = Vec::new();
        for (name, m) in &file.species {
            let idx = net.species_index(name).ok_or_else(|| MemoryError::UnknownSpecies(name.clone()))?;
            entries.push((idx, name.clone(), m.to_map()?));
        }
        Self::new(entries)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = MapFileJson {
            species: self.entries.iter().map(|(_, n, m)| (n.clone(), MapJson::from_map(m))).collect(),
        };
        serde_json::to_value(file).expect("memory map serializes")
    }
}
