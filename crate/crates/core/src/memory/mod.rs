//! Memory maps, enter/leave events, state times and memory trajectories.

mod map;
mod trajectory;

pub use map::{bracket, to_f64, MemoryId, MemoryInterval, MemoryMap, MemoryMaps, Rational};
pub use trajectory::{
    check_rate_bound, entry_times, extract_events, extract_trajectory, extract_trajectory_with, next_transition,
    state_time, visits, EntryTimes, MemoryTrajectory, RateBoundVerdict, StateTime, TrajectoryEntry,
    TrajectoryOptions, TransitionEvent, TransitionKind, Visit,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("invalid memory map: {0}")]
    InvalidMap(String),
    #[error("value {value} outside [0, {c}]")]
    OutOfRange { value: f64, c: f64 },
    #[error("memory map names unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("species {species} reaches {max}, beyond its memory map cap c = {c}")]
    ExceedsCap { species: String, max: f64, c: f64 },
    #[error("species {species} starts at {value}, which is in no memory state")]
    InitialResidual { species: String, value: f64 },
    #[error("delay must be positive, got {0}")]
    BadDelay(f64),
}

/// Memory state of every mapped species at concentration vector `x`.
pub fn memory_state_of(maps: &MemoryMaps, x: &[f64]) -> Result<Vec<MemoryId>, MemoryError> {
    maps.iter().map(|(i, _, m)| m.inverse_lookup(x[i])).collect()
}
