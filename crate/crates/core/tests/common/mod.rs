#![allow(dead_code)]

use crnmem::crn::{parse_network, ReactionNetwork, State};
use crnmem::integrator::{integrate, IntegratorConfig, MassActionSystem, Solution};
use crnmem::memory::{MemoryInterval, MemoryMap, MemoryMaps, Rational};

pub const SQRT2: &str = "0 -> X : 2\n2X -> X : 1";
pub const BISTABLE: &str = "X -> 0 : 1\n2X -> 3X : 3\n3X -> 2X : 2";

pub fn r(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

pub fn solve(text: &str, x0: &[f64], t_end: f64) -> (ReactionNetwork, Solution) {
    let net = parse_network(text).unwrap();
    let sys = MassActionSystem::from_network(&net);
    let sol = integrate(&sys, &State::new(0.0, x0.to_vec()), t_end, &IntegratorConfig::default()).unwrap();
    (net, sol)
}

/// `states` lists `(id, lo, hi)`; id 0 is closed at 0, the rest are open.
pub fn map(c: Rational, states: &[(u32, Rational, Rational)]) -> MemoryMap {
    MemoryMap::new(
        c,
        states.iter().map(|&(id, lo, hi)| MemoryInterval { id, lo, hi, lo_closed: id == 0 }).collect(),
    )
    .unwrap()
}

pub fn single(net: &ReactionNetwork, name: &str, m: MemoryMap) -> MemoryMaps {
    MemoryMaps::new(vec![(net.species_index(name).unwrap(), name.to_string(), m)]).unwrap()
}

pub fn sqrt2_map() -> MemoryMap {
    map(r(2, 1), &[(0, r(0, 1), r(1, 2)), (1, r(3, 4), r(15, 8))])
}

pub fn bistable_map() -> MemoryMap {
    map(r(3, 2), &[(0, r(0, 1), r(1, 8)), (1, r(1, 4), r(3, 4)), (2, r(7, 8), r(9, 8))])
}
