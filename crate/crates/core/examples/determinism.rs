//! Sampling memory states to recover the transition table, or a conflict.

use crnmem::crn::parse_network;
use crnmem::determinism::{extract_delta, DeltaConfig, DeltaOutcome};
use crnmem::memory::{MemoryInterval, MemoryMap, MemoryMaps, Rational};

fn map(c: (i64, i64), states: &[(u32, (i64, i64), (i64, i64))]) -> MemoryMap {
    let r = |(p, q)| Rational::new(p, q);
    let states = states.iter().map(|&(id, lo, hi)| MemoryInterval { id, lo: r(lo), hi: r(hi), lo_closed: id == 0 });
    MemoryMap::new(r(c), states.collect()).unwrap()
}

fn report(name: &str, out: &DeltaOutcome) {
    match out {
        DeltaOutcome::Deterministic(t) => {
            for (m, next) in &t.entries {
                println!("{name}: delta({m:?}) = {next:?}");
            }
        }
        DeltaOutcome::Conflict { conflicts, .. } => {
            for c in conflicts {
                println!(
                    "{name}: state {:?} goes to {:?} from {:?} but to {:?} from {:?}",
                    c.state, c.successors.0, c.witnesses.0, c.successors.1, c.witnesses.1
                );
            }
        }
    }
}

fn main() {
    let net = parse_network("0 -> X : 2\n2X -> X : 1").unwrap();
    let maps = MemoryMaps::new(vec![(0, "X".into(), map((2, 1), &[(0, (0, 1), (1, 2)), (1, (3, 4), (15, 8))]))]).unwrap();
    let out = extract_delta(&net, &maps, &[vec![0], vec![1]], &DeltaConfig::new(1.0, 25, 20.0)).unwrap();
    report("sqrt2", &out);

    let net = parse_network("X -> 0 : 1\n2X -> 3X : 3\n3X -> 2X : 2").unwrap();
    let m = map((3, 2), &[(0, (0, 1), (1, 8)), (1, (1, 4), (3, 4)), (2, (7, 8), (9, 8))]);
    let maps = MemoryMaps::new(vec![(0, "X".into(), m)]).unwrap();
    let out = extract_delta(&net, &maps, &[vec![0], vec![1], vec![2]], &DeltaConfig::new(1.0, 25, 30.0)).unwrap();
    report("bistable", &out);
}
