//! Low-discrepancy point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    out
}

/// Halton points in the unit cube, optionally with a random Cranley-Patterson shift.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    shift: Vec<f64>,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
        Self { dim, shift: vec![0.0; dim], next: 1 }
    }

    pub fn shifted(dim: usize, seed: u64) -> Self {
        let mut h = Self::new(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        h.shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        h
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        (0..self.dim).map(|k| (radical_inverse(index, PRIMES[k]) + self.shift[k]).fract()).collect()
    }

    /// A point scaled into the box `[lo_k, hi_k]`.
    pub fn next_in(&mut self, bounds: &[(f64, f64)]) -> Vec<f64> {
        let p = self.point(self.next);
        self.next += 1;
        p.iter().zip(bounds).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect()
    }
}
