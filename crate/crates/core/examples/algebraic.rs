//! Integer polynomial recovery and the dense dyadic encoding.

#![allow(clippy::approx_constant)]

use crnmem::analysis::{dense_encode, minpoly_probe};

fn main() {
    for v in [1.41421356237, 1.6180339887, 0.5, 1.2599210498948732, std::f64::consts::PI] {
        match minpoly_probe(v, 3, 10) {
            Some(p) => println!("{v}: {p}"),
            None => println!("{v}: nothing up to degree 3"),
        }
    }

    let f: Vec<f64> = (0..8).map(dense_encode).collect();
    println!("f(0..8) = {f:?}");
    let (n, gap) = (0..1u64 << 16)
        .map(|n| (n, (dense_encode(n) - 1.0 / 3.0).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    println!("closest to 1/3 below 2^16: f({n}) is {gap:.3e} away");
}
