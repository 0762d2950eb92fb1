//! Fixed points, stability and decay rates of a few small networks.

use crnmem::analysis::{find_fixed_points, fit_decay, FixedPointOptions, Stability};
use crnmem::crn::{derive_field, parse_network};

fn main() {
    let cases = [
        ("sqrt2", "0 -> X : 2\n2X -> X : 1"),
        ("logistic", "X -> 2X : 1\n2X -> X : 1"),
        ("bistable", "X -> 0 : 1\n2X -> 3X : 3\n3X -> 2X : 2"),
    ];
    for (name, text) in cases {
        let field = derive_field(&parse_network(text).unwrap());
        println!("{name}:");
        for p in find_fixed_points(&field, &[(0.0, 2.0)], &FixedPointOptions::default()) {
            print!(
                "  x* = {:.12}  abscissa = {:+.6}  {:?}  {:?}",
                p.point[0], p.jacobian_spectral_abscissa, p.classification, p.isolation
            );
            if p.classification == Stability::ExpStable {
                let fit = fit_decay(&field, &p.point, 0.01, 8, 8.0 / p.jacobian_spectral_abscissa.abs());
                print!("  fitted decay = {:+.4}", fit.exponent);
            }
            println!();
        }
    }
}
