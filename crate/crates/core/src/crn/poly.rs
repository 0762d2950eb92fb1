//! Sparse multivariate polynomials with integer coefficients.
//!
//! Exponent vectors are stored densely (one entry per species); networks in
//! this crate are small, so a monomial is just a `Vec<u32>` keyed in a
//! `BTreeMap` which also gives a canonical term order for free.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A polynomial in `n` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, i64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging duplicates.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], i64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> i64 {
        self.terms.get(exponents).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, coeff: i64) {
        assert_eq!(exponents.len(), self.nvars, "exponent vector has wrong arity");
        if coeff == 0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Polynomial) {
        for (e, c) in other.terms() {
            self.add_term(e.to_vec(), c);
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in self.terms() {
            let k = e[var];
            if k == 0 {
                continue;
            }
            let mut de = e.to_vec();
            de[var] -= 1;
            out.add_term(de, c * i64::from(k));
        }
        out
    }

    /// Evaluates at `x`. Each monomial is a plain product of integer powers.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (e, c) in self.terms() {
            let mut m = c as f64;
            for (xi, &k) in x.iter().zip(e) {
                if k != 0 {
                    m *= xi.powi(k as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Mass action never drains an absent species: every negative term of
    /// the polynomial for species `i` must contain `x_i`.
    pub fn is_kinetic_for(&self, i: usize) -> bool {
        self.terms().all(|(e, c)| c > 0 || e[i] >= 1)
    }

    /// Renders with the given variable names, highest-degree terms first.
    pub fn display_with(&self, names: &[&str]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut terms: Vec<(&[u32], i64)> = self.terms().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        let mut s = String::new();
        for (idx, (e, c)) in terms.iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    let name = names.get(j).copied().unwrap_or("?");
                    if k == 1 {
                        name.to_string()
                    } else {
                        format!("{name}^{k}")
                    }
                })
                .collect();
            let mag = c.unsigned_abs();
            if idx == 0 {
                if *c < 0 {
                    s.push('-');
                }
            } else {
                s.push_str(if *c < 0 { " - " } else { " + " });
            }
            if mono.is_empty() {
                let _ = write!(s, "{mag}");
            } else {
                if mag != 1 {
                    let _ = write!(s, "{mag}");
                }
                s.push_str(&mono.join("*"));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_keeps_map_sparse() {
        let mut p = Polynomial::from_terms(2, [(vec![1, 1], 3)]);
        p.add_term(vec![1, 1], -3);
        assert!(p.is_zero());
    }

    #[test]
    fn power_rule() {
        // 2 - x^2
        let p = Polynomial::from_terms(1, [(vec![0], 2), (vec![2], -1)]);
        let dp = p.derivative(0);
        assert_eq!(dp, Polynomial::from_terms(1, [(vec![1], -2)]));
        // -3xy, d/dy = -3x
        let q = Polynomial::from_terms(2, [(vec![1, 1], -3)]);
        assert_eq!(q.derivative(1), Polynomial::from_terms(2, [(vec![1, 0], -3)]));
    }

    #[test]
    fn display() {
        let p = Polynomial::from_terms(1, [(vec![0], 2), (vec![2], -1)]);
        assert_eq!(p.display_with(&["x"]), "-x^2 + 2");
        let q = Polynomial::from_terms(2, [(vec![1, 1], -3)]);
        assert_eq!(q.display_with(&["x", "y"]), "-3x*y");
    }
}
