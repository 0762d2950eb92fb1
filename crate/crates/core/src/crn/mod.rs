//! Reaction networks, the `.crn` text format and the mass-action vector field.

mod parse;
mod poly;
mod waveform;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

pub use parse::{parse_network, ParseError};
pub use poly::Polynomial;
pub use waveform::Waveform;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid species name `{0}`")]
    InvalidName(String),
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("unknown species index {0}")]
    UnknownSpecies(usize),
    #[error("rate must be a positive integer, got {0}")]
    NonPositiveRate(i64),
    #[error("reaction has neither reactants nor products")]
    EmptyReaction,
    #[error("driven species `{0}` is produced with net positive change by a reaction")]
    DrivenProduced(String),
    #[error("species `{0}` is driven twice")]
    DrivenTwice(String),
    #[error("{0}")]
    Waveform(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Index plus name of a species within one network.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpeciesId {
    pub index: usize,
    pub name: String,
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A single reaction. Stoichiometries are `(species index, count)` pairs,
/// sorted by index with no repeated indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reaction {
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate: u64,
}

fn normalize_side(side: &[(usize, u32)]) -> Vec<(usize, u32)> {
    let mut m: BTreeMap<usize, u32> = BTreeMap::new();
    for &(i, k) in side {
        if k > 0 {
            *m.entry(i).or_insert(0) += k;
        }
    }
    m.into_iter().collect()
}

impl Reaction {
    pub fn new(reactants: &[(usize, u32)], products: &[(usize, u32)], rate: i64) -> Result<Self, ModelError> {
        if rate < 1 {
            return Err(ModelError::NonPositiveRate(rate));
        }
        let reactants = normalize_side(reactants);
        let products = normalize_side(products);
        if reactants.is_empty() && products.is_empty() {
            return Err(ModelError::EmptyReaction);
        }
        Ok(Self { reactants, products, rate: rate as u64 })
    }

    fn count(side: &[(usize, u32)], i: usize) -> u32 {
        side.iter().find(|(j, _)| *j == i).map_or(0, |(_, k)| *k)
    }

    pub fn reactant_count(&self, i: usize) -> u32 {
        Self::count(&self.reactants, i)
    }

    pub fn product_count(&self, i: usize) -> u32 {
        Self::count(&self.products, i)
    }

    /// Net stoichiometric change of species `i`.
    pub fn net_change(&self, i: usize) -> i64 {
        i64::from(self.product_count(i)) - i64::from(self.reactant_count(i))
    }
}

/// An externally prescribed species.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivenSignal {
    pub species: usize,
    pub waveform: Waveform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    driven: Vec<DrivenSignal>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>, driven: Vec<DrivenSignal>) -> Result<Self, ModelError> {
        for (i, name) in species.iter().enumerate() {
            if !is_valid_name(name) {
                return Err(ModelError::InvalidName(name.clone()));
            }
            if species[..i].contains(name) {
                return Err(ModelError::DuplicateSpecies(name.clone()));
            }
        }
        let n = species.len();
        for r in &reactions {
            for &(i, _) in r.reactants.iter().chain(&r.products) {
                if i >= n {
                    return Err(ModelError::UnknownSpecies(i));
                }
            }
        }
        let mut seen = vec![false; n];
        for d in &driven {
            if d.species >= n {
                return Err(ModelError::UnknownSpecies(d.species));
            }
            if seen[d.species] {
                return Err(ModelError::DrivenTwice(species[d.species].clone()));
            }
            seen[d.species] = true;
            if reactions.iter().any(|r| r.net_change(d.species) > 0) {
                return Err(ModelError::DrivenProduced(species[d.species].clone()));
            }
        }
        Ok(Self { species, reactions, driven })
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn species_names(&self) -> &[String] {
        &self.species
    }

    pub fn species(&self) -> Vec<SpeciesId> {
        self.species
            .iter()
            .enumerate()
            .map(|(index, name)| SpeciesId { index, name: name.clone() })
            .collect()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn driven(&self) -> &[DrivenSignal] {
        &self.driven
    }

    pub fn is_driven(&self, i: usize) -> bool {
        self.driven.iter().any(|d| d.species == i)
    }

    /// Renders the network in `.crn` syntax; `parse_network` reads it back.
    pub fn to_crn_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &[(usize, u32)]| -> String {
            if s.is_empty() {
                return "0".to_string();
            }
            s.iter()
                .map(|&(i, k)| if k == 1 { self.species[i].clone() } else { format!("{k}{}", self.species[i]) })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        for d in &self.driven {
            write!(f, "driven {}:", self.species[d.species])?;
            for &(t, v) in d.waveform.points() {
                write!(f, " ({t:?},{v:?})")?;
            }
            writeln!(f)?;
        }
        for r in &self.reactions {
            writeln!(f, "{} -> {} : {}", side(&r.reactants), side(&r.products), r.rate)?;
        }
        Ok(())
    }
}

/// Time plus one concentration per species.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub time: f64,
    pub concentrations: Vec<f64>,
}

impl State {
    pub fn new(time: f64, concentrations: Vec<f64>) -> Self {
        Self { time, concentrations }
    }

    pub fn zeros(n: usize) -> Self {
        Self { time: 0.0, concentrations: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.concentrations.len()
    }
}

/// One integer polynomial per species: `dx_i/dt = f_i(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialField {
    polys: Vec<Polynomial>,
}

impl PolynomialField {
    pub fn new(polys: Vec<Polynomial>) -> Self {
        Self { polys }
    }

    pub fn dim(&self) -> usize {
        self.polys.len()
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.polys[i]
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn is_kinetic(&self) -> bool {
        self.polys.iter().enumerate().all(|(i, p)| p.is_kinetic_for(i))
    }

    /// Evaluates into `out` without dimension checks.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.polys) {
            *o = p.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::Dimension { expected: self.dim(), got: x.len() });
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        Ok(out)
    }
}

/// Mass-action field of a network. Driven species get the zero polynomial;
/// they still appear as factors in the monomials of the others.
pub fn derive_field(net: &ReactionNetwork) -> PolynomialField {
    derive_field_from(net.num_species(), net.reactions(), |i| net.is_driven(i))
}

fn derive_field_from(n: usize, reactions: &[Reaction], driven: impl Fn(usize) -> bool) -> PolynomialField {
    let mut polys = vec![Polynomial::zero(n); n];
    for r in reactions {
        let mut mono = vec![0u32; n];
        for &(j, k) in &r.reactants {
            mono[j] = k;
        }
        for (i, p) in polys.iter_mut().enumerate() {
            if driven(i) {
                continue;
            }
            let net = r.net_change(i);
            if net != 0 {
                p.add_term(mono.clone(), r.rate as i64 * net);
            }
        }
    }
    PolynomialField { polys }
}

/// Field of an arbitrary reaction list over `n` species with nothing driven.
pub fn derive_field_of_reactions(n: usize, reactions: &[Reaction]) -> PolynomialField {
    derive_field_from(n, reactions, |_| false)
}

pub fn eval_field(field: &PolynomialField, state: &State) -> Result<Vec<f64>, ModelError> {
    field.eval(&state.concentrations)
}

/// Symbolic Jacobian: entry `(i, j)` is `∂f_i/∂x_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    entries: Vec<Vec<Polynomial>>,
}

impl Jacobian {
    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i][j]
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Polynomial::is_zero)
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j].eval(x))
    }
}

pub fn derive_jacobian(field: &PolynomialField) -> Jacobian {
    let n = field.dim();
    let entries = field
        .components()
        .iter()
        .map(|p| (0..n).map(|j| p.derivative(j)).collect())
        .collect();
    Jacobian { entries }
}
