//! Built-in towers with known Fredholm data.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::symbol::{Symbol, Weights};
use crate::tower::{default_levels, Generator, OperatorTower, RankOneEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub fredholm: bool,
    pub ker_dim: Option<usize>,
    pub coker_dim: Option<usize>,
    pub index: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub name: String,
    pub description: String,
    pub generator: Generator,
    pub unbounded: bool,
    pub expected: Expected,
    /// How the expected values are known.
    pub source: String,
}

impl GalleryEntry {
    pub fn tower(&self, d: usize, levels: &[usize]) -> Result<OperatorTower> {
        OperatorTower::new(d, self.generator.clone(), levels.to_vec())
    }

    pub fn default_tower(&self) -> Result<OperatorTower> {
        self.tower(1, &default_levels())
    }
}

fn sym(s: &str) -> Weights {
    Weights::Symbol(Symbol::parse(s).expect("gallery symbols parse"))
}

fn fredholm(ker: usize, coker: usize) -> Expected {
    Expected {
        fredholm: true,
        ker_dim: Some(ker),
        coker_dim: Some(coker),
        index: Some(ker as i64 - coker as i64),
    }
}

fn not_fredholm() -> Expected {
    Expected {
        fredholm: false,
        ker_dim: None,
        coker_dim: None,
        index: None,
    }
}

fn entry(name: &str, description: &str, generator: Generator, unbounded: bool, expected: Expected, source: &str) -> GalleryEntry {
    GalleryEntry {
        name: name.into(),
        description: description.into(),
        generator,
        unbounded,
        expected,
        source: source.into(),
    }
}

const CLOSED_FORM: &str = "closed form: kernel and cokernel read off the matrix";

pub fn gallery() -> Vec<GalleryEntry> {
    let mut out = Vec::new();
    for k in 1..=3 {
        out.push(entry(
            &format!("shift-{k}"),
            &format!("unilateral shift by {k}: e_j -> e_(j+{k})"),
            Generator::shift(k),
            false,
            fredholm(0, k as usize),
            CLOSED_FORM,
        ));
    }
    out.push(entry(
        "backshift-1",
        "backward shift e_j -> e_(j-1), e_0 -> 0",
        Generator::shift(-1),
        false,
        fredholm(1, 0),
        CLOSED_FORM,
    ));
    out.push(entry(
        "adjoint-shift-2",
        "adjoint of the shift by 2",
        Generator::Adjoint {
            terms: vec![Generator::shift(2)],
        },
        false,
        fredholm(2, 0),
        CLOSED_FORM,
    ));
    out.push(entry(
        "shift-1-squared",
        "product of two unit shifts",
        Generator::Product {
            terms: vec![Generator::shift(1), Generator::shift(1)],
        },
        false,
        fredholm(0, 2),
        CLOSED_FORM,
    ));
    out.push(entry(
        "identity",
        "identity operator",
        Generator::Diagonal { values: sym("1") },
        false,
        fredholm(0, 0),
        CLOSED_FORM,
    ));
    out.push(entry(
        "scalar-3",
        "three times the identity",
        Generator::Diagonal { values: sym("3") },
        false,
        fredholm(0, 0),
        CLOSED_FORM,
    ));
    out.push(entry(
        "diagonal-n",
        "unbounded diagonal diag(0, 1, 2, ...)",
        Generator::Diagonal { values: sym("n") },
        true,
        fredholm(1, 1),
        CLOSED_FORM,
    ));
    out.push(entry(
        "diagonal-decay",
        "compact diagonal diag(1/(n+1)); range not closed",
        Generator::Diagonal { values: sym("1/(n+1)") },
        false,
        not_fredholm(),
        "closed form: singular values 1/(n+1) accumulate at 0",
    ));
    out.push(entry(
        "diagonal-zero",
        "zero operator on an infinite-dimensional module",
        Generator::Diagonal { values: sym("0") },
        false,
        not_fredholm(),
        "closed form: kernel is everything",
    ));
    out.push(entry(
        "finite-rank-perturbed-shift",
        "unit shift minus e_1 e_0*: kills e_0, misses e_0 and e_1",
        Generator::Sum {
            terms: vec![
                Generator::shift(1),
                Generator::FiniteRank {
                    entries: vec![RankOneEntry {
                        row: 1,
                        col: 0,
                        re: -1.0,
                        im: 0.0,
                    }],
                },
            ],
        },
        false,
        fredholm(1, 2),
        CLOSED_FORM,
    ));
    out.push(entry(
        "weighted-shift-n",
        "unbounded weighted shift e_j -> (j+1) e_(j+1)",
        Generator::WeightedShift {
            step: 1,
            weights: sym("n"),
        },
        true,
        fredholm(0, 1),
        CLOSED_FORM,
    ));
    out.push(entry(
        "weighted-shift-sqrt",
        "unbounded weighted shift e_j -> sqrt(j+2) e_(j+1)",
        Generator::WeightedShift {
            step: 1,
            weights: sym("sqrt(n+1)"),
        },
        true,
        fredholm(0, 1),
        CLOSED_FORM,
    ));
    out
}

pub fn lookup(name: &str) -> Option<GalleryEntry> {
    gallery().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_unique() {
        let g = gallery();
        assert!(g.len() >= 6);
        let mut names: Vec<_> = g.iter().map(|e| e.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), g.len());
    }

    #[test]
    fn unbounded_flags_match_towers() {
        for e in gallery() {
            assert_eq!(e.default_tower().unwrap().unbounded_flag(), e.unbounded, "{}", e.name);
        }
    }
}
