//! Truncation towers: banded infinite matrices described by a generator
//! and instantiated at a list of truncation levels.
//!
//! A tower acts on ℓ²-coordinates `(x_0, x_1, …)`; instantiating it at level
//! `N` yields an operator on the `d×N` module. Two kinds of finite pieces are
//! exposed. The *square* compression `P_N t P_N` is the level operator
//! `T_N`. The *domain section* `P_{N+b} t P_N` (with `b` the lower
//! bandwidth) is `t` restricted to vectors supported in the first `N`
//! coordinates, and is exact: no boundary rows are cut off.

use serde::{Deserialize, Serialize};

use crate::bounded_ops::AdjointableOp;
use crate::error::{Error, Result};
use crate::linalg::{c64, max_abs, ComplexMatrix, C64};
use crate::symbol::Weights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneEntry {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn default_step() -> i64 {
    1
}

/// Symbolic description of an infinite banded matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// `(t x)_n = w(n)·x_{n−k}`; negative steps shift backwards.
    WeightedShift {
        #[serde(default = "default_step")]
        step: i64,
        #[serde(default = "Weights::one")]
        weights: Weights,
    },
    /// `(t x)_n = g(n)·x_n`.
    Diagonal { values: Weights },
    /// Explicit finitely supported matrix.
    FiniteRank { entries: Vec<RankOneEntry> },
    Sum { terms: Vec<Generator> },
    /// `terms[0]·terms[1]·…`
    Product { terms: Vec<Generator> },
    /// Takes exactly one term.
    Adjoint { terms: Vec<Generator> },
}

impl Generator {
    pub fn shift(step: i64) -> Self {
        Generator::WeightedShift {
            step,
            weights: Weights::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::WeightedShift { step, weights } => {
                if step.unsigned_abs() > 1 << 20 {
                    return Err(Error::Generator(format!("shift step {step} out of range")));
                }
                weights.validate()
            }
            Generator::Diagonal { values } => values.validate(),
            Generator::FiniteRank { entries } => {
                if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                Ok(())
            }
            Generator::Sum { terms } | Generator::Product { terms } => {
                if terms.is_empty() {
                    return Err(Error::Generator("sum/product needs at least one term".into()));
                }
                terms.iter().try_for_each(Generator::validate)
            }
            Generator::Adjoint { terms } => {
                if terms.len() != 1 {
                    return Err(Error::Generator(format!(
                        "adjoint takes exactly one term, got {}",
                        terms.len()
                    )));
                }
                terms[0].validate()
            }
        }
    }

    /// Largest `i − j` over nonzero entries (0 if none below the diagonal).
    pub fn lower_bandwidth(&self) -> usize {
        match self {
            Generator::WeightedShift { step, .. } => (*step).max(0) as usize,
            Generator::Diagonal { .. } => 0,
            Generator::FiniteRank { entries } => entries
                .iter()
                .map(|e| e.row.saturating_sub(e.col))
                .max()
                .unwrap_or(0),
            Generator::Sum { terms } => terms.iter().map(Self::lower_bandwidth).max().unwrap_or(0),
            Generator::Product { terms } => terms.iter().map(Self::lower_bandwidth).sum(),
            Generator::Adjoint { terms } => terms[0].upper_bandwidth(),
        }
    }

    /// Largest `j − i` over nonzero entries.
    pub fn upper_bandwidth(&self) -> usize {
        match self {
            Generator::WeightedShift { step, .. } => (-*step).max(0) as usize,
            Generator::Diagonal { .. } => 0,
            Generator::FiniteRank { entries } => entries
                .iter()
                .map(|e| e.col.saturating_sub(e.row))
                .max()
                .unwrap_or(0),
            Generator::Sum { terms } => terms.iter().map(Self::upper_bandwidth).max().unwrap_or(0),
            Generator::Product { terms } => terms.iter().map(Self::upper_bandwidth).sum(),
            Generator::Adjoint { terms } => terms[0].lower_bandwidth(),
        }
    }

    /// Entry `(i, j)` of the infinite matrix.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match self {
            Generator::WeightedShift { step, weights } => {
                if i as i64 - j as i64 == *step {
                    c64(weights.at(i), 0.0)
                } else {
                    c64(0.0, 0.0)
                }
            }
            Generator::Diagonal { values } => {
                if i == j {
                    c64(values.at(i), 0.0)
                } else {
                    c64(0.0, 0.0)
                }
            }
            Generator::FiniteRank { entries } => entries
                .iter()
                .filter(|e| e.row == i && e.col == j)
                .map(|e| c64(e.re, e.im))
                .sum(),
            Generator::Sum { terms } => terms.iter().map(|t| t.entry(i, j)).sum(),
            Generator::Product { terms } => product_entry(terms, i, j),
            Generator::Adjoint { terms } => terms[0].entry(j, i).conj(),
        }
    }

    /// Symbolic adjoint. Shifts and real diagonals map to generators of the
    /// same kind; everything else is wrapped.
    pub fn adjoint(&self) -> Generator {
        match self {
            Generator::WeightedShift { step, weights } => Generator::WeightedShift {
                step: -step,
                weights: if weights.is_constant() {
                    weights.clone()
                } else {
                    weights.shifted(*step)
                },
            },
            Generator::Diagonal { .. } => self.clone(),
            Generator::FiniteRank { entries } => Generator::FiniteRank {
                entries: entries
                    .iter()
                    .map(|e| RankOneEntry {
                        row: e.col,
                        col: e.row,
                        re: e.re,
                        im: -e.im,
                    })
                    .collect(),
            },
            Generator::Sum { terms } => Generator::Sum {
                terms: terms.iter().map(Generator::adjoint).collect(),
            },
            Generator::Product { terms } => Generator::Product {
                terms: terms.iter().rev().map(Generator::adjoint).collect(),
            },
            Generator::Adjoint { terms } => terms[0].clone(),
        }
    }

    /// Largest entry magnitude in row/column neighbourhood of index `n`.
    fn magnitude_near(&self, n: usize) -> f64 {
        let lo = self.lower_bandwidth();
        let up = self.upper_bandwidth();
        let mut best = 0.0f64;
        for i in n..=n + lo + up {
            let jmin = i.saturating_sub(lo);
            for j in jmin..=i + up {
                best = best.max(self.entry(i, j).norm());
            }
        }
        best
    }
}

fn product_entry(terms: &[Generator], i: usize, j: usize) -> C64 {
    match terms {
        [] => {
            if i == j {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        }
        [only] => only.entry(i, j),
        [first, rest @ ..] => {
            // (A·B)_{ij} = Σ_k A_{ik} B_{kj}, with k limited by A's band around i
            let lo = first.lower_bandwidth();
            let up = first.upper_bandwidth();
            let kmin = i.saturating_sub(lo);
            let kmax = i + up;
            (kmin..=kmax)
                .map(|k| {
                    let a = first.entry(i, k);
                    if a == c64(0.0, 0.0) {
                        a
                    } else {
                        a * product_entry(rest, k, j)
                    }
                })
                .sum()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorTower {
    pub d: usize,
    pub generator: Generator,
    pub levels: Vec<usize>,
}

/// Level-wise product `T_N·S_N` of square compressions. This is a
/// diagnostic only: the result is generally not the compression of any
/// regular operator.
#[derive(Debug, Clone)]
pub struct LevelwiseComposition {
    pub level: usize,
    pub matrix: ComplexMatrix,
    pub regular_preserving: bool,
}

pub const DEFAULT_BASE_LEVEL: usize = 16;

pub fn default_levels() -> Vec<usize> {
    vec![DEFAULT_BASE_LEVEL, 2 * DEFAULT_BASE_LEVEL]
}

impl OperatorTower {
    pub fn new(d: usize, generator: Generator, levels: Vec<usize>) -> Result<Self> {
        let t = OperatorTower {
            d,
            generator,
            levels,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_default_levels(d: usize, generator: Generator) -> Result<Self> {
        Self::new(d, generator, default_levels())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::DimensionMismatch("tower needs d >= 1".into()));
        }
        if self.levels.is_empty() || self.levels[0] == 0 {
            return Err(Error::DimensionMismatch("levels must be positive".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DimensionMismatch(
                "levels must be strictly increasing".into(),
            ));
        }
        self.generator.validate()?;
        // weights must be finite wherever the sections will read them
        let top = *self.levels.last().unwrap();
        let probe = self.domain_section(2 * top);
        if !crate::linalg::is_finite(&probe) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.generator.entry(i, j)
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.generator.lower_bandwidth()
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.generator.upper_bandwidth()
    }

    /// Top-left `rows × cols` block of the infinite matrix.
    pub fn section(&self, rows: usize, cols: usize) -> ComplexMatrix {
        let lo = self.lower_bandwidth();
        let up = self.upper_bandwidth();
        let mut m = ComplexMatrix::zeros(rows, cols);
        for j in 0..cols {
            let imin = j.saturating_sub(up);
            let imax = (j + lo + 1).min(rows);
            for i in imin..imax {
                m[(i, j)] = self.entry(i, j);
            }
        }
        m
    }

    /// Square compression `P_N t P_N` in coordinate form.
    pub fn square(&self, n: usize) -> ComplexMatrix {
        self.section(n, n)
    }

    /// `t` restricted to the first `n` coordinates: `P_{n+b} t P_n`.
    pub fn domain_section(&self, n: usize) -> ComplexMatrix {
        self.section(n + self.lower_bandwidth(), n)
    }

    /// `T_N` as an operator on the `d×N` module.
    pub fn level_op(&self, n: usize) -> Result<AdjointableOp> {
        AdjointableOp::from_localized(self.d, &self.square(n))
    }

    pub fn instantiate(&self) -> Result<Vec<AdjointableOp>> {
        self.levels.iter().map(|&n| self.level_op(n)).collect()
    }

    pub fn adjoint_tower(&self) -> OperatorTower {
        OperatorTower {
            d: self.d,
            generator: self.generator.adjoint(),
            levels: self.levels.clone(),
        }
    }

    /// Whether the coefficients grow without bound, judged by comparing
    /// entry magnitudes near index 10⁶ and 10¹².
    pub fn unbounded_flag(&self) -> bool {
        let near = self.generator.magnitude_near(1_000_000);
        let far = self.generator.magnitude_near(1_000_000_000_000);
        far.is_infinite() || far > 10.0 * near.max(1.0)
    }

    /// `max |T_N − P_N T_{N'} P_N|` for every pair of levels.
    pub fn consistency_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, &n) in self.levels.iter().enumerate() {
            let small = self.square(n);
            for &big in &self.levels[a + 1..] {
                let comp = self.square(big).view((0, 0), (n, n)).into_owned();
                worst = worst.max(max_abs(&(&small - comp)));
            }
        }
        worst
    }

    pub fn compose_levelwise(&self, other: &OperatorTower, n: usize) -> LevelwiseComposition {
        LevelwiseComposition {
            level: n,
            matrix: self.square(n) * other.square(n),
            regular_preserving: false,
        }
    }
}
