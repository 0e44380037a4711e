//! Seeded random instances for property checks and verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounded_ops::AdjointableOp;
use crate::linalg::{c64, ComplexMatrix, C64};
use crate::module_space::{CompactElement, ModuleVector};
use crate::symbol::Weights;
use crate::tower::{Generator, OperatorTower, RankOneEntry};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_scalar<R: Rng>(rng: &mut R) -> C64 {
    c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Entries uniform in the unit square of the complex plane.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_scalar(rng))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    &a * a.adjoint()
}

/// Random matrix of the given rank (product of random n×r and r×m factors).
pub fn random_rank_deficient<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    rank: usize,
) -> ComplexMatrix {
    random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols)
}

pub fn random_vector<R: Rng>(rng: &mut R, d: usize, m: usize) -> ModuleVector {
    ModuleVector::new(random_matrix(rng, d, m)).expect("finite random entries")
}

pub fn random_element<R: Rng>(rng: &mut R, d: usize) -> CompactElement {
    CompactElement::new(random_matrix(rng, d, d)).expect("square random matrix")
}

pub fn random_op<R: Rng>(rng: &mut R, d: usize, m: usize) -> AdjointableOp {
    AdjointableOp::new(d, random_matrix(rng, m, m)).expect("square multiplier")
}

/// Random rank-one projection `u·u*` in dimension `d`.
pub fn random_minimal_projection<R: Rng>(rng: &mut R, d: usize) -> CompactElement {
    let u = random_matrix(rng, d, 1);
    let u = u.scale(1.0 / u.norm());
    CompactElement::new(&u * u.adjoint()).expect("square projection")
}

fn random_list<R: Rng>(rng: &mut R) -> Weights {
    let len = rng.random_range(1..=5);
    Weights::List((0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Random generator with bounded coefficients: a sum of short-step
/// weighted shifts, a diagonal and a finite-rank block, occasionally
/// multiplied by a second such sum.
pub fn random_bounded_generator<R: Rng>(rng: &mut R) -> Generator {
    let sum = |rng: &mut R| {
        let mut terms = vec![Generator::Diagonal {
            values: random_list(rng),
        }];
        for _ in 0..rng.random_range(1..=2) {
            let step = rng.random_range(-2i64..=2);
            terms.push(Generator::WeightedShift {
                step,
                weights: random_list(rng),
            });
        }
        let entries = (0..rng.random_range(0..=3))
            .map(|_| {
                let z = random_scalar(rng);
                RankOneEntry {
                    row: rng.random_range(0..4),
                    col: rng.random_range(0..4),
                    re: z.re,
                    im: z.im,
                }
            })
            .collect();
        terms.push(Generator::FiniteRank { entries });
        Generator::Sum { terms }
    };
    let first = sum(rng);
    if rng.random_bool(0.25) {
        let second = sum(rng);
        Generator::Product {
            terms: vec![first, second],
        }
    } else {
        first
    }
}

pub fn random_bounded_tower<R: Rng>(rng: &mut R, d: usize, levels: &[usize]) -> OperatorTower {
    OperatorTower::new(d, random_bounded_generator(rng), levels.to_vec()).expect("finite random tower")
}
