//! Regular (possibly unbounded) operators given as truncation towers:
//! regularity, the bounded transform `F_t = t(1+t*t)^{-1/2}` and its
//! inverse, kernel/range identities, and level-wise pseudo-inverses.

use serde::{Deserialize, Serialize};

use crate::bounded_ops::AdjointableOp;
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, ComplexMatrix};
use crate::tower::OperatorTower;

/// Eigenvalues of `1 − F*F` at or below this are treated as singular by
/// [`inverse_transform`]: the inverse square root would amplify rounding
/// in `F` by more than `1e8`.
pub const DEFAULT_DEFECT_TOL: f64 = 1e-8;

/// Levels at which the unbounded-path transform is evaluated, relative to the
/// level whose columns are kept.
pub const TRANSFORM_OVERSAMPLE: usize = 2;

/// `(F, Q)` with `Q = (1 + A*A)^{-1/2}` and `F = A·Q`, for any rectangular `A`.
pub fn transform_matrix(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let q = linalg::inv_sqrt_one_plus(&(a.adjoint() * a))?;
    Ok((a * &q, q))
}

/// Bounded transform of a single adjointable operator.
pub fn transform_op(t: &AdjointableOp) -> Result<(AdjointableOp, AdjointableOp)> {
    let (f, q) = transform_matrix(&t.localized())?;
    Ok((
        AdjointableOp::from_localized(t.dim_h(), &f)?,
        AdjointableOp::from_localized(t.dim_h(), &q)?,
    ))
}

/// `F_t` evaluated on the first `n` coordinates, computed from the exact
/// restriction of `t` to `TRANSFORM_OVERSAMPLE·n` coordinates. Rows cover the
/// full image of that restriction.
pub fn transform_columns(t: &OperatorTower, n: usize) -> Result<ComplexMatrix> {
    let big = TRANSFORM_OVERSAMPLE * n;
    let (f, _) = transform_matrix(&t.domain_section(big))?;
    Ok(f.columns(0, n).into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityLevel {
    pub level: usize,
    /// Smallest eigenvalue of `1 + T*T` on the first `level` coordinates.
    pub min_eig: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub levels: Vec<RegularityLevel>,
    /// Every finitely supported vector lies in the domain of every level.
    pub dense_domain: bool,
    pub regular: bool,
}

pub fn check_regularity(t: &OperatorTower, tol: f64) -> Result<RegularityReport> {
    let mut levels = Vec::new();
    for &n in &t.levels {
        let b = t.domain_section(n);
        let m = linalg::identity(n) + b.adjoint() * &b;
        let min_eig = linalg::hermitian_eig(&m)?.eigenvalues[0];
        levels.push(RegularityLevel {
            level: n,
            min_eig,
            ok: min_eig >= 1.0 - tol,
        });
    }
    let regular = levels.iter().all(|l| l.ok);
    Ok(RegularityReport {
        levels,
        dense_domain: true,
        regular,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformLevel {
    pub level: usize,
    pub f: AdjointableOp,
    pub q: AdjointableOp,
    /// `1 − F*F`
    pub defect: AdjointableOp,
    pub norm_f: f64,
    /// `‖Q² − (1 − F*F)‖`
    pub defect_residual: f64,
    /// `‖F_{t*} − F_t*‖`
    pub adjoint_residual: f64,
    pub min_defect_eig: f64,
    /// Relative error of `t → F_t → t`; absent when the defect is singular.
    pub round_trip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedTransformResult {
    pub levels: Vec<TransformLevel>,
    /// Largest `‖F_N‖` over levels.
    pub norm_f: f64,
}

impl BoundedTransformResult {
    pub fn max_defect_residual(&self) -> f64 {
        self.levels.iter().map(|l| l.defect_residual).fold(0.0, f64::max)
    }

    pub fn max_adjoint_residual(&self) -> f64 {
        self.levels.iter().map(|l| l.adjoint_residual).fold(0.0, f64::max)
    }

    /// `None` if any level refused the inverse transform.
    pub fn max_round_trip(&self) -> Option<f64> {
        self.levels
            .iter()
            .map(|l| l.round_trip)
            .try_fold(0.0, |acc, r| r.map(|r| f64::max(acc, r)))
    }
}

/// Level-wise bounded transform of the square compressions `T_N`.
pub fn bounded_transform(t: &OperatorTower) -> Result<BoundedTransformResult> {
    let adj = t.adjoint_tower();
    let mut levels = Vec::new();
    for &n in &t.levels {
        let a = t.square(n);
        let (f, q) = transform_matrix(&a)?;
        let (f_adj, _) = transform_matrix(&adj.square(n))?;
        let defect = linalg::identity(n) - f.adjoint() * &f;
        let defect_residual = linalg::spectral_norm(&(&q * &q - &defect))?;
        let adjoint_residual = linalg::spectral_norm(&(f_adj - f.adjoint()))?;
        let min_defect_eig = linalg::hermitian_eig(&defect)?.eigenvalues[0];
        let norm_f = linalg::spectral_norm(&f)?;

        let f_op = AdjointableOp::from_localized(t.d, &f)?;
        let round_trip = match inverse_transform(&f_op, DEFAULT_DEFECT_TOL) {
            Ok(back) => {
                let err = linalg::spectral_norm(&(back.localized() - &a))?;
                Some(err / linalg::spectral_norm(&a)?.max(1.0))
            }
            Err(Error::DefectSingular { .. }) => None,
            Err(e) => return Err(e),
        };
        levels.push(TransformLevel {
            level: n,
            f: f_op,
            q: AdjointableOp::from_localized(t.d, &q)?,
            defect: AdjointableOp::from_localized(t.d, &defect)?,
            norm_f,
            defect_residual,
            adjoint_residual,
            min_defect_eig,
            round_trip,
        });
    }
    let norm_f = levels.iter().map(|l| l.norm_f).fold(0.0, f64::max);
    Ok(BoundedTransformResult { levels, norm_f })
}

/// `t = F(1 − F*F)^{-1/2}`. Refuses when the defect is numerically singular
/// (which includes `‖F‖ ≥ 1`).
pub fn inverse_transform(f: &AdjointableOp, tol: f64) -> Result<AdjointableOp> {
    let a = f.localized();
    let n = a.ncols();
    let defect = linalg::identity(n) - a.adjoint() * &a;
    let defect = (&defect + defect.adjoint()).scale(0.5);
    let eig = linalg::hermitian_eig(&defect)?;
    let min_eig = eig.eigenvalues.first().copied().unwrap_or(1.0);
    if min_eig <= tol {
        return Err(Error::DefectSingular { min_eig, tol });
    }
    let scaled = eig.vectors.clone()
        * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            eig.eigenvalues.iter().map(|&l| linalg::c64(l.powf(-0.5), 0.0)),
        ))
        * eig.vectors.adjoint();
    AdjointableOp::from_localized(f.dim_h(), &(a * scaled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceIdentityLevel {
    pub level: usize,
    /// Level whose transform supplied the `F_t` columns.
    pub transform_level: usize,
    /// Ker t vs Ker F_t
    pub kernel_residual: f64,
    /// Ker t* vs (Ran t)⊥
    pub cokernel_residual: f64,
    /// Ran t vs Ran F_t
    pub range_residual: f64,
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub rank: usize,
}

impl SubspaceIdentityLevel {
    pub fn max_residual(&self) -> f64 {
        self.kernel_residual
            .max(self.cokernel_residual)
            .max(self.range_residual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceIdentityReport {
    pub levels: Vec<SubspaceIdentityLevel>,
    pub max_residual: f64,
    /// Kernel, cokernel and rank deficiency identical at every level.
    pub dims_stable: bool,
}

impl SubspaceIdentityReport {
    pub fn holds(&self, tol_residual: f64) -> bool {
        self.dims_stable && self.max_residual <= tol_residual
    }
}

/// Subspace identities between `t`, `t*` and `F_t`, evaluated on finitely
/// supported vectors at each level:
///
/// * `Ker t = Ker F_t` on the first `N` coordinates;
/// * `Ker t* = (Ran t)⊥`, comparing the kernel of the restricted adjoint with
///   the vectors orthogonal to every column of `t` that reaches them;
/// * `Ran t = Ran F_t` for the images of the first `N` coordinates.
pub fn verify_subspace_identities(t: &OperatorTower, tol_rank: f64) -> Result<SubspaceIdentityReport> {
    let adj = t.adjoint_tower();
    let lo = t.lower_bandwidth();
    let up = t.upper_bandwidth();
    let mut levels = Vec::new();
    for &n in &t.levels {
        let a = t.domain_section(n);
        let f = transform_columns(t, n)?;

        let ker_a = linalg::kernel_basis(&a, tol_rank)?;
        let ker_f = linalg::kernel_basis(&f, tol_rank)?;
        let kernel_residual = linalg::subspace_residual(&ker_a, &ker_f)?;

        let ker_adj = linalg::kernel_basis(&adj.domain_section(n), tol_rank)?;
        let ran_perp = linalg::range_complement_basis(&t.section(n, n + up), tol_rank)?;
        let cokernel_residual = linalg::subspace_residual(&ker_adj, &ran_perp)?;

        let mut a_embedded = linalg::zeros(f.nrows(), n);
        a_embedded.view_mut((0, 0), (n + lo, n)).copy_from(&a);
        let ran_a = linalg::range_basis(&a_embedded, tol_rank)?;
        let ran_f = linalg::range_basis(&f, tol_rank)?;
        let range_residual = linalg::subspace_residual(&ran_a, &ran_f)?;

        levels.push(SubspaceIdentityLevel {
            level: n,
            transform_level: TRANSFORM_OVERSAMPLE * n,
            kernel_residual,
            cokernel_residual,
            range_residual,
            ker_dim: ker_a.ncols(),
            coker_dim: ker_adj.ncols(),
            rank: ran_a.ncols(),
        });
    }
    let max_residual = levels.iter().map(SubspaceIdentityLevel::max_residual).fold(0.0, f64::max);
    let dims_stable = levels.windows(2).all(|w| {
        w[0].ker_dim == w[1].ker_dim
            && w[0].coker_dim == w[1].coker_dim
            && w[0].level - w[0].rank == w[1].level - w[1].rank
    });
    Ok(SubspaceIdentityReport {
        levels,
        max_residual,
        dims_stable,
    })
}

/// Moore–Penrose inverses of the restricted operator at one level, with
/// their defects.
#[derive(Debug, Clone)]
pub struct PseudoInverseLevel {
    pub level: usize,
    /// Left inverse of `t` on the first `level` coordinates.
    pub left: ComplexMatrix,
    /// Right inverse, built from the restricted adjoint.
    pub right: ComplexMatrix,
    /// `G·t − 1`
    pub left_defect: ComplexMatrix,
    /// `t·G − 1`
    pub right_defect: ComplexMatrix,
    pub left_defect_rank: usize,
    pub right_defect_rank: usize,
    /// `‖D² + D‖`, zero when the defect is minus a projection.
    pub left_residual: f64,
    pub right_residual: f64,
    pub norm: f64,
}

/// Summary of [`PseudoInverseLevel`]s across a tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoInverseSummary {
    pub left_defect_ranks: Vec<usize>,
    pub right_defect_ranks: Vec<usize>,
    pub norms: Vec<f64>,
    pub left_residual: f64,
    pub right_residual: f64,
    /// Defect ranks identical across levels and `‖G_N‖` level-stable.
    pub finite_rank_defects: bool,
}

/// Relative spread allowed for a quantity to count as level-stable.
pub const STABILITY_RTOL: f64 = 0.1;

pub fn level_stable(values: &[f64]) -> bool {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.len() < 2 || hi - lo <= STABILITY_RTOL * hi.abs()
}

fn negative_rank(defect: &ComplexMatrix) -> Result<usize> {
    // Moore–Penrose defects are minus orthogonal projections. A vanishing
    // defect is pure rounding, so symmetrize instead of testing Hermiticity.
    let sym = (defect + defect.adjoint()).scale(0.5);
    let eig = linalg::hermitian_eig(&sym)?;
    Ok(eig.eigenvalues.iter().filter(|&&l| l < -0.5).count())
}

/// Pseudo-inverse of the pair `(forward, adjoint)` restricted to the first
/// `n` coordinates.
pub fn pseudo_inverse_from_sections(
    level: usize,
    forward: &ComplexMatrix,
    adjoint: &ComplexMatrix,
    tol_rank: f64,
) -> Result<PseudoInverseLevel> {
    let n = forward.ncols();
    let left = linalg::pinv(forward, tol_rank)?;
    let left_defect = &left * forward - linalg::identity(n);
    let right = linalg::pinv(adjoint, tol_rank)?.adjoint();
    let right_defect = adjoint.adjoint() * &right - linalg::identity(n);
    let idem = |d: &ComplexMatrix| linalg::spectral_norm(&(d * d + d));
    Ok(PseudoInverseLevel {
        level,
        left_defect_rank: negative_rank(&left_defect)?,
        right_defect_rank: negative_rank(&right_defect)?,
        left_residual: idem(&left_defect)?,
        right_residual: idem(&right_defect)?,
        norm: linalg::spectral_norm(&left)?.max(linalg::spectral_norm(&right)?),
        left,
        right,
        left_defect,
        right_defect,
    })
}

pub fn summarize_pseudo_inverses(levels: &[PseudoInverseLevel]) -> PseudoInverseSummary {
    let left_defect_ranks: Vec<usize> = levels.iter().map(|l| l.left_defect_rank).collect();
    let right_defect_ranks: Vec<usize> = levels.iter().map(|l| l.right_defect_rank).collect();
    let norms: Vec<f64> = levels.iter().map(|l| l.norm).collect();
    let same = |v: &[usize]| v.windows(2).all(|w| w[0] == w[1]);
    PseudoInverseSummary {
        finite_rank_defects: same(&left_defect_ranks) && same(&right_defect_ranks) && level_stable(&norms),
        left_residual: levels.iter().map(|l| l.left_residual).fold(0.0, f64::max),
        right_residual: levels.iter().map(|l| l.right_residual).fold(0.0, f64::max),
        left_defect_ranks,
        right_defect_ranks,
        norms,
    }
}

/// Level-wise Moore–Penrose pseudo-inverses of `t`. Fails unless the defect
/// ranks and the norms of `G_N` stabilize.
pub fn pseudo_inverse_regular(t: &OperatorTower, tol: f64) -> Result<Vec<PseudoInverseLevel>> {
    let adj = t.adjoint_tower();
    let levels = t
        .levels
        .iter()
        .map(|&n| pseudo_inverse_from_sections(n, &t.domain_section(n), &adj.domain_section(n), tol))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_pseudo_inverses(&levels);
    if !summary.finite_rank_defects {
        return Err(Error::NoPseudoInverse(format!(
            "defect ranks {:?}/{:?} with norms {:?} do not stabilize",
            summary.left_defect_ranks, summary.right_defect_ranks, summary.norms
        )));
    }
    Ok(levels)
}

/// Entrywise distance between the square compressions of two towers at `n`.
pub fn level_distance(a: &OperatorTower, b: &OperatorTower, n: usize) -> f64 {
    max_abs(&(a.square(n) - b.square(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, diag};
    use crate::symbol::{Symbol, Weights};
    use crate::tower::Generator;

    fn sym(s: &str) -> Weights {
        Weights::Symbol(Symbol::parse(s).unwrap())
    }

    fn tower(g: Generator, levels: &[usize]) -> OperatorTower {
        OperatorTower::new(1, g, levels.to_vec()).unwrap()
    }

    #[test]
    fn scalar_transform() {
        let t = AdjointableOp::new(1, diag(&[3.0])).unwrap();
        let (f, q) = transform_op(&t).unwrap();
        assert!((f.right_mult()[(0, 0)] - c64(3.0 / 10f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((q.right_mult()[(0, 0)] - c64(1.0 / 10f64.sqrt(), 0.0)).norm() < 1e-15);
        let (f, q) = transform_op(&AdjointableOp::zero(1, 3)).unwrap();
        assert_eq!(f.norm(), 0.0);
        assert!(q.distance(&AdjointableOp::identity(1, 3)) < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let back = inverse_transform(&AdjointableOp::zero(2, 3), DEFAULT_DEFECT_TOL).unwrap();
        assert_eq!(back.norm(), 0.0);
        let f = AdjointableOp::new(1, diag(&[0.6])).unwrap();
        let t = inverse_transform(&f, DEFAULT_DEFECT_TOL).unwrap();
        assert!((t.right_mult()[(0, 0)] - c64(0.75, 0.0)).norm() < 1e-15);
        let f = AdjointableOp::new(1, diag(&[1.0])).unwrap();
        assert!(matches!(
            inverse_transform(&f, DEFAULT_DEFECT_TOL),
            Err(Error::DefectSingular { .. })
        ));
    }

    #[test]
    fn regularity_of_diagonal_n() {
        let t = tower(Generator::Diagonal { values: sym("n") }, &[16]);
        let r = check_regularity(&t, 1e-12).unwrap();
        assert!(r.regular);
        assert!((r.levels[0].min_eig - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_shift_transform_closed_form() {
        let t = tower(
            Generator::WeightedShift {
                step: 1,
                weights: sym("n"),
            },
            &[16, 32],
        );
        let r = bounded_transform(&t).unwrap();
        let f = r.levels[1].f.localized();
        // the last column leaves the square compression, so it maps to 0
        for j in 0..31 {
            let n = (j + 1) as f64;
            let want = n / (1.0 + n * n).sqrt();
            assert!((f[(j + 1, j)].re - want).abs() < 1e-10);
        }
        assert!(r.norm_f <= 1.0 + 1e-12);
        assert!(r.max_defect_residual() < 1e-10);
        assert!(r.max_adjoint_residual() < 1e-10);
        assert!(r.max_round_trip().unwrap() < 1e-8);
        // the defect is positive but closes in as N grows
        assert!(r.levels[1].min_defect_eig < r.levels[0].min_defect_eig);
        assert!(r.levels[1].min_defect_eig > 0.0);
    }

    #[test]
    fn subspace_identity_checks() {
        let shift_n = Generator::WeightedShift {
            step: 1,
            weights: sym("n"),
        };
        let r = verify_subspace_identities(&tower(shift_n, &[16, 32]), 0.0).unwrap();
        assert!(r.holds(1e-10), "{r:?}");
        assert_eq!((r.levels[0].ker_dim, r.levels[0].coker_dim), (0, 1));

        let diag_n = Generator::Diagonal { values: sym("n") };
        let r = verify_subspace_identities(&tower(diag_n, &[16, 32]), 0.0).unwrap();
        assert!(r.holds(1e-10));
        assert_eq!(r.levels[0].ker_dim, 1);
    }

    #[test]
    fn shift_pseudo_inverse() {
        let levels = pseudo_inverse_regular(&tower(Generator::shift(1), &[8, 16]), 0.0).unwrap();
        for l in &levels {
            assert!(max_abs(&l.left_defect) < 1e-14);
            assert_eq!(l.right_defect_rank, 1);
            assert!((l.right_defect[(0, 0)] + c64(1.0, 0.0)).norm() < 1e-14);
        }
        let decay = tower(Generator::Diagonal { values: sym("1/(n+1)") }, &[8, 16]);
        assert!(matches!(
            pseudo_inverse_regular(&decay, 0.0),
            Err(Error::NoPseudoInverse(_))
        ));
    }
}
