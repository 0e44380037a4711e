//! Adjointable operators on the truncated module, rank-one operators
//! `Θ_{x,y}`, and the localization isomorphism `Ψ: B(E) → B(E_{e₀})`.
//!
//! Every operator is stored as its right multiplier: `T(x) = x·R` for an
//! `m×m` matrix `R`. Left `K`-linearity `T(a·x) = a·T(x)` is then exact and
//! the adjoint is `x ↦ x·R*`. Composition reverses the multipliers:
//! `(T∘S)(x) = x·R_S·R_T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::matrix_serde;
use crate::linalg::{self, c64, ComplexMatrix, C64};
use crate::module_space::{
    localize, standard_unit, CompactElement, ModuleVector, DEFAULT_TOL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OpJson", into = "OpJson")]
pub struct AdjointableOp {
    d: usize,
    right_mult: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct OpJson {
    d: usize,
    m: usize,
    #[serde(with = "matrix_serde")]
    right_mult: ComplexMatrix,
}

impl TryFrom<OpJson> for AdjointableOp {
    type Error = Error;

    fn try_from(j: OpJson) -> Result<Self> {
        if j.right_mult.shape() != (j.m, j.m) {
            return Err(Error::DimensionMismatch(format!(
                "declared m = {} but right_mult is {}x{}",
                j.m,
                j.right_mult.nrows(),
                j.right_mult.ncols()
            )));
        }
        AdjointableOp::new(j.d, j.right_mult)
    }
}

impl From<AdjointableOp> for OpJson {
    fn from(t: AdjointableOp) -> Self {
        OpJson {
            d: t.d,
            m: t.dim_m(),
            right_mult: t.right_mult,
        }
    }
}

impl AdjointableOp {
    pub fn new(d: usize, right_mult: ComplexMatrix) -> Result<Self> {
        if !right_mult.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "right multiplier must be square, got {}x{}",
                right_mult.nrows(),
                right_mult.ncols()
            )));
        }
        if !linalg::is_finite(&right_mult) {
            return Err(Error::NonFinite);
        }
        Ok(AdjointableOp { d, right_mult })
    }

    pub fn identity(d: usize, m: usize) -> Self {
        AdjointableOp {
            d,
            right_mult: linalg::identity(m),
        }
    }

    pub fn zero(d: usize, m: usize) -> Self {
        AdjointableOp {
            d,
            right_mult: linalg::zeros(m, m),
        }
    }

    /// The operator whose localization (in the column convention of
    /// [`localize_op`]) is `a`; the multiplier is `aᵀ`.
    pub fn from_localized(d: usize, a: &ComplexMatrix) -> Result<Self> {
        AdjointableOp::new(d, a.transpose())
    }

    /// `Ψ(T)` as a plain matrix, `Rᵀ`. Independent of the minimal projection.
    pub fn localized(&self) -> ComplexMatrix {
        self.right_mult.transpose()
    }

    pub fn right_mult(&self) -> &ComplexMatrix {
        &self.right_mult
    }

    pub fn dim_h(&self) -> usize {
        self.d
    }

    pub fn dim_m(&self) -> usize {
        self.right_mult.nrows()
    }

    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        if x.dim_h() != self.d || x.dim_m() != self.dim_m() {
            return Err(Error::DimensionMismatch(format!(
                "operator on {}x{} applied to {}x{}",
                self.d,
                self.dim_m(),
                x.dim_h(),
                x.dim_m()
            )));
        }
        ModuleVector::new(x.matrix() * &self.right_mult)
    }

    pub fn adjoint(&self) -> Self {
        AdjointableOp {
            d: self.d,
            right_mult: self.right_mult.adjoint(),
        }
    }

    fn check_same(&self, other: &AdjointableOp) -> Result<()> {
        if self.d != other.d || self.dim_m() != other.dim_m() {
            return Err(Error::DimensionMismatch(format!(
                "operators on {}x{} and {}x{}",
                self.d,
                self.dim_m(),
                other.d,
                other.dim_m()
            )));
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AdjointableOp) -> Result<Self> {
        self.check_same(other)?;
        Ok(AdjointableOp {
            d: self.d,
            right_mult: &other.right_mult * &self.right_mult,
        })
    }

    pub fn add(&self, other: &AdjointableOp) -> Result<Self> {
        self.check_same(other)?;
        Ok(AdjointableOp {
            d: self.d,
            right_mult: &self.right_mult + &other.right_mult,
        })
    }

    pub fn sub(&self, other: &AdjointableOp) -> Result<Self> {
        self.check_same(other)?;
        Ok(AdjointableOp {
            d: self.d,
            right_mult: &self.right_mult - &other.right_mult,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        AdjointableOp {
            d: self.d,
            right_mult: self.right_mult.map(|z| z * s),
        }
    }

    /// Operator norm on `E`, which is the spectral norm of the multiplier.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.right_mult).expect("finite multiplier")
    }

    /// Frobenius distance between multipliers.
    pub fn distance(&self, other: &AdjointableOp) -> f64 {
        linalg::frobenius(&(&self.right_mult - &other.right_mult))
    }
}

/// `Θ_{x,y}(z) = ⟨z,x⟩·y`, whose multiplier is `x*·y`.
pub fn rank_one_op(x: &ModuleVector, y: &ModuleVector) -> Result<AdjointableOp> {
    if x.matrix().shape() != y.matrix().shape() {
        return Err(Error::DimensionMismatch(format!(
            "rank-one operator of {:?} and {:?}",
            x.matrix().shape(),
            y.matrix().shape()
        )));
    }
    AdjointableOp::new(x.dim_h(), x.matrix().adjoint() * y.matrix())
}

/// Evidence that an operator is a finite combination of `Θ_{x,y}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneSpanCertificate {
    pub pairs: Vec<(ModuleVector, ModuleVector)>,
    pub coefficients: Vec<C64>,
    pub residual: f64,
}

impl RankOneSpanCertificate {
    pub fn combination(&self, d: usize, m: usize) -> Result<AdjointableOp> {
        let mut acc = AdjointableOp::zero(d, m);
        for ((x, y), c) in self.pairs.iter().zip(&self.coefficients) {
            acc = acc.add(&rank_one_op(x, y)?.scale(*c))?;
        }
        Ok(acc)
    }
}

/// Writes `T` as `Σ σ_k Θ_{u·a_k*, u·b_k*}` from the SVD `R = Σ σ_k a_k b_k*`,
/// dropping singular values ≤ `tol`.
///
/// At a fixed truncation every operator lies in the span; genuine
/// compactness is only decided on towers.
pub fn rank_one_span_membership(t: &AdjointableOp, tol: f64) -> Result<RankOneSpanCertificate> {
    let (d, m) = (t.dim_h(), t.dim_m());
    let dec = linalg::svd(t.right_mult())?;
    let u = standard_unit(d);
    let mut pairs = Vec::new();
    let mut coefficients = Vec::new();
    for (k, &s) in dec.sigma.iter().enumerate() {
        if s <= tol {
            break;
        }
        let a: Vec<C64> = dec.u.column(k).iter().map(|z| z.conj()).collect();
        let b: Vec<C64> = dec.v.column(k).iter().map(|z| z.conj()).collect();
        pairs.push((ModuleVector::lift(&u, &a), ModuleVector::lift(&u, &b)));
        coefficients.push(c64(s, 0.0));
    }
    let mut cert = RankOneSpanCertificate {
        pairs,
        coefficients,
        residual: 0.0,
    };
    cert.residual = cert.combination(d, m)?.distance(t);
    Ok(cert)
}

/// `Ψ(T) = T|_{E_{e₀}}` in coordinates: column `j` is the localization of
/// `T(u·e_jᵀ)`.
pub fn localize_op(t: &AdjointableOp, e0: &CompactElement) -> Result<ComplexMatrix> {
    if e0.dim_h() != t.dim_h() {
        return Err(Error::DimensionMismatch(format!(
            "projection in dimension {}, operator on d = {}",
            e0.dim_h(),
            t.dim_h()
        )));
    }
    let u = e0.minimal_projection_vector(DEFAULT_TOL)?;
    let m = t.dim_m();
    let mut out = linalg::zeros(m, m);
    for j in 0..m {
        let mut row = vec![c64(0.0, 0.0); m];
        row[j] = c64(1.0, 0.0);
        let image = t.apply(&ModuleVector::lift(&u, &row))?;
        let coords = localize(e0, &image)?.coords;
        for (i, z) in coords.into_iter().enumerate() {
            out[(i, j)] = z;
        }
    }
    Ok(out)
}

/// Inverse of [`localize_op`]: lifts the matrix entries back into a multiplier.
pub fn delocalize_op(s: &ComplexMatrix, e0: &CompactElement) -> Result<AdjointableOp> {
    e0.minimal_projection_vector(DEFAULT_TOL)?;
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Ψ⁻¹ needs a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    AdjointableOp::from_localized(e0.dim_h(), s)
}

/// Residuals of `Ker Ψ(T) = e·Ker T` and `Ran Ψ(T) = e·Ran T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub ker_residual: f64,
    pub ran_residual: f64,
    pub ker_dim_localized: usize,
    pub ker_dim_module: usize,
    pub ran_dim_localized: usize,
    pub ran_dim_module: usize,
}

/// The module map `x ↦ x·R` as a `dm×dm` matrix on column-major `vec(x)`,
/// i.e. `Rᵀ ⊗ I_d`.
fn vectorized(t: &AdjointableOp) -> ComplexMatrix {
    let (d, m) = (t.dim_h(), t.dim_m());
    let rt = t.right_mult().transpose();
    let mut big = linalg::zeros(d * m, d * m);
    for a in 0..m {
        for b in 0..m {
            let z = rt[(a, b)];
            if z == c64(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                big[(a * d + i, b * d + i)] = z;
            }
        }
    }
    big
}

fn unvec(col: &[C64], d: usize, m: usize) -> ModuleVector {
    ModuleVector::new(ComplexMatrix::from_column_slice(d, m, col)).expect("finite")
}

/// Localizes every column (a vectorized module element) and returns an
/// orthonormal basis of the span of the results, as columns in `C^m`.
fn localized_span(
    e: &CompactElement,
    cols: &ComplexMatrix,
    d: usize,
    m: usize,
) -> Result<ComplexMatrix> {
    let mut coords = linalg::zeros(m, cols.ncols());
    for j in 0..cols.ncols() {
        let v: Vec<C64> = cols.column(j).iter().copied().collect();
        let l = localize(e, &unvec(&v, d, m))?;
        for (i, z) in l.coords.into_iter().enumerate() {
            coords[(i, j)] = z;
        }
    }
    // the inputs are orthonormal, so the coordinates have singular values
    // at most 1 and anything this small is rounding from the big SVD
    linalg::orthonormal_span(&coords, 1e-10)
}

/// Verifies the kernel/range transfer rules by computing `Ker T` and `Ran T`
/// on the whole module (as a `dm`-dimensional linear map), localizing them at
/// `e`, and comparing with the kernel and range of `Ψ(T)`.
pub fn kernel_range_transfer(
    t: &AdjointableOp,
    e: &CompactElement,
    tol_rank: f64,
) -> Result<TransferCheck> {
    e.minimal_projection_vector(DEFAULT_TOL)?;
    let (d, m) = (t.dim_h(), t.dim_m());
    let local = localize_op(t, e)?;
    let big = vectorized(t);

    let ker_module = linalg::kernel_basis(&big, tol_rank)?;
    let ran_module = linalg::range_basis(&big, tol_rank)?;
    let e_ker = localized_span(e, &ker_module, d, m)?;
    let e_ran = localized_span(e, &ran_module, d, m)?;
    let ker_local = linalg::kernel_basis(&local, tol_rank)?;
    let ran_local = linalg::range_basis(&local, tol_rank)?;

    Ok(TransferCheck {
        ker_residual: linalg::subspace_residual(&ker_local, &e_ker)?,
        ran_residual: linalg::subspace_residual(&ran_local, &e_ran)?,
        ker_dim_localized: ker_local.ncols(),
        ker_dim_module: e_ker.ncols(),
        ran_dim_localized: ran_local.ncols(),
        ran_dim_module: e_ran.ncols(),
    })
}

/// Smallest singular value of `T`, optionally restricted to `(Ker T)⊥`.
///
/// On an empty restriction domain the operator is bounded below vacuously
/// with bound `+∞`. `tol = 0` selects the default rank tolerance.
const BOUNDED_BELOW_REL_TOL: f64 = 1e-10;

/// `tol = 0` means `1e-10 · ‖T‖`.
pub fn is_bounded_below(t: &AdjointableOp, restrict_to_ker_perp: bool, tol: f64) -> Result<(bool, f64)> {
    let tol = if tol > 0.0 {
        tol
    } else {
        BOUNDED_BELOW_REL_TOL * t.norm().max(f64::MIN_POSITIVE)
    };
    let decision = linalg::numerical_rank(t.right_mult(), tol)?;
    if restrict_to_ker_perp {
        Ok(match decision.smallest_kept() {
            None => (true, f64::INFINITY),
            Some(s) => (s > decision.tol_used, s),
        })
    } else {
        let smallest = decision.sigma.last().copied().unwrap_or(f64::INFINITY);
        Ok((smallest > decision.tol_used, smallest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::module_space::{inner_product, module_action, orthonormal_basis};
    use crate::random::{
        random_element, random_minimal_projection, random_op, random_rank_deficient,
        random_vector, rng,
    };

    fn frob(m: &ComplexMatrix) -> f64 {
        linalg::frobenius(m)
    }

    #[test]
    fn apply_examples() {
        let mut r = rng(1);
        let x = random_vector(&mut r, 3, 4);
        assert_eq!(AdjointableOp::identity(3, 4).apply(&x).unwrap(), x);
        assert!(AdjointableOp::zero(3, 4).apply(&x).unwrap().is_zero());

        let t = random_op(&mut r, 3, 4);
        let a = random_element(&mut r, 3);
        let lhs = t.apply(&module_action(&a, &x).unwrap()).unwrap();
        let rhs = module_action(&a, &t.apply(&x).unwrap()).unwrap();
        // associativity of the matrix product; equal up to rounding
        assert!(frob(&(lhs.matrix() - rhs.matrix())) < 1e-14);
        assert!(
            crate::module_space::module_norm(&t.apply(&x).unwrap())
                <= t.norm() * crate::module_space::module_norm(&x) + 1e-12
        );
        assert!(matches!(
            t.apply(&random_vector(&mut r, 3, 5)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn adjoint_examples() {
        let t = AdjointableOp::new(2, linalg::diag(&[1.0, -3.0, 2.0])).unwrap();
        assert_eq!(t.adjoint(), t);

        let mut r = rng(2);
        let t = random_op(&mut r, 3, 5);
        assert_eq!(t.adjoint().adjoint(), t);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let x = random_vector(&mut r, 3, 5);
            let y = random_vector(&mut r, 3, 5);
            let lhs = inner_product(&t.apply(&x).unwrap(), &y).unwrap();
            let rhs = inner_product(&x, &t.adjoint().apply(&y).unwrap()).unwrap();
            worst = worst.max(frob(&(lhs.matrix() - rhs.matrix())));
        }
        assert!(worst <= 1e-12);

        let x = random_vector(&mut r, 3, 5);
        let y = random_vector(&mut r, 3, 5);
        let lhs = rank_one_op(&x, &y).unwrap().adjoint();
        let rhs = rank_one_op(&y, &x).unwrap();
        assert!(lhs.distance(&rhs) <= 1e-12);
    }

    #[test]
    fn rank_one_examples() {
        let b = orthonormal_basis(2, 3);
        let x = &b.vectors[1];
        let th = rank_one_op(x, x).unwrap();
        assert!(frob(&(th.apply(x).unwrap().matrix() - x.matrix())) < 1e-15);
        assert_eq!(
            rank_one_op(x, &ModuleVector::zeros(2, 3)).unwrap(),
            AdjointableOp::zero(2, 3)
        );

        let mut r = rng(3);
        let (z, x, y) = (
            random_vector(&mut r, 4, 3),
            random_vector(&mut r, 4, 3),
            random_vector(&mut r, 4, 3),
        );
        let lhs = rank_one_op(&x, &y).unwrap().apply(&z).unwrap();
        let rhs = module_action(&inner_product(&z, &x).unwrap(), &y).unwrap();
        assert!(frob(&(lhs.matrix() - rhs.matrix())) <= 1e-12);
    }

    #[test]
    fn rank_one_composition_identity() {
        let mut r = rng(4);
        let (x, y) = (random_vector(&mut r, 2, 4), random_vector(&mut r, 2, 4));
        let t = random_op(&mut r, 2, 4);
        let lhs = t.compose(&rank_one_op(&x, &y).unwrap()).unwrap();
        let rhs = rank_one_op(&x, &t.apply(&y).unwrap()).unwrap();
        assert!(lhs.distance(&rhs) <= 1e-12);
    }

    #[test]
    fn rank_one_span_examples() {
        let zero = rank_one_span_membership(&AdjointableOp::zero(2, 3), 1e-12).unwrap();
        assert!(zero.pairs.is_empty() && zero.residual == 0.0);

        let b = orthonormal_basis(3, 4);
        let th = rank_one_op(&b.vectors[0], &b.vectors[2]).unwrap();
        let cert = rank_one_span_membership(&th, 1e-12).unwrap();
        assert_eq!(cert.pairs.len(), 1);
        assert!(cert.residual <= 1e-12);

        let id = rank_one_span_membership(&AdjointableOp::identity(2, 3), 1e-12).unwrap();
        assert_eq!(id.pairs.len(), 3);
        assert!(id.residual <= 1e-12);

        let mut r = rng(5);
        let t = random_op(&mut r, 2, 5);
        let cert = rank_one_span_membership(&t, 0.0).unwrap();
        assert!(cert.pairs.len() <= 25);
        assert!(cert.residual <= 1e-12 * t.norm().max(1.0));
    }

    #[test]
    fn localize_op_examples() {
        let e0 = CompactElement::matrix_unit(3, 0, 0);
        assert!(frob(&(localize_op(&AdjointableOp::identity(3, 4), &e0).unwrap() - linalg::identity(4))) < 1e-15);

        let mut r = rng(6);
        let e = random_minimal_projection(&mut r, 3);
        let t = random_op(&mut r, 3, 5);
        let lhs = localize_op(&t.adjoint(), &e).unwrap();
        let rhs = localize_op(&t, &e).unwrap().adjoint();
        assert!(frob(&(lhs - rhs)) <= 1e-12);
        let local = localize_op(&t, &e).unwrap();
        assert!((linalg::spectral_norm(&local).unwrap() - t.norm()).abs() <= 1e-10);

        // Ψ(T)·localize(x) = localize(T x), in column convention
        let x = random_vector(&mut r, 3, 5);
        let lx = localize(&e, &x).unwrap().coords;
        let ltx = localize(&e, &t.apply(&x).unwrap()).unwrap().coords;
        let col = ComplexMatrix::from_column_slice(5, 1, &lx);
        let image = &local * col;
        let err: f64 = image.iter().zip(&ltx).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn delocalize_round_trips() {
        let e0 = CompactElement::matrix_unit(2, 0, 0);
        assert_eq!(
            delocalize_op(&linalg::identity(3), &e0).unwrap(),
            AdjointableOp::identity(2, 3)
        );
        let mut r = rng(7);
        let e = random_minimal_projection(&mut r, 2);
        let s = crate::random::random_matrix(&mut r, 4, 4);
        let back = localize_op(&delocalize_op(&s, &e).unwrap(), &e).unwrap();
        assert!(frob(&(back - &s)) <= 1e-12);
        let t = random_op(&mut r, 2, 4);
        let back = delocalize_op(&localize_op(&t, &e).unwrap(), &e).unwrap();
        assert!(back.distance(&t) <= 1e-12);

        assert!(matches!(
            delocalize_op(&s, &CompactElement::identity(2)),
            Err(Error::NotMinimalProjection(_))
        ));
        assert!(matches!(
            delocalize_op(&linalg::zeros(2, 3), &e),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn transfer_examples() {
        let e = CompactElement::matrix_unit(2, 0, 0);
        let t = AdjointableOp::new(2, linalg::diag(&[1.0, 2.0, 3.0])).unwrap();
        let c = kernel_range_transfer(&t, &e, 0.0).unwrap();
        assert_eq!(c.ker_dim_localized, 0);
        assert_eq!(c.ker_dim_module, 0);
        assert_eq!(c.ker_residual, 0.0);

        let x = orthonormal_basis(2, 3).vectors[1].clone();
        let th = rank_one_op(&x, &x).unwrap();
        let c = kernel_range_transfer(&th, &e, 0.0).unwrap();
        assert_eq!((c.ran_dim_localized, c.ran_dim_module), (1, 1));
        assert!(c.ran_residual <= 1e-10 && c.ker_residual <= 1e-10);

        let mut r = rng(8);
        let e = random_minimal_projection(&mut r, 3);
        for rank in 0..4 {
            let t = AdjointableOp::new(3, random_rank_deficient(&mut r, 4, 4, rank)).unwrap();
            let c = kernel_range_transfer(&t, &e, 0.0).unwrap();
            assert_eq!(c.ker_dim_localized, 4 - rank);
            assert_eq!(c.ker_dim_module, 4 - rank);
            assert!(c.ker_residual <= 1e-10 && c.ran_residual <= 1e-10, "{c:?}");
        }
    }

    #[test]
    fn bounded_below_examples() {
        assert_eq!(
            is_bounded_below(&AdjointableOp::identity(1, 3), true, 0.0).unwrap(),
            (true, 1.0)
        );
        assert_eq!(
            is_bounded_below(&AdjointableOp::zero(1, 3), true, 0.0).unwrap(),
            (true, f64::INFINITY)
        );
        let t = AdjointableOp::new(1, linalg::diag(&[1.0, 1e-15])).unwrap();
        let (ok, bound) = is_bounded_below(&t, true, 0.0).unwrap();
        assert!(ok && (bound - 1.0).abs() < 1e-15);
        let (ok, _) = is_bounded_below(&t, false, 1e-10).unwrap();
        assert!(!ok);
    }

    #[test]
    fn json_shape() {
        let t = AdjointableOp::new(2, linalg::diag(&[1.0])).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"d":2,"m":1,"right_mult":{"rows":1,"cols":1,"re":[[1.0]],"im":[[0.0]]}}"#);
        let back: AdjointableOp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"d":2,"m":2,"right_mult":{"rows":1,"cols":1,"re":[[1.0]],"im":[[0.0]]}}"#;
        assert!(serde_json::from_str::<AdjointableOp>(bad).is_err());
    }
}
