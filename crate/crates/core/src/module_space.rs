//! Hilbert modules over the compact operators, truncated to `d`.
//!
//! The module `E` is realized as `d×m` complex matrices. The coefficient
//! algebra acts from the left by `d×d` matrices and the algebra-valued
//! inner product is `⟨x, y⟩ = x·y*`. A closed submodule is determined by a
//! subspace `W ⊆ C^m` (the rows its elements may take), so orthonormal bases,
//! dimensions and complements all reduce to ordinary linear algebra on row
//! coordinates after localizing at a minimal projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::matrix_serde;
use crate::linalg::{self, c64, ComplexMatrix, C64};

/// Default tolerance for projection and orthogonality checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// An element of the coefficient algebra at truncation `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompactElement {
    #[serde(with = "matrix_serde")]
    matrix: ComplexMatrix,
}

impl CompactElement {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "algebra element must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        Ok(CompactElement { matrix })
    }

    pub fn identity(d: usize) -> Self {
        CompactElement {
            matrix: linalg::identity(d),
        }
    }

    pub fn zero(d: usize) -> Self {
        CompactElement {
            matrix: linalg::zeros(d, d),
        }
    }

    /// Matrix unit `E_ij` (zero-based indices).
    pub fn matrix_unit(d: usize, i: usize, j: usize) -> Self {
        let mut matrix = linalg::zeros(d, d);
        matrix[(i, j)] = c64(1.0, 0.0);
        CompactElement { matrix }
    }

    /// Rank-one projection onto the span of `u` (normalized here).
    pub fn projection_onto(u: &ComplexMatrix) -> Result<Self> {
        let n = u.norm();
        if u.ncols() != 1 || n == 0.0 {
            return Err(Error::NotMinimalProjection(
                "projection needs a nonzero column vector".into(),
            ));
        }
        let u = u.scale(1.0 / n);
        CompactElement::new(&u * u.adjoint())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim_h(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        CompactElement {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, other: &CompactElement) -> Result<Self> {
        if self.dim_h() != other.dim_h() {
            return Err(mismatch("algebra product", self.dim_h(), other.dim_h()));
        }
        Ok(CompactElement {
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Unit vector `u` with `self = u·u*`, if `self` is a rank-one projection
    /// within `tol`.
    pub fn minimal_projection_vector(&self, tol: f64) -> Result<ComplexMatrix> {
        let m = &self.matrix;
        let herm = linalg::hermitian_defect(m);
        if herm > tol {
            return Err(Error::NotMinimalProjection(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let idem = linalg::frobenius(&(m * m - m));
        if idem > tol {
            return Err(Error::NotMinimalProjection(format!(
                "not idempotent (defect {idem:e})"
            )));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > tol {
            return Err(Error::NotMinimalProjection(format!(
                "rank is not one (trace {:.6})",
                trace.re
            )));
        }
        let eig = linalg::hermitian_eig_with_tol(m, tol.max(linalg::DEFAULT_TOL_HERM))?;
        let n = eig.eigenvalues.len();
        let u = eig.vectors.columns(n - 1, 1).into_owned();
        // fix the phase: largest component real and positive
        let pivot = u
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(c64(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        Ok(u.map(|z| z * phase))
    }

    pub fn is_minimal_projection(&self, tol: f64) -> bool {
        self.minimal_projection_vector(tol).is_ok()
    }
}

/// An element `x` of the module, stored as a `d×m` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleVector {
    #[serde(with = "matrix_serde")]
    matrix: ComplexMatrix,
}

impl ModuleVector {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        Ok(ModuleVector { matrix })
    }

    pub fn zeros(d: usize, m: usize) -> Self {
        ModuleVector {
            matrix: linalg::zeros(d, m),
        }
    }

    /// `u·c` for a column `u ∈ C^d` and a row `c ∈ C^m`.
    pub fn lift(u: &ComplexMatrix, row: &[C64]) -> Self {
        let c = ComplexMatrix::from_row_slice(1, row.len(), row);
        ModuleVector { matrix: u * c }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim_h(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim_m(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn scale(&self, s: C64) -> Self {
        ModuleVector {
            matrix: self.matrix.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &ModuleVector) -> Result<Self> {
        same_shape(self, other)?;
        Ok(ModuleVector {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &ModuleVector) -> Result<Self> {
        same_shape(self, other)?;
        Ok(ModuleVector {
            matrix: &self.matrix - &other.matrix,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == c64(0.0, 0.0))
    }
}

fn mismatch(what: &str, a: usize, b: usize) -> Error {
    Error::DimensionMismatch(format!("{what}: {a} vs {b}"))
}

fn same_shape(x: &ModuleVector, y: &ModuleVector) -> Result<()> {
    if x.matrix.shape() != y.matrix.shape() {
        return Err(Error::DimensionMismatch(format!(
            "module vectors of shape {:?} and {:?}",
            x.matrix.shape(),
            y.matrix.shape()
        )));
    }
    Ok(())
}

/// `⟨x, y⟩ = x·y*`.
pub fn inner_product(x: &ModuleVector, y: &ModuleVector) -> Result<CompactElement> {
    same_shape(x, y)?;
    Ok(CompactElement {
        matrix: &x.matrix * y.matrix.adjoint(),
    })
}

/// Left action `a·x`.
pub fn module_action(a: &CompactElement, x: &ModuleVector) -> Result<ModuleVector> {
    if a.dim_h() != x.dim_h() {
        return Err(mismatch("module action", a.dim_h(), x.dim_h()));
    }
    Ok(ModuleVector {
        matrix: &a.matrix * &x.matrix,
    })
}

/// `‖x‖ = ‖⟨x,x⟩‖^{1/2}`, i.e. the largest singular value of `x`.
pub fn module_norm(x: &ModuleVector) -> f64 {
    linalg::spectral_norm(&x.matrix).expect("module vectors hold finite entries")
}

/// Whether `⟨x,x⟩` is a rank-one projection (eigenvalues `{1, 0, …, 0}`).
pub fn is_basic_vector(x: &ModuleVector, tol: f64) -> bool {
    let gram = &x.matrix * x.matrix.adjoint();
    let Ok(eig) = linalg::hermitian_eig(&gram) else {
        return false;
    };
    let Some((&top, rest)) = eig.eigenvalues.split_last() else {
        return false;
    };
    (top - 1.0).abs() <= tol && rest.iter().all(|l| l.abs() <= tol)
}

/// A finite orthonormal system of basic vectors with their minimal
/// projections `e_λ = ⟨x_λ, x_λ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    pub vectors: Vec<ModuleVector>,
    pub projections: Vec<CompactElement>,
}

impl OrthonormalBasis {
    fn from_rows(u: &ComplexMatrix, rows: &[Vec<C64>]) -> Self {
        let vectors: Vec<ModuleVector> = rows.iter().map(|r| ModuleVector::lift(u, r)).collect();
        let projections = vectors
            .iter()
            .map(|x| inner_product(x, x).expect("same shape"))
            .collect();
        OrthonormalBasis {
            vectors,
            projections,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest violation of the orthonormal-system axioms: cross inner
    /// products, projection defects of `⟨x_λ,x_λ⟩`, and `e_λ·x_λ − x_λ`.
    pub fn axiom_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, x) in self.vectors.iter().enumerate() {
            for y in &self.vectors[i + 1..] {
                let ip = inner_product(x, y).expect("same shape");
                worst = worst.max(linalg::frobenius(ip.matrix()));
            }
            let e = inner_product(x, x).expect("same shape");
            let m = e.matrix();
            worst = worst.max(linalg::frobenius(&(m * m - m)));
            worst = worst.max((m.trace().re - 1.0).abs());
            let ex = module_action(&e, x).expect("same d");
            worst = worst.max(linalg::frobenius(&(ex.matrix - &x.matrix)));
        }
        worst
    }
}

/// First standard basis vector of `C^d`, the fixed `u` behind constructed bases.
pub fn standard_unit(d: usize) -> ComplexMatrix {
    let mut u = linalg::zeros(d, 1);
    u[(0, 0)] = c64(1.0, 0.0);
    u
}

/// The basis `x_j = u·e_jᵀ` of the full module of `d×m` matrices.
pub fn orthonormal_basis(d: usize, m: usize) -> OrthonormalBasis {
    let u = standard_unit(d);
    let rows: Vec<Vec<C64>> = (0..m)
        .map(|j| {
            let mut r = vec![c64(0.0, 0.0); m];
            r[j] = c64(1.0, 0.0);
            r
        })
        .collect();
    OrthonormalBasis::from_rows(&u, &rows)
}

/// `e₀·x` as a vector of the Hilbert space `E_{e₀}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedVector {
    pub basepoint: CompactElement,
    pub coords: Vec<C64>,
}

impl LocalizedVector {
    /// `(v, w) = Σ v_k · conj(w_k)`, which equals `tr⟨e₀x, e₀y⟩`.
    pub fn inner(&self, other: &LocalizedVector) -> C64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }
}

/// Coordinates of `e₀·x` in `E_{e₀} ≅ C^m`: writing `e₀ = u·u*`, the
/// element `e₀x = u·(u*x)` is determined by the row `u*x`.
pub fn localize(e0: &CompactElement, x: &ModuleVector) -> Result<LocalizedVector> {
    if e0.dim_h() != x.dim_h() {
        return Err(mismatch("localization", e0.dim_h(), x.dim_h()));
    }
    let u = e0.minimal_projection_vector(DEFAULT_TOL)?;
    let row = u.adjoint() * &x.matrix;
    Ok(LocalizedVector {
        basepoint: e0.clone(),
        coords: row.iter().copied().collect(),
    })
}

fn check_family(vs: &[ModuleVector]) -> Result<Option<(usize, usize)>> {
    let Some(first) = vs.first() else {
        return Ok(None);
    };
    let shape = first.matrix.shape();
    if let Some(bad) = vs.iter().find(|v| v.matrix.shape() != shape) {
        return Err(Error::DimensionMismatch(format!(
            "generators of shape {:?} and {:?}",
            shape,
            bad.matrix.shape()
        )));
    }
    Ok(Some(shape))
}

/// Localized coordinates of the submodule generated by `vs`: the rows
/// `u*·(u f_i*)·v = f_i*·v` for an orthonormal frame `(f_i)` of `C^d`
/// whose first vector is `u`.
fn localized_generators(basepoint: &CompactElement, vs: &[ModuleVector]) -> Result<Vec<Vec<C64>>> {
    let u = basepoint.minimal_projection_vector(DEFAULT_TOL)?;
    let d = u.nrows();
    // eigenvectors of e₀ give a unitary frame; the last one spans u
    let frame = linalg::hermitian_eig(basepoint.matrix())?.vectors;
    let mut rows = Vec::new();
    for v in vs {
        if v.dim_h() != d {
            return Err(mismatch("localization", d, v.dim_h()));
        }
        for i in (0..d).rev() {
            let f = frame.column(i);
            let r = f.adjoint() * &v.matrix;
            rows.push(r.iter().copied().collect());
        }
    }
    Ok(rows)
}

fn row_norm(r: &[C64]) -> f64 {
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass; candidates whose
/// residual does not exceed `tol` are dropped.
fn orthonormalize_rows(rows: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for r in rows {
        let mut w = r.clone();
        for _ in 0..2 {
            for q in &basis {
                let coef: C64 = w.iter().zip(q).map(|(a, b)| a * b.conj()).sum();
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= coef * b);
            }
        }
        let n = row_norm(&w);
        if n > tol {
            basis.push(w.into_iter().map(|z| z / n).collect());
        }
    }
    basis
}

fn effective_tol(rows: &[Vec<C64>], tol_rank: f64) -> f64 {
    if tol_rank > 0.0 {
        return tol_rank;
    }
    let m = rows.first().map_or(0, |r| r.len());
    let largest = rows.iter().map(|r| row_norm(r)).fold(0.0, f64::max);
    linalg::default_rank_tol(rows.len(), m, largest).max(f64::MIN_POSITIVE)
}

/// Orthonormal basis of the closed submodule generated by `vs`, localized
/// at `E₁₁`.
pub fn gram_schmidt_module(vs: &[ModuleVector], tol_rank: f64) -> Result<OrthonormalBasis> {
    let Some((d, _)) = check_family(vs)? else {
        return Ok(OrthonormalBasis {
            vectors: Vec::new(),
            projections: Vec::new(),
        });
    };
    gram_schmidt_module_at(&CompactElement::matrix_unit(d, 0, 0), vs, tol_rank)
}

/// As [`gram_schmidt_module`], localizing at an arbitrary minimal projection.
/// The returned basis vectors are `u·q` where `basepoint = u·u*`.
pub fn gram_schmidt_module_at(
    basepoint: &CompactElement,
    vs: &[ModuleVector],
    tol_rank: f64,
) -> Result<OrthonormalBasis> {
    if check_family(vs)?.is_none() {
        return Ok(OrthonormalBasis {
            vectors: Vec::new(),
            projections: Vec::new(),
        });
    }
    let u = basepoint.minimal_projection_vector(DEFAULT_TOL)?;
    let rows = localized_generators(basepoint, vs)?;
    let tol = effective_tol(&rows, tol_rank);
    Ok(OrthonormalBasis::from_rows(&u, &orthonormalize_rows(&rows, tol)))
}

/// Orthonormal dimension of the submodule generated by `vs`.
pub fn orthonormal_dim(vs: &[ModuleVector], tol_rank: f64) -> Result<usize> {
    Ok(gram_schmidt_module(vs, tol_rank)?.len())
}

/// Row-coordinate matrix `Q` (k×m, orthonormal rows) of the submodule
/// generated by `vs`.
fn submodule_rows(vs: &[ModuleVector], m: usize, tol_rank: f64) -> Result<ComplexMatrix> {
    let basis = gram_schmidt_module(vs, tol_rank)?;
    let k = basis.len();
    let mut q = linalg::zeros(k, m);
    for (i, x) in basis.vectors.iter().enumerate() {
        // x = e₁·q_i with e₁ the first standard vector
        q.row_mut(i).copy_from(&x.matrix.row(0));
    }
    Ok(q)
}

/// Right multiplier of the orthogonal projection onto the submodule
/// generated by `vs`: `p(x) = x·P`.
pub fn submodule_projection(vs: &[ModuleVector], m: usize, tol_rank: f64) -> Result<ComplexMatrix> {
    let q = submodule_rows(vs, m, tol_rank)?;
    Ok(q.adjoint() * q)
}

/// Orthonormal basis of `X⊥` where `X` is generated by `vs`, for the module
/// of `d×m` matrices.
pub fn orthogonal_complement(
    vs: &[ModuleVector],
    d: usize,
    m: usize,
    tol_rank: f64,
) -> Result<OrthonormalBasis> {
    if let Some((vd, vm)) = check_family(vs)? {
        if (vd, vm) != (d, m) {
            return Err(Error::DimensionMismatch(format!(
                "generators are {vd}x{vm}, module is {d}x{m}"
            )));
        }
    }
    let q = submodule_rows(vs, m, tol_rank)?;
    let complement = if q.nrows() == 0 {
        linalg::identity(m)
    } else {
        // rows r with r·q_j* = 0 are conjugates of kernel vectors of Q
        linalg::kernel_basis(&q, 0.5)?
    };
    let rows: Vec<Vec<C64>> = (0..complement.ncols())
        .map(|j| complement.column(j).iter().map(|z| z.conj()).collect())
        .collect();
    Ok(OrthonormalBasis::from_rows(&standard_unit(d), &rows))
}

/// Splits `x = p(x) + q(x)` along `X ⊕ X⊥` for `X` generated by `vs`.
pub fn decompose(
    x: &ModuleVector,
    vs: &[ModuleVector],
    tol_rank: f64,
) -> Result<(ModuleVector, ModuleVector)> {
    if let Some(shape) = check_family(vs)? {
        if shape != x.matrix.shape() {
            return Err(Error::DimensionMismatch(format!(
                "vector {:?} vs generators {:?}",
                x.matrix.shape(),
                shape
            )));
        }
    }
    let p = submodule_projection(vs, x.dim_m(), tol_rank)?;
    let inside = ModuleVector {
        matrix: &x.matrix * &p,
    };
    let outside = x.sub(&inside)?;
    Ok((inside, outside))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_element, random_minimal_projection, random_vector, rng};

    fn unit(d: usize, m: usize, i: usize, j: usize) -> ModuleVector {
        let mut x = linalg::zeros(d, m);
        x[(i, j)] = c64(1.0, 0.0);
        ModuleVector::new(x).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let x = unit(2, 2, 0, 0);
        assert_eq!(inner_product(&x, &x).unwrap(), CompactElement::matrix_unit(2, 0, 0));
        let y = unit(2, 2, 1, 1);
        assert!(linalg::frobenius(inner_product(&x, &y).unwrap().matrix()) == 0.0);

        let mut r = rng(1);
        let x = random_vector(&mut r, 3, 4);
        let y = random_vector(&mut r, 3, 4);
        let a = inner_product(&x, &y).unwrap().adjoint();
        let b = inner_product(&y, &x).unwrap();
        assert!(linalg::frobenius(&(a.matrix() - b.matrix())) <= 1e-14);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let x = ModuleVector::zeros(2, 3);
        let y = ModuleVector::zeros(2, 4);
        assert!(matches!(inner_product(&x, &y), Err(Error::DimensionMismatch(_))));
        let a = CompactElement::identity(3);
        assert!(matches!(module_action(&a, &x), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn module_action_examples() {
        let mut r = rng(2);
        let x = random_vector(&mut r, 3, 5);
        let y = random_vector(&mut r, 3, 5);
        assert_eq!(module_action(&CompactElement::identity(3), &x).unwrap(), x);
        assert!(module_action(&CompactElement::zero(3), &x).unwrap().is_zero());

        let a = random_element(&mut r, 3);
        let lhs = inner_product(&module_action(&a, &x).unwrap(), &y).unwrap();
        let rhs = a.mul(&inner_product(&x, &y).unwrap()).unwrap();
        assert!(linalg::frobenius(&(lhs.matrix() - rhs.matrix())) <= 1e-12);
    }

    #[test]
    fn module_norm_examples() {
        assert!((module_norm(&unit(2, 2, 0, 0)) - 1.0).abs() < 1e-15);
        assert!((module_norm(&unit(2, 2, 0, 0).scale(c64(2.0, 0.0))) - 2.0).abs() < 1e-15);
        let mut r = rng(3);
        let x = random_vector(&mut r, 4, 6);
        let gram = inner_product(&x, &x).unwrap();
        let op = linalg::spectral_norm(gram.matrix()).unwrap();
        assert!((module_norm(&x).powi(2) - op).abs() <= 1e-12 * op.max(1.0));
    }

    #[test]
    fn basic_vector_examples() {
        let mut r = rng(4);
        let u = linalg::orthonormal_span(&crate::random::random_matrix(&mut r, 3, 1), 0.0).unwrap();
        let v = linalg::orthonormal_span(&crate::random::random_matrix(&mut r, 5, 1), 0.0).unwrap();
        let x = ModuleVector::new(&u * v.adjoint()).unwrap();
        assert!(is_basic_vector(&x, 1e-10));
        // x·x* = u·u* computed directly
        let gram = inner_product(&x, &x).unwrap();
        assert!(linalg::frobenius(&(gram.matrix() - &u * u.adjoint())) < 1e-14);
        let ex = module_action(&gram, &x).unwrap();
        assert!(linalg::frobenius(&(ex.matrix() - x.matrix())) < 1e-12);

        assert!(!is_basic_vector(&unit(2, 2, 0, 0).scale(c64(2.0, 0.0)), 1e-10));
        assert!(!is_basic_vector(&ModuleVector::zeros(2, 2), 1e-10));
    }

    #[test]
    fn constructed_bases() {
        let b = orthonormal_basis(1, 1);
        assert_eq!(b.len(), 1);
        assert_eq!(b.vectors[0].matrix()[(0, 0)], c64(1.0, 0.0));
        assert_eq!(b.projections[0].matrix()[(0, 0)], c64(1.0, 0.0));

        let b = orthonormal_basis(2, 3);
        assert_eq!(b.len(), 3);
        assert!(b.axiom_residual() < 1e-15);
        for e in &b.projections {
            assert_eq!(e, &CompactElement::matrix_unit(2, 0, 0));
        }
        for (d, m) in [(1, 4), (3, 2), (5, 5)] {
            assert_eq!(orthonormal_basis(d, m).len(), m);
        }
    }

    #[test]
    fn gram_schmidt_examples() {
        let x = unit(2, 3, 0, 0);
        let b = gram_schmidt_module(std::slice::from_ref(&x), 0.0).unwrap();
        assert_eq!(b.len(), 1);
        assert!(is_basic_vector(&b.vectors[0], 1e-12));
        // membership: projecting x back onto the span reproduces it
        let (inside, outside) = decompose(&x, &b.vectors, 0.0).unwrap();
        assert!(outside.is_zero() || module_norm(&outside) < 1e-14);
        assert!(linalg::frobenius(&(inside.matrix() - x.matrix())) < 1e-14);

        let mut r = rng(6);
        let x = random_vector(&mut r, 3, 4);
        let twice = x.scale(c64(2.0, 0.0));
        // rows of a generic 3x4 vector span 3 dims of C^4
        assert_eq!(orthonormal_dim(&[x.clone(), twice], 0.0).unwrap(), 3);

        assert!(gram_schmidt_module(&[], 0.0).unwrap().is_empty());
        assert_eq!(orthonormal_dim(&[ModuleVector::zeros(2, 2)], 0.0).unwrap(), 0);
    }

    #[test]
    fn orthonormal_dim_examples() {
        let full = orthonormal_basis(3, 5);
        assert_eq!(orthonormal_dim(&full.vectors, 0.0).unwrap(), 5);
        assert_eq!(orthonormal_dim(&[unit(3, 5, 2, 1)], 0.0).unwrap(), 1);

        // three basic vectors with independent random rows in m = 8
        let mut r = rng(7);
        let rows = crate::random::random_matrix(&mut r, 3, 8);
        let u = standard_unit(4);
        let vs: Vec<ModuleVector> = (0..3)
            .map(|i| ModuleVector::lift(&u, &rows.row(i).iter().copied().collect::<Vec<_>>()))
            .collect();
        let oracle = linalg::numerical_rank(&rows, 0.0).unwrap().rank;
        assert_eq!(oracle, 3);
        assert_eq!(orthonormal_dim(&vs, 0.0).unwrap(), oracle);
    }

    #[test]
    fn localize_examples() {
        let e0 = CompactElement::matrix_unit(2, 0, 0);
        let x = unit(2, 3, 0, 0);
        let l = localize(&e0, &x).unwrap();
        assert!((l.coords[0].norm() - 1.0).abs() < 1e-15);
        assert!(l.coords[1].norm() == 0.0 && l.coords[2].norm() == 0.0);

        let killed = localize(&e0, &unit(2, 3, 1, 2)).unwrap();
        assert!(killed.coords.iter().all(|z| z.norm() == 0.0));

        let mut r = rng(8);
        let e = random_minimal_projection(&mut r, 4);
        let x = random_vector(&mut r, 4, 3);
        let y = random_vector(&mut r, 4, 3);
        let lx = localize(&e, &x).unwrap();
        let ly = localize(&e, &y).unwrap();
        let ex = module_action(&e, &x).unwrap();
        let ey = module_action(&e, &y).unwrap();
        let trace = inner_product(&ex, &ey).unwrap().matrix().trace();
        assert!((lx.inner(&ly) - trace).norm() <= 1e-12);
        assert!(lx.norm() <= module_norm(&x) + 1e-12);
    }

    #[test]
    fn localize_rejects_non_minimal() {
        let x = ModuleVector::zeros(2, 2);
        let err = localize(&CompactElement::identity(2), &x).unwrap_err();
        assert!(matches!(err, Error::NotMinimalProjection(_)));
        let err = localize(&CompactElement::zero(2), &x).unwrap_err();
        assert!(matches!(err, Error::NotMinimalProjection(_)));
    }

    #[test]
    fn complement_examples() {
        let full = orthonormal_basis(2, 3);
        assert!(orthogonal_complement(&full.vectors, 2, 3, 0.0).unwrap().is_empty());
        let all = orthogonal_complement(&[], 2, 3, 0.0).unwrap();
        assert_eq!(all.len(), 3);

        let mut r = rng(9);
        let basic = gram_schmidt_module(&[random_vector(&mut r, 1, 4)], 0.0).unwrap();
        assert_eq!(basic.len(), 1);
        let comp = orthogonal_complement(&basic.vectors, 1, 4, 0.0).unwrap();
        assert_eq!(comp.len(), 3);
        assert!(comp.axiom_residual() < 1e-12);
        for b in &comp.vectors {
            let ip = inner_product(b, &basic.vectors[0]).unwrap();
            assert!(linalg::frobenius(ip.matrix()) < 1e-12);
        }
        let x = random_vector(&mut r, 1, 4);
        let (p, q) = decompose(&x, &basic.vectors, 0.0).unwrap();
        let back = p.add(&q).unwrap();
        assert!(linalg::frobenius(&(back.matrix() - x.matrix())) <= 1e-10);
        // q lies in the span of the complement basis
        let (q_in, _) = decompose(&q, &comp.vectors, 0.0).unwrap();
        assert!(linalg::frobenius(&(q_in.matrix() - q.matrix())) <= 1e-10);
    }

    #[test]
    fn complement_dimension_mismatch() {
        let v = ModuleVector::zeros(2, 3);
        assert!(matches!(
            orthogonal_complement(&[v], 2, 4, 0.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn json_shape() {
        let x = unit(1, 2, 0, 1);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"re":[[0.0,1.0]],"im":[[0.0,0.0]]}"#);
        let back: ModuleVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
    }
}
