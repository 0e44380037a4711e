//! Dense complex linear algebra used by every other module.
//!
//! Matrices are nalgebra `DMatrix`es; the SVD and Hermitian eigensolver
//! come from faer, whose complex SVD stays accurate near tiny singular
//! values. This module pins down the
//! conventions the rest of the crate relies on: eigenvalues ascending,
//! singular values descending, explicit rank tolerances and orthonormal
//! kernel/range bases.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Relative Frobenius tolerance used by the Hermiticity check.
pub const DEFAULT_TOL_HERM: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let mut m = zeros(values.len(), values.len());
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c64(*v, 0.0);
    }
    m
}

pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Relative asymmetry `‖M − M*‖_F / ‖M‖_F` (0 for the zero matrix).
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let scale = frobenius(m);
    if scale == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.adjoint())) / scale
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, in eigenvalue order.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let lambda = self.eigenvalues[j];
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= lambda);
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    hermitian_eig_with_tol(m, DEFAULT_TOL_HERM)
}

pub fn hermitian_eig_with_tol(m: &ComplexMatrix, tol_herm: f64) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let defect = hermitian_defect(m);
    if defect > tol_herm {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: Vec::new(),
            vectors: zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    let values: Vec<f64> = (0..n).map(|k| eig.S()[k].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let vecs = eig.U();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        vectors,
    })
}

/// Thin singular value decomposition `M = U·diag(σ)·V*`.
///
/// `u` is rows×k and `v` is cols×k with k = min(rows, cols); `sigma` is
/// nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).iter_mut().for_each(|z| *z *= *s);
        }
        us * self.v.adjoint()
    }
}

fn to_faer(m: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: zeros(rows, 0),
            sigma: Vec::new(),
            v: zeros(cols, 0),
        });
    }
    let dec = to_faer(m).thin_svd().map_err(|_| Error::NoConvergence)?;
    let raw: Vec<f64> = (0..k).map(|i| dec.S()[i].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let sigma = order.iter().map(|&i| raw[i].max(0.0)).collect();
    let (u_raw, v_raw) = (dec.U(), dec.V());
    let u = ComplexMatrix::from_fn(rows, k, |i, j| u_raw[(i, order[j])]);
    let v = ComplexMatrix::from_fn(cols, k, |i, j| v_raw[(i, order[j])]);
    Ok(Svd { u, sigma, v })
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.sigma)
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Where a scalar function used in functional calculus is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Real,
    /// λ ≥ bound
    AtLeast(f64),
    /// λ > bound
    Above(f64),
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Real => true,
            Domain::AtLeast(b) => x >= b,
            Domain::Above(b) => x > b,
        }
    }
}

/// `U·diag(f(λ))·U*` for Hermitian `M`.
pub fn hermitian_function<F>(m: &ComplexMatrix, f: F, domain: Domain) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> f64,
{
    let eig = hermitian_eig(m)?;
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| !domain.contains(l)) {
        return Err(Error::Domain { eigenvalue: bad });
    }
    let mapped = HermitianEig {
        eigenvalues: eig.eigenvalues.iter().map(|&l| f(l)).collect(),
        vectors: eig.vectors,
    };
    Ok(mapped.reconstruct())
}

/// `(1 + M)^{-1/2}` for positive semidefinite `M`.
pub fn inv_sqrt_one_plus(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(m, |x| (1.0 + x).powf(-0.5), Domain::Above(-1.0))
}

/// Square root of a PSD matrix; eigenvalues down to `-tol` are clamped to 0.
pub fn sqrt_psd(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    hermitian_function(m, |x| x.max(0.0).sqrt(), Domain::AtLeast(-tol))
}

/// Inverse square root of a positive definite matrix.
pub fn inv_sqrt_pd(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    hermitian_function(m, |x| x.powf(-0.5), Domain::Above(tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDecision {
    pub rank: usize,
    pub sigma: Vec<f64>,
    pub tol_used: f64,
    /// σ_rank / σ_{rank+1}; infinite when nothing nonzero was dropped.
    pub gap_ratio: f64,
}

impl RankDecision {
    pub fn from_sigma(sigma: Vec<f64>, rows: usize, cols: usize, tol_rank: f64) -> Self {
        let tol = if tol_rank > 0.0 {
            tol_rank
        } else {
            default_rank_tol(rows, cols, sigma.first().copied().unwrap_or(0.0))
        };
        let rank = sigma.iter().take_while(|&&s| s > tol).count();
        let gap_ratio = match sigma.get(rank) {
            None => f64::INFINITY,
            Some(&next) if next == 0.0 => f64::INFINITY,
            Some(&next) => {
                if rank == 0 {
                    0.0
                } else {
                    sigma[rank - 1] / next
                }
            }
        };
        RankDecision {
            rank,
            sigma,
            tol_used: tol,
            gap_ratio,
        }
    }

    /// Smallest singular value counted in the rank.
    pub fn smallest_kept(&self) -> Option<f64> {
        self.rank.checked_sub(1).map(|i| self.sigma[i])
    }
}

/// `max(rows, cols) · ε · σ_max`.
pub fn default_rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Number of singular values above `tol_rank` (0 selects the default tolerance).
pub fn numerical_rank(m: &ComplexMatrix, tol_rank: f64) -> Result<RankDecision> {
    let sigma = singular_values(m)?;
    Ok(RankDecision::from_sigma(sigma, m.nrows(), m.ncols(), tol_rank))
}

/// Pads a wide matrix with zero rows so the thin SVD carries a full right basis.
fn square_up(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = m.shape();
    if rows >= cols {
        return m.clone();
    }
    let mut padded = zeros(cols, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    padded
}

/// Orthonormal basis (as columns) of the numerical null space.
pub fn kernel_basis(m: &ComplexMatrix, tol_rank: f64) -> Result<ComplexMatrix> {
    let cols = m.ncols();
    let dec = svd(&square_up(m))?;
    let rank = RankDecision::from_sigma(dec.sigma.clone(), m.nrows(), cols, tol_rank).rank;
    Ok(dec.v.columns(rank, cols - rank).into_owned())
}

/// Orthonormal basis of the numerical column space.
pub fn range_basis(m: &ComplexMatrix, tol_rank: f64) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    let rank = RankDecision::from_sigma(dec.sigma.clone(), m.nrows(), m.ncols(), tol_rank).rank;
    Ok(dec.u.columns(0, rank).into_owned())
}

/// Orthonormal basis of the orthogonal complement of the column space,
/// read off the left singular vectors.
pub fn range_complement_basis(m: &ComplexMatrix, tol_rank: f64) -> Result<ComplexMatrix> {
    let rows = m.nrows();
    // left singular vectors of M are right singular vectors of M*
    let dec = svd(&square_up(&m.adjoint()))?;
    let rank = RankDecision::from_sigma(dec.sigma.clone(), rows, m.ncols(), tol_rank).rank;
    Ok(dec.v.columns(rank, rows - rank).into_owned())
}

/// Orthonormal basis for the span of the given columns.
pub fn orthonormal_span(columns: &ComplexMatrix, tol_rank: f64) -> Result<ComplexMatrix> {
    if columns.ncols() == 0 {
        return Ok(zeros(columns.nrows(), 0));
    }
    range_basis(columns, tol_rank)
}

/// Mutual containment residual between the spans of two orthonormal
/// column sets: `max(‖A − BB*A‖₂, ‖B − AA*B‖₂)`.
///
/// Dimension mismatch shows up as a residual of (at least) 1.
pub fn subspace_residual(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces live in C^{} and C^{}",
            a.nrows(),
            b.nrows()
        )));
    }
    let one_way = |x: &ComplexMatrix, y: &ComplexMatrix| -> Result<f64> {
        if x.ncols() == 0 {
            return Ok(0.0);
        }
        if y.ncols() == 0 {
            return spectral_norm(x);
        }
        spectral_norm(&(x - y * (y.adjoint() * x)))
    };
    Ok(one_way(a, b)?.max(one_way(b, a)?))
}

/// Moore–Penrose pseudo-inverse, dropping singular values ≤ `tol_rank`.
pub fn pinv(m: &ComplexMatrix, tol_rank: f64) -> Result<ComplexMatrix> {
    let dec = svd(m)?;
    let rank = RankDecision::from_sigma(dec.sigma.clone(), m.nrows(), m.ncols(), tol_rank).rank;
    let mut v = dec.v.columns(0, rank).into_owned();
    for j in 0..rank {
        let inv = 1.0 / dec.sigma[j];
        v.column_mut(j).iter_mut().for_each(|z| *z *= inv);
    }
    Ok(v * dec.u.columns(0, rank).adjoint())
}

/// Plain transpose (no conjugation).
pub fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    m.transpose()
}
