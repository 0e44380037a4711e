//! Fredholm verdicts and index for adjointable operators and truncation
//! towers.
//!
//! For a tower, "finite-dimensional kernel" means the kernel dimension is the
//! same at every checked level, and "closed range" means the smallest
//! nonzero singular value stays above the rank tolerance and does not drift
//! between levels. Kernels are taken of the exact restrictions of `t` and `t*`
//! to finitely supported vectors, so square-truncation boundary effects
//! (such as the spurious kernel vector of a truncated shift) never enter.

use serde::{Deserialize, Serialize};

use crate::bounded_ops::AdjointableOp;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::regular_ops::{
    level_stable, pseudo_inverse_from_sections, summarize_pseudo_inverses, transform_columns,
    PseudoInverseSummary,
};
use crate::tower::{Generator, OperatorTower};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rank cut-off on singular values of unit-norm sections.
pub const DEFAULT_TOL_RANK: f64 = 1e-8;

/// Where the finite sections of an operator come from.
pub trait SectionSource {
    /// The operator restricted to the first `n` coordinates.
    fn forward(&self, n: usize) -> Result<ComplexMatrix>;
    /// Its adjoint restricted to the first `n` coordinates.
    fn adjoint(&self, n: usize) -> Result<ComplexMatrix>;
    fn path(&self) -> Path;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// A single finite operator.
    Operator,
    /// Sections of `t` itself.
    Direct,
    /// Sections of the bounded transform `F_t`.
    Transform,
}

/// Sections of `t` and `t*`.
pub struct DirectSections<'a> {
    tower: &'a OperatorTower,
    adjoint: OperatorTower,
}

impl<'a> DirectSections<'a> {
    pub fn new(tower: &'a OperatorTower) -> Self {
        DirectSections {
            tower,
            adjoint: tower.adjoint_tower(),
        }
    }
}

impl SectionSource for DirectSections<'_> {
    fn forward(&self, n: usize) -> Result<ComplexMatrix> {
        Ok(self.tower.domain_section(n))
    }

    fn adjoint(&self, n: usize) -> Result<ComplexMatrix> {
        Ok(self.adjoint.domain_section(n))
    }

    fn path(&self) -> Path {
        Path::Direct
    }
}

/// Sections of `F_t` and `F_{t*} = F_t*`, each computed from its own tower.
pub struct TransformSections<'a> {
    tower: &'a OperatorTower,
    adjoint: OperatorTower,
}

impl<'a> TransformSections<'a> {
    pub fn new(tower: &'a OperatorTower) -> Self {
        TransformSections {
            tower,
            adjoint: tower.adjoint_tower(),
        }
    }
}

impl SectionSource for TransformSections<'_> {
    fn forward(&self, n: usize) -> Result<ComplexMatrix> {
        transform_columns(self.tower, n)
    }

    fn adjoint(&self, n: usize) -> Result<ComplexMatrix> {
        transform_columns(&self.adjoint, n)
    }

    fn path(&self) -> Path {
        Path::Transform
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDetail {
    pub level: usize,
    pub ker_dim: usize,
    pub coker_dim: usize,
    /// Smallest singular value counted in the rank; absent for rank 0.
    pub sigma_gap: Option<f64>,
    /// The same for the adjoint section.
    pub adjoint_sigma_gap: Option<f64>,
    /// Smaller of the two gaps: the estimate of the reduced minimum modulus,
    /// which `t` and `t*` share.
    pub min_modulus: Option<f64>,
    pub norm: f64,
    pub tol_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmReport {
    pub tool_version: String,
    pub path: Path,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generator: Option<Generator>,
    pub is_fredholm: bool,
    /// Values at the finest level.
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub index: i64,
    pub closed_range: bool,
    pub sigma_gap: Option<f64>,
    pub levels_checked: Vec<usize>,
    /// Kernel and cokernel dimensions agree across levels.
    pub stabilized: bool,
    pub tol_rank: f64,
    /// Whether `tol_rank` was applied relative to a level-stable norm.
    pub normalized: bool,
    pub levels: Vec<LevelDetail>,
    /// Idempotency residuals `‖D² + D‖` of the left and right defects.
    pub pseudo_inverse_residuals: (f64, f64),
    pub pseudo_inverse: PseudoInverseSummary,
    /// Finiteness here is level stabilization, not a proof.
    pub finiteness_rule: String,
}

impl FredholmReport {
    /// The pseudo-inverse verdict: defects of finite, stable rank.
    pub fn pseudo_inverse_fredholm(&self) -> bool {
        self.pseudo_inverse.finite_rank_defects
    }
}

const FINITENESS_RULE: &str = "dimensions equal at every checked level";

/// Runs the closed-range and kernel-stabilization criterion over the given
/// sections. `tol_rank = 0` selects [`DEFAULT_TOL_RANK`].
pub fn check_sections(src: &dyn SectionSource, levels: &[usize], tol_rank: f64) -> Result<FredholmReport> {
    if levels.is_empty() {
        return Err(Error::DimensionMismatch("no levels to check".into()));
    }
    let tol_rank = if tol_rank > 0.0 { tol_rank } else { DEFAULT_TOL_RANK };
    let sections = levels
        .iter()
        .map(|&n| Ok((n, src.forward(n)?, src.adjoint(n)?)))
        .collect::<Result<Vec<_>>>()?;
    let norms = sections
        .iter()
        .map(|(_, a, _)| linalg::spectral_norm(a))
        .collect::<Result<Vec<_>>>()?;
    let normalized = level_stable(&norms);

    let mut details = Vec::new();
    let mut pinvs = Vec::new();
    for ((n, a, c), norm) in sections.iter().zip(&norms) {
        let tol = if normalized && *norm > 0.0 { tol_rank * norm } else { tol_rank };
        let fwd = linalg::numerical_rank(a, tol)?;
        let bwd = linalg::numerical_rank(c, tol)?;
        details.push(LevelDetail {
            level: *n,
            ker_dim: n - fwd.rank,
            coker_dim: n - bwd.rank,
            sigma_gap: fwd.smallest_kept(),
            adjoint_sigma_gap: bwd.smallest_kept(),
            min_modulus: match (fwd.smallest_kept(), bwd.smallest_kept()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
            norm: *norm,
            tol_used: tol,
        });
        pinvs.push(pseudo_inverse_from_sections(*n, a, c, tol)?);
    }

    let same = |f: fn(&LevelDetail) -> usize| details.windows(2).all(|w| f(&w[0]) == f(&w[1]));
    let stabilized = same(|d| d.ker_dim) && same(|d| d.coker_dim);
    // Ran t is closed iff Ran t* is. A cokernel vector without finite support
    // only shows up as a shrinking gap of the adjoint sections, so the
    // forward gap alone is not enough.
    let closed_range = gaps_closed(&details, |d| d.min_modulus);
    let last = details.last().unwrap();
    let summary = summarize_pseudo_inverses(&pinvs);
    Ok(FredholmReport {
        tool_version: VERSION.to_string(),
        path: src.path(),
        generator: None,
        is_fredholm: closed_range && stabilized,
        ker_dim: last.ker_dim,
        coker_dim: last.coker_dim,
        index: last.ker_dim as i64 - last.coker_dim as i64,
        closed_range,
        sigma_gap: last.sigma_gap,
        levels_checked: levels.to_vec(),
        stabilized,
        tol_rank,
        normalized,
        pseudo_inverse_residuals: (summary.left_residual, summary.right_residual),
        pseudo_inverse: summary,
        levels: details,
        finiteness_rule: FINITENESS_RULE.to_string(),
    })
}

/// Every level keeps a gap above its tolerance and the gaps agree across
/// levels.
fn gaps_closed(details: &[LevelDetail], gap: fn(&LevelDetail) -> Option<f64>) -> bool {
    let gaps: Vec<Option<f64>> = details.iter().map(gap).collect();
    if gaps.iter().all(Option::is_none) {
        return true;
    }
    if gaps.iter().any(Option::is_none) {
        return false;
    }
    let g: Vec<f64> = gaps.iter().map(|g| g.unwrap()).collect();
    details.iter().zip(&g).all(|(d, &g)| g > d.tol_used) && level_stable(&g)
}

/// Dimension of `Ker T` over the coefficient algebra: the kernel dimension
/// of the multiplier.
pub fn module_kernel_dim(t: &AdjointableOp, tol_rank: f64) -> Result<usize> {
    Ok(t.dim_m() - linalg::numerical_rank(t.right_mult(), tol_rank)?.rank)
}

/// Per-level kernel dimensions of a tower, and whether they agree.
pub fn tower_kernel_dims(t: &OperatorTower, tol_rank: f64) -> Result<(Vec<usize>, bool)> {
    let dims = t
        .levels
        .iter()
        .map(|&n| Ok(n - linalg::numerical_rank(&t.domain_section(n), tol_rank)?.rank))
        .collect::<Result<Vec<usize>>>()?;
    let stable = dims.windows(2).all(|w| w[0] == w[1]);
    Ok((dims, stable))
}

struct OperatorSections<'a>(&'a AdjointableOp);

impl SectionSource for OperatorSections<'_> {
    fn forward(&self, _: usize) -> Result<ComplexMatrix> {
        Ok(self.0.localized())
    }

    fn adjoint(&self, _: usize) -> Result<ComplexMatrix> {
        Ok(self.0.localized().adjoint())
    }

    fn path(&self) -> Path {
        Path::Operator
    }
}

/// Verdict for a single operator on a finitely generated module. Every such
/// operator is Fredholm of index 0; the report still carries the kernel
/// data and the pseudo-inverse corroboration.
pub fn fredholm_check_op(t: &AdjointableOp, tol_rank: f64) -> Result<FredholmReport> {
    check_sections(&OperatorSections(t), &[t.dim_m()], tol_rank)
}

/// Criterion applied to the sections of `t` itself.
pub fn fredholm_check_bounded(t: &OperatorTower, tol_rank: f64) -> Result<FredholmReport> {
    let mut r = check_sections(&DirectSections::new(t), &t.levels, tol_rank)?;
    r.generator = Some(t.generator.clone());
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularFredholmReport {
    pub tool_version: String,
    pub generator: Generator,
    pub unbounded: bool,
    pub direct: FredholmReport,
    pub transform: FredholmReport,
    pub verdicts_agree: bool,
    pub indices_agree: bool,
    /// Both paths say Fredholm.
    pub is_fredholm: bool,
    /// Set when both paths are Fredholm and their indices agree.
    pub index: Option<i64>,
}

/// Runs the criterion on `t` and independently on `F_t`. A disagreement is
/// reported, not reconciled.
pub fn fredholm_check_regular(t: &OperatorTower, tol_rank: f64) -> Result<RegularFredholmReport> {
    let direct = fredholm_check_bounded(t, tol_rank)?;
    let mut transform = check_sections(&TransformSections::new(t), &t.levels, tol_rank)?;
    transform.generator = Some(t.generator.clone());
    let verdicts_agree = direct.is_fredholm == transform.is_fredholm;
    let indices_agree = direct.index == transform.index;
    let is_fredholm = direct.is_fredholm && transform.is_fredholm;
    Ok(RegularFredholmReport {
        tool_version: VERSION.to_string(),
        generator: t.generator.clone(),
        unbounded: t.unbounded_flag(),
        index: (is_fredholm && indices_agree).then_some(direct.index),
        verdicts_agree,
        indices_agree,
        is_fredholm,
        direct,
        transform,
    })
}

pub fn index(report: &FredholmReport) -> Result<i64> {
    if report.is_fredholm {
        Ok(report.index)
    } else {
        Err(Error::NotFredholm)
    }
}

/// Index of a regular tower; requires `ind t = ind F_t`.
pub fn regular_index(report: &RegularFredholmReport) -> Result<i64> {
    if !report.is_fredholm {
        return Err(Error::NotFredholm);
    }
    if !report.indices_agree {
        return Err(Error::PathDisagreement {
            direct: report.direct.index,
            transform: report.transform.index,
        });
    }
    Ok(report.direct.index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionLevel {
    pub level: usize,
    /// Invertible part.
    pub v: AdjointableOp,
    /// Finite-rank part.
    pub k: AdjointableOp,
    pub min_sigma_v: f64,
    pub rank_k: usize,
    /// `max |T_N − (V_N + K_N)|`
    pub reconstruction: f64,
    pub invertible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexZeroDecomposition {
    pub levels: Vec<DecompositionLevel>,
    pub rank_stable: bool,
}

/// Splits an index-zero Fredholm tower as `T_N = V_N + K_N`: `K_N = −Σ b_i a_i*`
/// pairs an orthonormal kernel basis `a` with a cokernel basis `b`, so `V_N`
/// maps the kernel isometrically onto the cokernel.
pub fn compact_plus_invertible(t: &OperatorTower, tol: f64) -> Result<IndexZeroDecomposition> {
    let report = fredholm_check_regular(t, 0.0)?;
    if !report.is_fredholm {
        return Err(Error::NotFredholm);
    }
    let idx = regular_index(&report)?;
    if idx != 0 {
        return Err(Error::IndexNonzero(idx));
    }
    let adj = t.adjoint_tower();
    let mut levels = Vec::new();
    for (&n, detail) in t.levels.iter().zip(&report.direct.levels) {
        let a = linalg::kernel_basis(&t.domain_section(n), detail.tol_used)?;
        let b = linalg::kernel_basis(&adj.domain_section(n), detail.tol_used)?;
        if a.ncols() != b.ncols() {
            return Err(Error::NotFredholm);
        }
        let tn = t.square(n);
        let w = &b * a.adjoint();
        let v = &tn + &w;
        let k = -w;
        let min_sigma_v = linalg::singular_values(&v)?.last().copied().unwrap_or(0.0);
        let rank_k = linalg::numerical_rank(&k, 0.0)?.rank;
        let reconstruction = linalg::max_abs(&(&tn - (&v + &k)));
        levels.push(DecompositionLevel {
            level: n,
            v: AdjointableOp::from_localized(t.d, &v)?,
            k: AdjointableOp::from_localized(t.d, &k)?,
            min_sigma_v,
            rank_k,
            reconstruction,
            invertible: min_sigma_v >= tol,
        });
    }
    let rank_stable = levels.windows(2).all(|w| w[0].rank_k == w[1].rank_k);
    Ok(IndexZeroDecomposition { levels, rank_stable })
}
