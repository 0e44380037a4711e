//! Named verification suites: the gallery plus seeded random instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use kfredholm::bounded_ops::{kernel_range_transfer, AdjointableOp};
use kfredholm::fredholm::{fredholm_check_bounded, fredholm_check_op, fredholm_check_regular, VERSION};
use kfredholm::gallery::{gallery, GalleryEntry};
use kfredholm::linalg;
use kfredholm::module_space::{inner_product, module_action};
use kfredholm::random::{
    random_bounded_tower, random_element, random_minimal_projection, random_op, random_rank_deficient,
    random_vector, rng, SeededRng,
};
use kfredholm::regular_ops::verify_subspace_identities;
use kfredholm::tower::{default_levels, OperatorTower};
use rand::Rng;

use crate::checks::{instance_seed, localization_residuals, transform_levels_pass, transform_summary};
use crate::scenario::{DEFAULT_TOL_RANK, DEFAULT_TOL_RESIDUAL};

pub const SUITES: [&str; 6] = [
    "psi-isomorphism",
    "atkinson-bounded",
    "atkinson-regular",
    "bounded-transform",
    "lemma42",
    "index-equality",
];

/// Tolerance for the module inner-product axioms.
pub const AXIOM_TOL: f64 = 1e-12;
/// Tolerance for localization and kernel/range transfer residuals.
pub const LOCALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub tol_rank: f64,
    pub tol_residual: f64,
    pub levels: Vec<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol_rank: DEFAULT_TOL_RANK,
            tol_residual: DEFAULT_TOL_RESIDUAL,
            levels: default_levels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    pub detail: String,
    /// Enough to rebuild the instance.
    pub replay: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tool_version: String,
    pub suite: String,
    pub seed: u64,
    pub levels: Vec<usize>,
    pub tol_rank: f64,
    pub tol_residual: f64,
    pub instances: Vec<Instance>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn first_failure(&self) -> Option<&Instance> {
        self.instances.iter().find(|i| !i.passed)
    }

    pub fn failures(&self) -> usize {
        self.instances.iter().filter(|i| !i.passed).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.instances.iter().map(|i| i.max_residual).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,instance,passed,max_residual,detail\n");
        for i in &self.instances {
            out.push_str(&format!(
                "{},{},{},{:e},{}\n",
                self.suite,
                csv_field(&i.name),
                i.passed,
                i.max_residual,
                csv_field(&i.detail)
            ));
        }
        out.push_str(&format!(
            "{},total,{},{:e},{}\n",
            self.suite,
            self.passed,
            self.max_residual(),
            csv_field(&format!("{} instances, {} failed, seed {}", self.instances.len(), self.failures(), self.seed))
        ));
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn instance(name: impl Into<String>, passed: bool, max_residual: f64, detail: impl Into<String>, replay: Value) -> Instance {
    Instance {
        name: name.into(),
        passed,
        max_residual,
        detail: detail.into(),
        replay,
    }
}

fn errored(name: impl Into<String>, e: impl std::fmt::Display, replay: Value) -> Instance {
    instance(name, false, f64::INFINITY, format!("error: {e}"), replay)
}

fn seeded(seed: u64, i: usize) -> (u64, SeededRng) {
    let s = instance_seed(seed, i as u64);
    (s, rng(s))
}

fn gallery_tower(e: &GalleryEntry, levels: &[usize]) -> OperatorTower {
    e.tower(1, levels).expect("gallery towers are finite")
}

fn gallery_replay(e: &GalleryEntry, o: &SuiteOptions) -> Value {
    json!({ "gallery": e.name, "generator": e.generator, "levels": o.levels })
}

/// Inner-product axioms on random `(d, m ≤ 8)` instances.
pub fn module_axioms(seed: u64, count: usize) -> Vec<Instance> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (s, mut r) = seeded(seed, i);
            let d = r.random_range(1..=8);
            let m = r.random_range(1..=8);
            let replay = json!({ "instance_seed": s, "d": d, "m": m });
            let x = random_vector(&mut r, d, m);
            let y = random_vector(&mut r, d, m);
            let a = random_element(&mut r, d);
            let res = (|| -> kfredholm::Result<(f64, f64, f64)> {
                let xy = inner_product(&x, &y)?;
                let yx = inner_product(&y, &x)?;
                let conj = linalg::max_abs(&(xy.matrix().adjoint() - yx.matrix()));
                let lhs = inner_product(&module_action(&a, &x)?, &y)?;
                let linear = linalg::max_abs(&(lhs.matrix() - a.matrix() * xy.matrix()));
                let xx = inner_product(&x, &x)?;
                let min_eig = linalg::hermitian_eig(xx.matrix())?.eigenvalues[0];
                Ok((conj, linear, min_eig))
            })();
            match res {
                Ok((conj, linear, min_eig)) => instance(
                    format!("axioms-{i}"),
                    conj <= AXIOM_TOL && linear <= AXIOM_TOL && min_eig >= -AXIOM_TOL,
                    conj.max(linear).max(-min_eig),
                    format!("d={d} m={m} min_eig={min_eig:e}"),
                    replay,
                ),
                Err(e) => errored(format!("axioms-{i}"), e, replay),
            }
        })
        .collect()
}

/// Localization homomorphism, adjoint, isometry and round trip on random
/// operators with `m ≤ 16`.
pub fn localization_instances(seed: u64, count: usize) -> Vec<Instance> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (s, mut r) = seeded(seed, i);
            let d = r.random_range(1..=4);
            let m = r.random_range(1..=16);
            let replay = json!({ "instance_seed": s, "d": d, "m": m });
            let e = random_minimal_projection(&mut r, d);
            let t = random_op(&mut r, d, m);
            let u = random_op(&mut r, d, m);
            match localization_residuals(&t, &u, &e) {
                Ok(res) => instance(
                    format!("localize-{i}"),
                    res.max() <= LOCALIZATION_TOL,
                    res.max(),
                    format!("d={d} m={m}"),
                    replay,
                ),
                Err(err) => errored(format!("localize-{i}"), err, replay),
            }
        })
        .collect()
}

/// Kernel and range transfer on random rank-deficient operators.
pub fn transfer_instances(seed: u64, count: usize) -> Vec<Instance> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (s, mut r) = seeded(seed, i);
            let d = r.random_range(1..=4);
            let m = r.random_range(2..=16);
            let rank = r.random_range(1..m);
            let replay = json!({ "instance_seed": s, "d": d, "m": m, "rank": rank });
            let mult = random_rank_deficient(&mut r, m, m, rank);
            let e = random_minimal_projection(&mut r, d);
            let res = AdjointableOp::new(d, mult).and_then(|t| kernel_range_transfer(&t, &e, 0.0));
            match res {
                Ok(c) => {
                    let worst = c.ker_residual.max(c.ran_residual);
                    instance(
                        format!("transfer-{i}"),
                        worst <= LOCALIZATION_TOL && c.ker_dim_localized == m - rank,
                        worst,
                        format!("d={d} m={m} rank={rank} ker={}", c.ker_dim_localized),
                        replay,
                    )
                }
                Err(err) => errored(format!("transfer-{i}"), err, replay),
            }
        })
        .collect()
}

fn psi_gallery(o: &SuiteOptions) -> Vec<Instance> {
    gallery()
        .par_iter()
        .map(|e| {
            let t = gallery_tower(e, &o.levels);
            let replay = gallery_replay(e, o);
            let mut worst = 0.0f64;
            for (i, &n) in o.levels.iter().enumerate() {
                let mut r = rng(instance_seed(o.seed, i as u64));
                let p = random_minimal_projection(&mut r, 1);
                let res = t.level_op(n).and_then(|op| {
                    let u = random_op(&mut r, 1, n);
                    let rel = localization_residuals(&op, &u, &p)?.relative(op.norm(), u.norm());
                    let tr = kernel_range_transfer(&op, &p, o.tol_rank)?;
                    Ok(rel.max().max(tr.ker_residual).max(tr.ran_residual))
                });
                match res {
                    Ok(w) => worst = worst.max(w),
                    Err(err) => return errored(&e.name, err, replay),
                }
            }
            instance(&e.name, worst <= o.tol_residual, worst, "relative residuals at each level", replay)
        })
        .collect()
}

/// Number of random operators in the localization suite.
pub const LOCALIZATION_COUNT: usize = 200;
/// Number of random rank-deficient operators in the transfer part.
pub const TRANSFER_COUNT: usize = 100;
/// Number of random bounded towers in the transform suite.
pub const RANDOM_TOWER_COUNT: usize = 100;
/// Number of random finite operators in the bounded Atkinson suite.
pub const RANDOM_OP_COUNT: usize = 50;

fn psi_isomorphism(o: &SuiteOptions) -> Vec<Instance> {
    let mut out = localization_instances(o.seed, LOCALIZATION_COUNT);
    out.extend(transfer_instances(o.seed.wrapping_add(1), TRANSFER_COUNT));
    out.extend(psi_gallery(o));
    out
}

fn atkinson_bounded(o: &SuiteOptions) -> Vec<Instance> {
    let mut out: Vec<Instance> = gallery()
        .par_iter()
        .filter(|e| !e.unbounded)
        .map(|e| {
            let t = gallery_tower(e, &o.levels);
            let replay = gallery_replay(e, o);
            let res = fredholm_check_bounded(&t, o.tol_rank)
                .and_then(|r| Ok((fredholm_check_bounded(&t.adjoint_tower(), o.tol_rank)?, r)));
            let (adj, r) = match res {
                Ok(x) => x,
                Err(err) => return errored(&e.name, err, replay),
            };
            let agree = r.is_fredholm == r.pseudo_inverse_fredholm();
            let expected = r.is_fredholm == e.expected.fredholm
                && (!r.is_fredholm || Some(r.index) == e.expected.index);
            let adjoint_ok = !r.is_fredholm || (adj.is_fredholm && adj.index == -r.index);
            instance(
                &e.name,
                agree && expected && adjoint_ok,
                0.0,
                format!(
                    "criterion={} pseudo_inverse={} index={} adjoint_index={}",
                    r.is_fredholm,
                    r.pseudo_inverse_fredholm(),
                    r.index,
                    adj.index
                ),
                replay,
            )
        })
        .collect();
    out.par_extend((0..RANDOM_OP_COUNT).into_par_iter().map(|i| {
        let (s, mut r) = seeded(o.seed, i);
        let d = r.random_range(1..=3);
        let m = r.random_range(1..=8);
        let rank = r.random_range(0..=m);
        let replay = json!({ "instance_seed": s, "d": d, "m": m, "rank": rank });
        let mult = if rank == 0 {
            linalg::zeros(m, m)
        } else {
            random_rank_deficient(&mut r, m, m, rank)
        };
        let name = format!("random-op-{i}");
        match AdjointableOp::new(d, mult).and_then(|t| fredholm_check_op(&t, o.tol_rank)) {
            Ok(rep) => instance(
                name,
                rep.is_fredholm && rep.pseudo_inverse_fredholm() && rep.index == 0,
                0.0,
                format!("ker={} coker={}", rep.ker_dim, rep.coker_dim),
                replay,
            ),
            Err(err) => errored(name, err, replay),
        }
    }));
    out
}

/// Number of random bounded towers in the regular Atkinson suite.
pub const ATKINSON_TOWER_COUNT: usize = 30;

fn atkinson_regular(o: &SuiteOptions) -> Vec<Instance> {
    let mut out = atkinson_regular_gallery(o);
    // no ground truth for random towers: only the two verdicts are compared
    out.par_extend((0..ATKINSON_TOWER_COUNT).into_par_iter().map(|i| {
        let (s, mut r) = seeded(o.seed, i);
        let d = r.random_range(1..=2);
        let t = random_bounded_tower(&mut r, d, &o.levels);
        let replay = json!({ "instance_seed": s, "d": d, "generator": t.generator, "levels": o.levels });
        let name = format!("random-tower-{i}");
        match fredholm_check_regular(&t, o.tol_rank) {
            Ok(r) => {
                let agree = [&r.direct, &r.transform]
                    .iter()
                    .all(|p| p.is_fredholm == p.pseudo_inverse_fredholm());
                instance(
                    name,
                    agree,
                    0.0,
                    format!("fredholm={} index={:?}", r.is_fredholm, r.index),
                    replay,
                )
            }
            Err(err) => errored(name, err, replay),
        }
    }));
    out
}

fn atkinson_regular_gallery(o: &SuiteOptions) -> Vec<Instance> {
    gallery()
        .par_iter()
        .map(|e| {
            let t = gallery_tower(e, &o.levels);
            let replay = gallery_replay(e, o);
            match fredholm_check_regular(&t, o.tol_rank) {
                Ok(r) => {
                    let agree = [&r.direct, &r.transform]
                        .iter()
                        .all(|p| p.is_fredholm == p.pseudo_inverse_fredholm());
                    let expected = r.is_fredholm == e.expected.fredholm;
                    instance(
                        &e.name,
                        agree && r.verdicts_agree && expected,
                        0.0,
                        format!(
                            "direct={}/{} transform={}/{} (criterion/pseudo-inverse)",
                            r.direct.is_fredholm,
                            r.direct.pseudo_inverse_fredholm(),
                            r.transform.is_fredholm,
                            r.transform.pseudo_inverse_fredholm()
                        ),
                        replay,
                    )
                }
                Err(err) => errored(&e.name, err, replay),
            }
        })
        .collect()
}

fn transform_instance(name: String, t: &OperatorTower, o: &SuiteOptions, replay: Value) -> Instance {
    match transform_summary(t) {
        Ok((levels, regular)) => {
            let worst = levels
                .iter()
                .map(|l| l.defect_residual.max(l.adjoint_residual).max(l.round_trip))
                .fold(0.0, f64::max);
            let norm = levels.iter().map(|l| l.norm_f).fold(0.0, f64::max);
            instance(
                name,
                regular && transform_levels_pass(&levels, o.tol_residual),
                worst,
                format!("norm_f={norm:.15}"),
                replay,
            )
        }
        Err(err) => errored(name, err, replay),
    }
}

fn bounded_transform_suite(o: &SuiteOptions) -> Vec<Instance> {
    let mut out: Vec<Instance> = gallery()
        .par_iter()
        .map(|e| transform_instance(e.name.clone(), &gallery_tower(e, &o.levels), o, gallery_replay(e, o)))
        .collect();
    out.par_extend((0..RANDOM_TOWER_COUNT).into_par_iter().map(|i| {
        let (s, mut r) = seeded(o.seed, i);
        let d = r.random_range(1..=2);
        let t = random_bounded_tower(&mut r, d, &o.levels);
        let replay = json!({ "instance_seed": s, "d": d, "generator": t.generator, "levels": o.levels });
        transform_instance(format!("random-tower-{i}"), &t, o, replay)
    }));
    out
}

fn lemma42(o: &SuiteOptions) -> Vec<Instance> {
    gallery()
        .par_iter()
        .map(|e| {
            let t = gallery_tower(e, &o.levels);
            let replay = gallery_replay(e, o);
            match verify_subspace_identities(&t, o.tol_rank) {
                Ok(r) => {
                    let dims: Vec<String> = r
                        .levels
                        .iter()
                        .map(|l| format!("{}:{}/{}", l.level, l.ker_dim, l.coker_dim))
                        .collect();
                    instance(
                        &e.name,
                        r.max_residual <= o.tol_residual && (r.dims_stable || !e.expected.fredholm),
                        r.max_residual,
                        format!("ker/coker {}", dims.join(" ")),
                        replay,
                    )
                }
                Err(err) => errored(&e.name, err, replay),
            }
        })
        .collect()
}

fn index_equality(o: &SuiteOptions) -> Vec<Instance> {
    gallery()
        .par_iter()
        .map(|e| {
            let t = gallery_tower(e, &o.levels);
            let replay = gallery_replay(e, o);
            match fredholm_check_regular(&t, o.tol_rank) {
                Ok(r) => {
                    let ok = if e.expected.fredholm {
                        r.is_fredholm && r.indices_agree && Some(r.direct.index) == e.expected.index
                    } else {
                        !r.direct.is_fredholm && !r.transform.is_fredholm
                    };
                    let detail = if r.is_fredholm {
                        format!("direct={} transform={}", r.direct.index, r.transform.index)
                    } else {
                        format!("not fredholm (direct={} transform={})", r.direct.is_fredholm, r.transform.is_fredholm)
                    };
                    instance(&e.name, ok, 0.0, detail, replay)
                }
                Err(err) => errored(&e.name, err, replay),
            }
        })
        .collect()
}

/// Runs a suite by name; `None` for an unknown name.
pub fn run_suite(name: &str, o: &SuiteOptions) -> Option<SuiteReport> {
    let instances = match name {
        "psi-isomorphism" => psi_isomorphism(o),
        "atkinson-bounded" => atkinson_bounded(o),
        "atkinson-regular" => atkinson_regular(o),
        "bounded-transform" => bounded_transform_suite(o),
        "lemma42" => lemma42(o),
        "index-equality" => index_equality(o),
        _ => return None,
    };
    let passed = instances.iter().all(|i| i.passed);
    Some(SuiteReport {
        tool_version: VERSION.to_string(),
        suite: name.to_string(),
        seed: o.seed,
        levels: o.levels.clone(),
        tol_rank: o.tol_rank,
        tol_residual: o.tol_residual,
        instances,
        passed,
    })
}
