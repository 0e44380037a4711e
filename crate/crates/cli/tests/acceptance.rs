//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so that every line is printed and one failure cannot hide the
//! others; the process exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use kfredholm::fredholm::{compact_plus_invertible, fredholm_check_bounded, fredholm_check_regular};
use kfredholm::gallery::{gallery, lookup};
use kfredholm_cli::suites::{
    localization_instances, module_axioms, run_suite, transfer_instances, Instance, SuiteOptions,
};

const SEED: u64 = 0;

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn summarize(instances: &[Instance], tol: f64) -> Verdict {
    let failed: Vec<&str> = instances.iter().filter(|i| !i.passed).map(|i| i.name.as_str()).collect();
    let worst = instances.iter().map(|i| i.max_residual).fold(0.0, f64::max);
    let mut msg = format!("{} instances, max residual {worst:.2e} (tol {tol:.0e})", instances.len());
    if !failed.is_empty() {
        msg.push_str(&format!(", failed: {}", failed.join(" ")));
    }
    (failed.is_empty(), msg)
}

fn module_inner_product_axioms() -> Verdict {
    let inst = module_axioms(SEED, 500);
    assert_eq!(inst.len(), 500);
    summarize(&inst, 1e-12)
}

fn localization_isomorphism() -> Verdict {
    let inst = localization_instances(SEED, 200);
    summarize(&inst, 1e-10)
}

fn kernel_range_transfer() -> Verdict {
    let inst = transfer_instances(SEED, 100);
    summarize(&inst, 1e-10)
}

fn bounded_transform_suite() -> Verdict {
    let r = run_suite("bounded-transform", &SuiteOptions::default()).unwrap();
    let random = r.instances.iter().filter(|i| i.name.starts_with("random-tower")).count();
    let gallery_count = r.instances.len() - random;
    assert_eq!(gallery_count, gallery().len());
    assert_eq!(random, 100);
    let (ok, msg) = summarize(&r.instances, 1e-10);
    (ok, format!("gallery {gallery_count} + random {random}: {msg}; norm <= 1+1e-12, round trip <= 1e-8"))
}

fn subspace_identity_suite() -> Verdict {
    let opts = SuiteOptions {
        levels: vec![16, 32],
        tol_residual: 1e-10,
        ..SuiteOptions::default()
    };
    let r = run_suite("lemma42", &opts).unwrap();
    assert_eq!(r.instances.len(), gallery().len());
    summarize(&r.instances, 1e-10)
}

fn atkinson_equivalence() -> Verdict {
    let mut disagreements = Vec::new();
    let mut checked = 0;
    for e in gallery() {
        let t = e.tower(1, &[16, 32]).unwrap();
        let r = fredholm_check_regular(&t, 0.0).unwrap();
        for rep in [&r.direct, &r.transform] {
            checked += 1;
            if rep.is_fredholm != rep.pseudo_inverse_fredholm() {
                disagreements.push(format!("{}({:?})", e.name, rep.path));
            }
        }
        // the bounded-path verdict, for towers that are bounded
        if !e.unbounded {
            let b = fredholm_check_bounded(&t, 0.0).unwrap();
            checked += 1;
            if b.is_fredholm != b.pseudo_inverse_fredholm() {
                disagreements.push(format!("{}(bounded)", e.name));
            }
        }
    }
    (
        disagreements.is_empty(),
        format!("{checked} verdict pairs, {} disagreements {:?}", disagreements.len(), disagreements),
    )
}

fn index_equality() -> Verdict {
    let cases = [
        ("shift-1", -1),
        ("shift-2", -2),
        ("shift-3", -3),
        ("diagonal-n", 0),
        ("finite-rank-perturbed-shift", -1),
        ("weighted-shift-n", -1),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, want) in cases {
        let t = lookup(name).unwrap().tower(1, &[16, 32]).unwrap();
        let r = fredholm_check_regular(&t, 0.0).unwrap();
        let good = r.direct.is_fredholm
            && r.transform.is_fredholm
            && r.direct.index == want
            && r.transform.index == want;
        ok &= good;
        parts.push(format!("{name}: {}/{} (want {want})", r.direct.index, r.transform.index));
    }
    (ok, parts.join(", "))
}

fn negative_control() -> Verdict {
    let t = lookup("diagonal-decay").unwrap().tower(1, &[16, 32, 64]).unwrap();
    let r = fredholm_check_bounded(&t, 0.0).unwrap();
    let gap = |n: usize| r.levels.iter().find(|l| l.level == n).and_then(|l| l.sigma_gap).unwrap();
    let shrink = gap(16) / gap(64);
    let ok = !r.is_fredholm && !r.closed_range && shrink >= 10.0;
    (
        ok,
        format!(
            "is_fredholm={} closed_range={} sigma_gap 16: {:.6}, 64: {:.6}, shrink {shrink:.3}x (need >= 10x)",
            r.is_fredholm,
            r.closed_range,
            gap(16),
            gap(64)
        ),
    )
}

fn index_zero_decomposition() -> Verdict {
    let t = lookup("diagonal-n").unwrap().tower(1, &[16, 32]).unwrap();
    let d = compact_plus_invertible(&t, 0.5).unwrap();
    let ok = d.rank_stable
        && d.levels
            .iter()
            .all(|l| l.invertible && l.min_sigma_v >= 0.5 && l.rank_k == 1 && l.reconstruction <= 1e-12);
    let parts: Vec<String> = d
        .levels
        .iter()
        .map(|l| {
            format!(
                "N={} min sigma(V)={:.3} rank K={} reconstruction={:.1e}",
                l.level, l.min_sigma_v, l.rank_k, l.reconstruction
            )
        })
        .collect();
    (ok, parts.join("; "))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kfredholm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn corpus() -> Vec<(PathBuf, i32)> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios");
    let mut out = Vec::new();
    for (dir, code) in [("pass", 0), ("fail", 1), ("schema", 2), ("breakdown", 3)] {
        let mut files: Vec<PathBuf> = std::fs::read_dir(root.join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        out.extend(files.into_iter().map(|f| (f, code)));
    }
    out
}

fn cli_contract() -> Verdict {
    let files = corpus();
    let mut problems = Vec::new();
    let mut codes_seen = std::collections::BTreeSet::new();
    for (f, want) in &files {
        let path = f.to_str().unwrap();
        let a = run(&["analyze", path, "--seed", "7"]);
        let b = run(&["analyze", path, "--seed", "7"]);
        let got = a.status.code().unwrap_or(-1);
        codes_seen.insert(got);
        if got != *want {
            problems.push(format!("{}: exit {got}, want {want}", f.display()));
        }
        if a.stdout != b.stdout || a.stderr != b.stderr {
            problems.push(format!("{}: outputs differ between runs", f.display()));
        }
        if *want <= 1 && a.stdout.is_empty() {
            problems.push(format!("{}: no report", f.display()));
        }
    }
    let tol = run(&["analyze", &format!("{}/tests/scenarios/schema/negative-tol-rank.json", env!("CARGO_MANIFEST_DIR"))]);
    if !String::from_utf8_lossy(&tol.stderr).contains("tolerances.tol_rank") {
        problems.push("tol_rank = -1 message does not name tolerances.tol_rank".into());
    }
    let shift = run(&["analyze", "gallery:shift-1"]);
    let report: serde_json::Value = serde_json::from_slice(&shift.stdout).unwrap_or_default();
    if shift.status.code() != Some(0) || report["results"][0]["details"]["index"] != -1 {
        problems.push("gallery:shift-1 does not report index -1 with exit 0".into());
    }
    if run(&["verify", "--suite", "no-such-suite"]).status.code() != Some(2) {
        problems.push("unknown suite does not exit 2".into());
    }
    let ie = run(&["verify", "--suite", "index-equality"]);
    if ie.status.code() != Some(0) {
        problems.push("verify --suite index-equality does not exit 0".into());
    }
    let p1 = run(&["verify", "--suite", "psi-isomorphism", "--seed", "7"]);
    let p2 = run(&["verify", "--suite", "psi-isomorphism", "--seed", "7"]);
    if p1.status.code() != Some(0) || p1.stdout != p2.stdout {
        problems.push("psi-isomorphism --seed 7 is not a deterministic pass".into());
    }
    let g = run(&["gallery", "--json"]);
    let listing: Vec<serde_json::Value> = serde_json::from_slice(&g.stdout).unwrap_or_default();
    if listing.len() < 6 || listing.iter().any(|e| e["expected"].get("index").is_none()) {
        problems.push("gallery --json listing is short or lacks expected indices".into());
    }
    let ok = files.len() >= 10 && codes_seen == [0, 1, 2, 3].into() && problems.is_empty();
    (
        ok,
        format!(
            "{} scenario files, exit codes seen {:?}, two runs each byte-identical; problems: {:?}",
            files.len(),
            codes_seen,
            problems
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("module inner-product axioms", module_inner_product_axioms),
        ("localization is a *-isomorphism", localization_isomorphism),
        ("kernel/range transfer", kernel_range_transfer),
        ("bounded-transform suite", bounded_transform_suite),
        ("kernel/range identities for t and F_t", subspace_identity_suite),
        ("criterion and pseudo-inverse verdicts agree", atkinson_equivalence),
        ("direct and transform indices agree", index_equality),
        ("negative control diagonal-decay", negative_control),
        ("index-zero decomposition of diagonal-n", index_zero_decomposition),
        ("command-line contract", cli_contract),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let (ok, msg) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(p) => {
                let why = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {why}"))
            }
        };
        failed += usize::from(!ok);
        println!(
            "{} {name}: {msg} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
