use std::time::Instant;

use serde::{Deserialize, Serialize};

use kfredholm::fredholm::VERSION;

use crate::checks::{run_check, CheckResult, RunError};
use crate::scenario::Scenario;

const FINITENESS_RULE: &str =
    "kernel and cokernel are called finite when their dimensions agree at every checked level";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub results: Vec<CheckResult>,
    pub passed: bool,
    pub finiteness_rule: String,
    /// Only present when timing was requested, so that reports are otherwise
    /// byte-identical between runs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<f64>,
}

/// Runs every requested check once, in the order given.
pub fn run_scenario(sc: &Scenario, seed: u64, timing: bool) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let tower = sc.tower()?;
    let results = sc
        .checks
        .iter()
        .map(|&k| run_check(k, sc, &tower, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = results.iter().all(|r| r.passed);
    Ok(RunReport {
        tool_version: VERSION.to_string(),
        seed,
        scenario: sc.clone(),
        results,
        passed,
        finiteness_rule: FINITENESS_RULE.to_string(),
        wall_time_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{CheckKind, Scenario};
    use kfredholm::gallery::lookup;

    #[test]
    fn gallery_shift_passes_every_check_once() {
        let sc = Scenario::from_gallery(&lookup("shift-1").unwrap());
        let r = run_scenario(&sc, 0, false).unwrap();
        assert!(r.passed, "{:#?}", r.results);
        let kinds: Vec<CheckKind> = r.results.iter().map(|c| c.check).collect();
        assert_eq!(kinds, sc.checks);
        assert_eq!(r.results[0].details["index"], -1);
        assert!(r.wall_time_ms.is_none());
    }

    #[test]
    fn decomposition_of_nonzero_index_fails_the_check() {
        let mut sc = Scenario::from_gallery(&lookup("shift-2").unwrap());
        sc.checks = vec![CheckKind::Decompose];
        let r = run_scenario(&sc, 0, false).unwrap();
        assert!(!r.passed);
    }
}
