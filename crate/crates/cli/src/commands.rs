//! Command dispatch. Commands return their output and exit code instead of
//! printing, so they can be tested in-process.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use kfredholm::gallery::{gallery, lookup};

use crate::checks::RunError;
use crate::report::run_scenario;
use crate::scenario::{check_levels, parse_scenario, tolerance, CheckKind, Overrides, Scenario, SchemaError};
use crate::suites::{run_suite, SuiteOptions, SUITES};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_BREAKDOWN: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "kfredholm", version, about = "Fredholm analysis of operator towers on Hilbert modules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Relative rank tolerance (0 selects the default).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_rank: Option<f64>,
    /// Residual tolerance for identities.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_residual: Option<f64>,
    /// Truncation levels, e.g. 16,32.
    #[arg(long, global = true, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for batches and suites.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Machine-readable output for `gallery` and `verify`.
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall time in reports (they are then no longer reproducible
    /// byte for byte).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the checks of one or more scenario files (`gallery:<name>` for a
    /// built-in scenario).
    Analyze {
        #[arg(required = true)]
        files: Vec<String>,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// List the built-in towers with their expected verdicts.
    Gallery,
    /// Bounded-transform round trip report for a scenario.
    Transform { file: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn schema(e: &SchemaError) -> Self {
        Outcome {
            code: EXIT_SCHEMA,
            stderr: format!("error: {e}\n"),
            ..Default::default()
        }
    }
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            tol_rank: self.tol_rank,
            tol_residual: self.tol_residual,
            levels: self.levels.clone(),
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let mut out = match &cli.command {
        Command::Analyze { files } => analyze(cli, files, None),
        Command::Transform { file } => analyze(cli, std::slice::from_ref(file), Some(CheckKind::Transform)),
        Command::Verify { suite } => verify(cli, suite),
        Command::Gallery => list_gallery(cli.json),
    };
    if let Some(path) = &cli.out {
        if !out.stdout.is_empty() {
            if let Err(e) = std::fs::write(path, &out.stdout) {
                return Outcome::schema(&SchemaError::new("--out", format!("{}: {e}", path.display())));
            }
            out.stdout.clear();
        }
    }
    out
}

fn load(source: &str, o: &Overrides, only: Option<CheckKind>) -> Result<Scenario, SchemaError> {
    let mut sc = if let Some(name) = source.strip_prefix("gallery:") {
        let e = lookup(name).ok_or_else(|| SchemaError::new("gallery", format!("no gallery entry named {name:?}")))?;
        Scenario::from_gallery(&e)
    } else {
        let text = std::fs::read_to_string(source).map_err(|e| SchemaError::new("(file)", format!("{source}: {e}")))?;
        let stem = Path::new(source)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| source.to_string());
        parse_scenario(&text, &stem)?
    };
    sc.apply(o)?;
    if let Some(k) = only {
        sc.checks = vec![k];
    }
    Ok(sc)
}

fn severity(code: u8) -> u8 {
    match code {
        EXIT_SCHEMA => 3,
        EXIT_BREAKDOWN => 2,
        EXIT_CHECK_FAILED => 1,
        _ => 0,
    }
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn analyze(cli: &Cli, sources: &[String], only: Option<CheckKind>) -> Outcome {
    let o = cli.overrides();
    let results: Vec<(u8, Value, String)> = sources
        .par_iter()
        .map(|src| {
            let run = load(src, &o, only)
                .map_err(RunError::from)
                .and_then(|sc| run_scenario(&sc, cli.seed, cli.timing));
            match run {
                Ok(r) => {
                    let code = if r.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
                    (code, serde_json::to_value(&r).expect("reports serialize"), String::new())
                }
                Err(e) => {
                    let code = match e {
                        RunError::Schema(_) => EXIT_SCHEMA,
                        RunError::Breakdown { .. } => EXIT_BREAKDOWN,
                    };
                    let v = json!({ "source": src, "error": e.to_string(), "exit_code": code });
                    (code, v, format!("error: {src}: {e}\n"))
                }
            }
        })
        .collect();

    let code = results.iter().map(|r| r.0).max_by_key(|&c| severity(c)).unwrap_or(EXIT_OK);
    let stderr: String = results.iter().map(|r| r.2.as_str()).collect();
    let stdout = if let [(c, v, _)] = results.as_slice() {
        if *c == EXIT_OK || *c == EXIT_CHECK_FAILED {
            to_json(v)
        } else {
            String::new()
        }
    } else {
        to_json(&results.iter().map(|r| &r.1).collect::<Vec<_>>())
    };
    Outcome { code, stdout, stderr }
}

fn verify(cli: &Cli, suite: &str) -> Outcome {
    if !SUITES.contains(&suite) {
        return Outcome::schema(&SchemaError::new(
            "--suite",
            format!("unknown suite {suite:?}; expected one of {}", SUITES.join(", ")),
        ));
    }
    let mut opts = SuiteOptions {
        seed: cli.seed,
        ..Default::default()
    };
    let checked = (|| -> Result<(), SchemaError> {
        if let Some(t) = cli.tol_rank {
            opts.tol_rank = tolerance("--tol-rank", t, true)?;
        }
        if let Some(t) = cli.tol_residual {
            opts.tol_residual = tolerance("--tol-residual", t, false)?;
        }
        if let Some(l) = &cli.levels {
            opts.levels = check_levels("--levels", l)?;
        }
        Ok(())
    })();
    if let Err(e) = checked {
        return Outcome::schema(&e);
    }

    let report = run_suite(suite, &opts).expect("suite name checked above");
    let stdout = if cli.json { to_json(&report) } else { report.to_csv() };
    match report.first_failure() {
        None => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Some(first) => {
            let replay = json!({
                "suite": report.suite,
                "seed": report.seed,
                "levels": report.levels,
                "tol_rank": report.tol_rank,
                "tol_residual": report.tol_residual,
                "instance": first,
            });
            Outcome {
                code: EXIT_CHECK_FAILED,
                stdout,
                stderr: format!("{}\n", serde_json::to_string(&replay).expect("replay serializes")),
            }
        }
    }
}

fn list_gallery(as_json: bool) -> Outcome {
    let entries = gallery();
    let stdout = if as_json {
        to_json(&entries)
    } else {
        let mut s = format!("{:<28} {:<9} {:>5} {:<9} {}\n", "name", "fredholm", "index", "unbounded", "source");
        for e in &entries {
            let index = e.expected.index.map_or("-".to_string(), |i| i.to_string());
            s.push_str(&format!(
                "{:<28} {:<9} {:>5} {:<9} {}\n",
                e.name, e.expected.fredholm, index, e.unbounded, e.source
            ));
        }
        s
    };
    Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("kfredholm").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn gallery_shift_scenario_exits_zero() {
        let out = run(&cli(&["analyze", "gallery:shift-1"]));
        assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["results"][0]["details"]["index"], -1);
    }

    #[test]
    fn negative_tolerance_override_names_flag() {
        let out = run(&cli(&["analyze", "gallery:identity", "--tol-rank", "-1"]));
        assert_eq!(out.code, EXIT_SCHEMA);
        assert!(out.stderr.contains("--tol-rank"), "{}", out.stderr);
    }

    #[test]
    fn unknown_suite_is_schema_error() {
        assert_eq!(run(&cli(&["verify", "--suite", "nope"])).code, EXIT_SCHEMA);
    }

    #[test]
    fn gallery_json_lists_every_entry() {
        let out = run(&cli(&["gallery", "--json"]));
        let v: Vec<Value> = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v.len(), gallery().len());
        assert!(v.iter().all(|e| e.get("source").is_some() && e.get("expected").is_some()));
    }

    #[test]
    fn scenario_corpus_exit_codes() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios");
        for (dir, want) in [("pass", EXIT_OK), ("fail", EXIT_CHECK_FAILED), ("schema", EXIT_SCHEMA), ("breakdown", EXIT_BREAKDOWN)] {
            for f in std::fs::read_dir(root.join(dir)).unwrap() {
                let path = f.unwrap().path();
                let out = run(&cli(&["analyze", path.to_str().unwrap()]));
                assert_eq!(out.code, want, "{}: {}", path.display(), out.stderr);
            }
        }
    }

    #[test]
    fn batch_keeps_input_order_and_worst_code() {
        let out = run(&cli(&["analyze", "gallery:identity", "gallery:missing", "gallery:shift-2"]));
        assert_eq!(out.code, EXIT_SCHEMA);
        let v: Vec<Value> = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v[0]["scenario"]["name"], "identity");
        assert_eq!(v[1]["exit_code"], 2);
        assert_eq!(v[2]["scenario"]["name"], "shift-2");
    }
}
