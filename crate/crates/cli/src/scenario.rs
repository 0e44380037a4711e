//! Scenario files: parsing and field-level validation.
//!
//! Validation runs on the raw JSON value rather than through derived
//! deserializers so that every error can name the offending field.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use kfredholm::gallery::{lookup, GalleryEntry};
use kfredholm::symbol::Symbol;
use kfredholm::tower::{default_levels, Generator, OperatorTower};

pub const DEFAULT_TOL_RANK: f64 = kfredholm::fredholm::DEFAULT_TOL_RANK;
pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-10;
pub const DEFAULT_TOL_INVERTIBLE: f64 = 0.5;
/// Largest level accepted from a file; level work is cubic.
pub const MAX_LEVEL: usize = 512;
pub const MAX_D: usize = 16;

const KEYS: [&str; 9] = ["name", "d", "m", "levels", "generator", "gallery", "tolerances", "checks", "expect"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub field: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Fredholm,
    Transform,
    Lemma42,
    Psi,
    Decompose,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::Fredholm,
        CheckKind::Transform,
        CheckKind::Lemma42,
        CheckKind::Psi,
        CheckKind::Decompose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Fredholm => "fredholm",
            CheckKind::Transform => "transform",
            CheckKind::Lemma42 => "lemma42",
            CheckKind::Psi => "psi",
            CheckKind::Decompose => "decompose",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_rank: f64,
    pub tol_residual: f64,
    /// Lower bound on the smallest singular value of the invertible part in
    /// the index-zero decomposition.
    pub tol_invertible: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rank: DEFAULT_TOL_RANK,
            tol_residual: DEFAULT_TOL_RESIDUAL,
            tol_invertible: DEFAULT_TOL_INVERTIBLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Expect {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fredholm: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub d: usize,
    pub levels: Vec<usize>,
    pub generator: Generator,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

/// Command-line values that replace the corresponding scenario fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol_rank: Option<f64>,
    pub tol_residual: Option<f64>,
    pub levels: Option<Vec<usize>>,
}

impl Scenario {
    pub fn tower(&self) -> Result<OperatorTower, SchemaError> {
        OperatorTower::new(self.d, self.generator.clone(), self.levels.clone())
            .map_err(|e| SchemaError::new("generator", e.to_string()))
    }

    /// The built-in scenario for a gallery entry. The decomposition check is
    /// only requested where it applies, at index zero.
    pub fn from_gallery(entry: &GalleryEntry) -> Self {
        let mut checks = vec![CheckKind::Fredholm, CheckKind::Transform, CheckKind::Lemma42, CheckKind::Psi];
        if entry.expected.index == Some(0) {
            checks.push(CheckKind::Decompose);
        }
        Scenario {
            name: entry.name.clone(),
            d: 1,
            levels: default_levels(),
            generator: entry.generator.clone(),
            tolerances: Tolerances::default(),
            checks,
            expect: Some(Expect {
                fredholm: Some(entry.expected.fredholm),
                index: entry.expected.index,
            }),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), SchemaError> {
        if let Some(t) = o.tol_rank {
            self.tolerances.tol_rank = tolerance("--tol-rank", t, true)?;
        }
        if let Some(t) = o.tol_residual {
            self.tolerances.tol_residual = tolerance("--tol-residual", t, false)?;
        }
        if let Some(l) = &o.levels {
            self.levels = check_levels("--levels", l)?;
        }
        Ok(())
    }
}

/// Validates a tolerance; `zero_ok` admits 0 as "use the default".
pub fn tolerance(field: &str, v: f64, zero_ok: bool) -> Result<f64, SchemaError> {
    if !v.is_finite() || v < 0.0 || (!zero_ok && v == 0.0) {
        let want = if zero_ok { "a finite number >= 0" } else { "a finite number > 0" };
        return Err(SchemaError::new(field, format!("must be {want}, got {v}")));
    }
    Ok(v)
}

pub fn check_levels(field: &str, levels: &[usize]) -> Result<Vec<usize>, SchemaError> {
    if levels.len() < 2 {
        return Err(SchemaError::new(field, "tower checks need at least two levels"));
    }
    for (i, &n) in levels.iter().enumerate() {
        if n == 0 || n > MAX_LEVEL {
            return Err(SchemaError::new(format!("{field}[{i}]"), format!("must be in 1..={MAX_LEVEL}, got {n}")));
        }
        if i > 0 && n <= levels[i - 1] {
            return Err(SchemaError::new(format!("{field}[{i}]"), "levels must be strictly increasing"));
        }
    }
    Ok(levels.to_vec())
}

fn count(v: &Value, field: &str) -> Result<usize, SchemaError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| SchemaError::new(field, format!("expected a nonnegative integer, got {v}")))
}

fn number(v: &Value, field: &str) -> Result<f64, SchemaError> {
    v.as_f64()
        .ok_or_else(|| SchemaError::new(field, format!("expected a number, got {v}")))
}

fn parse_tolerances(v: &Value) -> Result<Tolerances, SchemaError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SchemaError::new("tolerances", "expected an object"))?;
    let mut t = Tolerances::default();
    for (k, x) in obj {
        let field = format!("tolerances.{k}");
        match k.as_str() {
            "tol_rank" => t.tol_rank = tolerance(&field, number(x, &field)?, true)?,
            "tol_residual" => t.tol_residual = tolerance(&field, number(x, &field)?, false)?,
            "tol_invertible" => t.tol_invertible = tolerance(&field, number(x, &field)?, false)?,
            _ => return Err(SchemaError::new(field, "unknown field")),
        }
    }
    Ok(t)
}

fn parse_checks(v: &Value) -> Result<Vec<CheckKind>, SchemaError> {
    let arr = v
        .as_array()
        .ok_or_else(|| SchemaError::new("checks", "expected an array of check names"))?;
    if arr.is_empty() {
        return Err(SchemaError::new("checks", "at least one check is required"));
    }
    let mut out = Vec::new();
    for (i, c) in arr.iter().enumerate() {
        let field = format!("checks[{i}]");
        let name = c
            .as_str()
            .ok_or_else(|| SchemaError::new(&field, "expected a string"))?;
        let kind = CheckKind::parse(name).ok_or_else(|| {
            SchemaError::new(
                &field,
                format!("unknown check {name:?}; expected one of fredholm, transform, lemma42, psi, decompose"),
            )
        })?;
        if out.contains(&kind) {
            return Err(SchemaError::new(&field, format!("check {name:?} listed twice")));
        }
        out.push(kind);
    }
    Ok(out)
}

fn parse_expect(v: &Value) -> Result<Expect, SchemaError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SchemaError::new("expect", "expected an object"))?;
    let mut e = Expect::default();
    for (k, x) in obj {
        let field = format!("expect.{k}");
        match k.as_str() {
            "fredholm" => {
                e.fredholm = Some(x.as_bool().ok_or_else(|| SchemaError::new(&field, "expected a boolean"))?)
            }
            "index" => e.index = Some(x.as_i64().ok_or_else(|| SchemaError::new(&field, "expected an integer"))?),
            _ => return Err(SchemaError::new(field, "unknown field")),
        }
    }
    Ok(e)
}

/// Finds a weight symbol that does not parse, for a sharper message than the
/// deserializer gives.
fn bad_symbol(v: &Value, path: &str) -> Option<SchemaError> {
    let obj = v.as_object()?;
    for key in ["weights", "values"] {
        if let Some(Value::String(text)) = obj.get(key) {
            if let Err(e) = Symbol::parse(text) {
                return Some(SchemaError::new(format!("{path}.{key}"), e.to_string()));
            }
        }
    }
    let terms = obj.get("terms")?.as_array()?;
    terms
        .iter()
        .enumerate()
        .find_map(|(i, t)| bad_symbol(t, &format!("{path}.terms[{i}]")))
}

fn parse_generator(v: &Value) -> Result<Generator, SchemaError> {
    let g: Generator = serde_json::from_value(v.clone())
        .map_err(|e| bad_symbol(v, "generator").unwrap_or_else(|| SchemaError::new("generator", e.to_string())))?;
    g.validate().map_err(|e| SchemaError::new("generator", e.to_string()))?;
    Ok(g)
}

/// Parses and validates a scenario. `fallback_name` is used when the file
/// has no `name`.
pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<Scenario, SchemaError> {
    let root: Value = serde_json::from_str(text).map_err(|e| SchemaError::new("(document)", format!("malformed JSON: {e}")))?;
    let obj: &Map<String, Value> = root
        .as_object()
        .ok_or_else(|| SchemaError::new("(document)", "expected a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(SchemaError::new(k.as_str(), "unknown field"));
    }

    let entry = match obj.get("gallery") {
        None => None,
        Some(v) => {
            let name = v.as_str().ok_or_else(|| SchemaError::new("gallery", "expected a gallery entry name"))?;
            Some(lookup(name).ok_or_else(|| SchemaError::new("gallery", format!("no gallery entry named {name:?}")))?)
        }
    };
    let mut sc = match (&entry, obj.get("generator")) {
        (Some(_), Some(_)) => return Err(SchemaError::new("generator", "give either generator or gallery, not both")),
        (Some(e), None) => Scenario::from_gallery(e),
        (None, Some(g)) => Scenario {
            name: fallback_name.to_string(),
            d: 1,
            levels: default_levels(),
            generator: parse_generator(g)?,
            tolerances: Tolerances::default(),
            checks: vec![CheckKind::Fredholm],
            expect: None,
        },
        (None, None) => return Err(SchemaError::new("generator", "missing (or name a gallery entry)")),
    };

    if let Some(v) = obj.get("name") {
        sc.name = v
            .as_str()
            .ok_or_else(|| SchemaError::new("name", "expected a string"))?
            .to_string();
    }
    if let Some(v) = obj.get("d") {
        let d = count(v, "d")?;
        if d == 0 || d > MAX_D {
            return Err(SchemaError::new("d", format!("must be in 1..={MAX_D}, got {d}")));
        }
        sc.d = d;
    }
    match (obj.get("m"), obj.get("levels")) {
        (Some(_), Some(_)) => return Err(SchemaError::new("m", "give either m or levels, not both")),
        (Some(v), None) => {
            let m = count(v, "m")?;
            sc.levels = check_levels("m", &[m, 2 * m])?;
        }
        (None, Some(v)) => {
            let arr = v
                .as_array()
                .ok_or_else(|| SchemaError::new("levels", "expected an array of integers"))?;
            let ls = arr
                .iter()
                .enumerate()
                .map(|(i, x)| count(x, &format!("levels[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            sc.levels = check_levels("levels", &ls)?;
        }
        (None, None) => {}
    }
    if let Some(v) = obj.get("tolerances") {
        sc.tolerances = parse_tolerances(v)?;
    }
    if let Some(v) = obj.get("checks") {
        sc.checks = parse_checks(v)?;
    }
    if let Some(v) = obj.get("expect") {
        sc.expect = Some(parse_expect(v)?);
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> SchemaError {
        parse_scenario(text, "x").unwrap_err()
    }

    #[test]
    fn minimal_scenario_gets_defaults() {
        let sc = parse_scenario(r#"{"generator": {"kind": "weighted_shift"}}"#, "file").unwrap();
        assert_eq!(sc.name, "file");
        assert_eq!(sc.levels, vec![16, 32]);
        assert_eq!(sc.checks, vec![CheckKind::Fredholm]);
        assert_eq!(sc.tolerances, Tolerances::default());
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(err(r#"{"generator": {"kind": "diagonal", "values": "1"}, "tolerances": {"tol_rank": -1}}"#).field, "tolerances.tol_rank");
        assert_eq!(err(r#"{"gallery": "shift-1", "levels": [32, 16]}"#).field, "levels[1]");
        assert_eq!(err(r#"{"gallery": "shift-1", "levels": [16]}"#).field, "levels");
        assert_eq!(err(r#"{"gallery": "shift-1", "checks": ["fredholm", "nope"]}"#).field, "checks[1]");
        assert_eq!(err(r#"{"gallery": "shift-1", "d": 0}"#).field, "d");
        assert_eq!(err(r#"{"gallery": "shift-1", "colour": 1}"#).field, "colour");
        assert_eq!(err(r#"{"generator": {"kind": "twist"}}"#).field, "generator");
        assert_eq!(err(r#"{"generator": {"kind": "weighted_shift", "weights": "n^"}}"#).field, "generator.weights");
        let nested = r#"{"generator": {"kind": "sum", "terms": [{"kind": "diagonal", "values": "1"}, {"kind": "diagonal", "values": "n+"}]}}"#;
        assert_eq!(err(nested).field, "generator.terms[1].values");
        assert_eq!(err("{").field, "(document)");
    }

    #[test]
    fn m_expands_to_two_levels() {
        let sc = parse_scenario(r#"{"gallery": "identity", "m": 8}"#, "x").unwrap();
        assert_eq!(sc.levels, vec![8, 16]);
    }

    #[test]
    fn overrides_are_validated() {
        let mut sc = parse_scenario(r#"{"gallery": "identity"}"#, "x").unwrap();
        let bad = Overrides {
            tol_residual: Some(0.0),
            ..Default::default()
        };
        assert_eq!(sc.apply(&bad).unwrap_err().field, "--tol-residual");
        let good = Overrides {
            levels: Some(vec![8, 16, 32]),
            ..Default::default()
        };
        sc.apply(&good).unwrap();
        assert_eq!(sc.levels, vec![8, 16, 32]);
    }
}
