//! Text reports (`key: value` lines) and CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::CliError;

pub const TRAJECTORY_HEADER: &str = "t,x1,x2,x3,p1,p2,p3,nu1,nu2,nu3,n1,n2,n3,E,j3,C1,C2";
pub const STABILITY_MAP_HEADER: &str =
    "r0_over_h,r0,n0,geometric_ok,dynamic_ok,q_positive_definite,dynamic_lhs,dynamic_rhs";
pub const TRIALS_HEADER: &str = "trial,seed,max_deviation,bounded,fault";

/// Floats are written with 17 significant digits so they parse back exactly.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Ordered `key: value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvReport {
    entries: Vec<(String, String)>,
}

impl KvReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.to_owned(), value.into()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, float(value))
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn int(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}: {v}").unwrap();
        }
        out
    }
}

/// Parses a report produced by [`KvReport::render`]. Blank lines and `#`
/// comments are skipped.
pub fn parse_report(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| CliError::validation(format!("report line {}: expected `key: value`", lineno + 1)))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

pub fn report_f64(map: &BTreeMap<String, String>, key: &str) -> Result<f64, CliError> {
    let raw = map
        .get(key)
        .ok_or_else(|| CliError::validation(format!("report lacks `{key}`")))?;
    raw.parse()
        .map_err(|_| CliError::validation(format!("report value for `{key}` is not a number: {raw}")))
}

/// Joins fields with commas, formatting floats with [`float`].
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| float(*v)).collect::<Vec<_>>().join(",")
}
