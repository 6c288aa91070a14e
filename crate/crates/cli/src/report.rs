//! Run reports and their JSON / CSV renderings.

use binary_povm::encode::ShiftScale;
use binary_povm::estimation::Comparison;
use binary_povm::locc::{BinaryBellTerm, TermResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::scenario::{Kind, Mode};

/// Exact mismatch or residuals above this flag the run.
pub const FAIL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "FAILED")]
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probability {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampled {
    pub value: f64,
    pub std_error: f64,
    pub shots: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_imag: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error_imag: Option<f64>,
    /// Estimated subset probabilities for multi-party runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probabilities: Vec<Probability>,
}

/// Worst case over every binary POVM built during the run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residuals {
    pub povm_completeness: f64,
    pub povm_commutator: f64,
    pub dilation_unitarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub kind: Kind,
    pub mode: Mode,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    pub oracle: f64,
    pub reconstructed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_imag: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstructed_imag: Option<f64>,
    pub abs_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<Sampled>,
    pub probabilities: Vec<Probability>,
    pub shift_scales: Vec<ShiftScale>,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_terms: Option<Vec<TermResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_terms: Option<Vec<BinaryBellTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub elapsed_ms: f64,
}

impl RunReport {
    /// Set `status` and `failures` from the exact error and residuals.
    pub fn finalize_status(&mut self) {
        let mut failures = Vec::new();
        if exceeds(self.abs_error) {
            failures.push(format!(
                "|reconstructed - oracle| = {:e} exceeds {FAIL_TOL:e}",
                self.abs_error
            ));
        }
        let r = self.residuals;
        for (name, value) in [
            ("povm_completeness", r.povm_completeness),
            ("povm_commutator", r.povm_commutator),
            ("dilation_unitarity", r.dilation_unitarity),
        ] {
            if exceeds(value) {
                failures.push(format!("{name} residual {value:e} exceeds {FAIL_TOL:e}"));
            }
        }
        self.status = if failures.is_empty() {
            Status::Ok
        } else {
            Status::Failed
        };
        self.failures = failures;
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Header plus one row. Nested objects become dotted columns; arrays are
    /// dropped.
    pub fn to_csv(&self) -> CliResult<String> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Output(e.to_string()))?;
        let mut columns = Vec::new();
        flatten("", &value, &mut columns);
        let mut writer = csv::Writer::from_writer(Vec::new());
        let out = |e: csv::Error| CliError::Output(e.to_string());
        writer
            .write_record(columns.iter().map(|(k, _)| k))
            .map_err(out)?;
        writer
            .write_record(columns.iter().map(|(_, v)| v))
            .map_err(out)?;
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }
}

/// NaN counts as exceeding.
fn exceeds(value: f64) -> bool {
    value.is_nan() || value > FAIL_TOL
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(_) => {}
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            schema_version: 1,
            name: "x, y".into(),
            kind: Kind::Single,
            mode: Mode::Exact,
            status: Status::Ok,
            failures: vec![],
            oracle: 1.0,
            reconstructed: 1.0,
            oracle_imag: None,
            reconstructed_imag: None,
            abs_error: 0.0,
            sampled: None,
            probabilities: vec![Probability {
                label: "p0".into(),
                value: 1.0,
            }],
            shift_scales: vec![ShiftScale {
                a_minus: 1.0,
                a_plus: 2.0,
            }],
            residuals: Residuals::default(),
            witness_terms: None,
            bell_constant: None,
            bell_terms: None,
            comparison: None,
            elapsed_ms: 0.5,
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(RunReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn csv_flattens_scalars_only() {
        let csv = sample().to_csv().unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("residuals.povm_completeness"));
        assert!(!header.contains("probabilities"));
        assert!(!header.contains("shift_scales"));
        assert!(lines
            .next()
            .unwrap()
            .starts_with("1,\"x, y\",single,exact,OK"));
    }

    #[test]
    fn status_flags_exact_mismatch_and_residuals() {
        let mut r = sample();
        r.abs_error = 2e-9;
        r.finalize_status();
        assert_eq!(r.status, Status::Failed);
        assert_eq!(r.failures.len(), 1);

        let mut r = sample();
        r.residuals.dilation_unitarity = f64::NAN;
        r.finalize_status();
        assert_eq!(r.status, Status::Failed);

        let mut r = sample();
        r.abs_error = 1e-12;
        r.finalize_status();
        assert_eq!(r.status, Status::Ok);
    }
}
