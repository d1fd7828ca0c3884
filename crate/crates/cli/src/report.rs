use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::error::CliError;
use crate::operator_file::Entry;

pub const SCHEMA_VERSION: &str = "qex-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pure,
    Mixed,
    Spectrum,
    Sweep,
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub d: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub label: usize,
    pub mean_value: f64,
    pub bloch: Vec<f64>,
    pub matrix: Vec<Vec<Entry>>,
    pub commutator_residual: f64,
    /// `Tr(rho^2)`.
    pub purity: f64,
    /// Characteristic coefficients `c_2..c_d` of the returned state.
    pub constants: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub completeness_residual: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub oracle_eigenvalues: Vec<f64>,
    /// Largest distance from a reported value to its oracle counterpart,
    /// relative to `max(1, |value|)`.
    pub max_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_bounds: Option<(f64, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub mode: Mode,
    pub input: InputSummary,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<String>,
    pub solutions: Vec<SolutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn widen(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            if let Some(x) = n.as_f64() {
                *n = fmt_f64(x).parse::<Number>().expect("formatted float is a JSON number");
            }
        }
        Value::Array(items) => items.iter_mut().for_each(widen),
        Value::Object(map) => map.values_mut().for_each(widen),
        _ => {}
    }
}

/// Pretty JSON with every float written at full precision.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Validation(e.to_string()))?;
    widen(&mut v);
    let mut out = serde_json::to_string_pretty(&v).map_err(|e| CliError::Validation(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
