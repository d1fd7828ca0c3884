use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use qex_core::linalg::CMatrix;
use qex_core::su_algebra::{self, HermitianOperator};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Entry {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// A Hermitian operator on disk. Parametrized operators carry the value of
/// each parameter and the matrix it multiplies, so that
/// `H(p) = matrix + sum_k (p_k - parameters_k) terms_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub d: usize,
    pub matrix: Vec<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub terms: BTreeMap<String, Vec<Vec<Entry>>>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("qubit", include_str!("../fixtures/qubit.json")),
    ("bec_qutrit", include_str!("../fixtures/bec_qutrit.json")),
    ("degenerate_qutrit", include_str!("../fixtures/degenerate_qutrit.json")),
    ("quartit", include_str!("../fixtures/quartit.json")),
    ("identity", include_str!("../fixtures/identity.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

fn to_matrix(d: usize, rows: &[Vec<Entry>], what: &str) -> Result<CMatrix, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Validation(format!("{what} is not a {d}x{d} matrix")));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j].re, rows[i][j].im)))
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<Entry>> {
    m.row_iter().map(|r| r.iter().map(|z| Entry::from(*z)).collect()).collect()
}

impl OperatorFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("malformed operator file: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn builtin(name: &str) -> Result<Self, CliError> {
        let (_, text) = BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| CliError::Validation(format!("unknown builtin fixture `{name}`")))?;
        Self::parse(text)
    }

    /// `builtin:NAME` selects a shipped fixture; anything else is a path.
    pub fn load(spec: &str) -> Result<Self, CliError> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return Self::builtin(name);
        }
        let text = std::fs::read_to_string(Path::new(spec)).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        su_algebra::check_dimension(self.d)?;
        let m = to_matrix(self.d, &self.matrix, "matrix")?;
        su_algebra::decompose(&m)?;
        for (name, rows) in &self.terms {
            if !self.parameters.contains_key(name) {
                return Err(CliError::Validation(format!("term `{name}` has no parameter value")));
            }
            let t = to_matrix(self.d, rows, &format!("term `{name}`"))?;
            su_algebra::decompose(&t)?;
        }
        Ok(())
    }

    pub fn matrix(&self) -> CMatrix {
        to_matrix(self.d, &self.matrix, "matrix").expect("validated on load")
    }

    pub fn operator(&self) -> Result<HermitianOperator, CliError> {
        Ok(su_algebra::decompose(&self.matrix())?)
    }

    /// The same operator with one parameter moved to `value`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self, CliError> {
        let current = *self
            .parameters
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("unknown parameter `{name}`")))?;
        let term = self
            .terms
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("parameter `{name}` has no term matrix")))?;
        let t = to_matrix(self.d, term, name)?;
        let m = self.matrix() + t.scale(value - current);
        let mut out = self.clone();
        out.matrix = from_matrix(&m);
        out.parameters.insert(name.to_string(), value);
        Ok(out)
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("operator files serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
