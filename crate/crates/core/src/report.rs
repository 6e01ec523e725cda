//! Run reports and selection curves.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DivselError, Result};
use crate::estimators::SelectionResult;

/// Shape and SHA-256 of the little-endian `f64` bytes of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
}

impl DatasetFingerprint {
    pub fn of(m: &Array2<f64>) -> Self {
        let mut h = Sha256::new();
        for v in m.iter() {
            h.update(v.to_le_bytes());
        }
        Self { rows: m.nrows(), cols: m.ncols(), sha256: hex::encode(h.finalize()) }
    }
}

/// The settings a selection ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub family: String,
    pub estimator: String,
    pub model: String,
    pub rank: Option<usize>,
    pub param_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub quadrature_order: usize,
    pub seed: u64,
    pub iterations: Option<usize>,
    pub dropped_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetFingerprint,
    pub config: ConfigEcho,
    pub selection: SelectionResult,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DivselError::Numerical(format!("report encoding: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DivselError::Parse {
            path: "report".into(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// `param,profile_loglik,best_phi` rows; failed points read `-inf,nan`.
pub fn curve_csv(r: &SelectionResult) -> String {
    let mut out = String::from("param,profile_loglik,best_phi\n");
    for ((p, v), phi) in r.param_values.iter().zip(&r.profile_loglik).zip(&r.per_point_phi) {
        let v = if v.is_finite() { format!("{v:?}") } else { "-inf".into() };
        let phi = phi.map_or_else(|| "nan".into(), |x| format!("{x:?}"));
        out.push_str(&format!("{p:?},{v},{phi}\n"));
    }
    out
}
