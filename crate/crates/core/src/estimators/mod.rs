//! Divergence-parameter selection: maximum EDA likelihood (MEDAL) over a
//! parameter grid with the dispersion profiled out, its alpha, gamma and Renyi
//! variants, and score-matching selection.

mod grid;
mod medal;
mod score_matching;

use serde::{Deserialize, Serialize};

use crate::divergence::{DivergenceSpec, Family};
use crate::error::{DivselError, Result};
use crate::numeric::log_sum_exp;

pub use grid::{snap_grid_value, SelectionGrid, DEFAULT_PHI_COUNT, DEFAULT_PHI_RANGE};
pub use medal::{
    alpha_transform, medal_select, medal_select_alpha, medal_select_beta, select_gamma,
    select_renyi, MedalOptions,
};
pub use score_matching::{sm_objective_eda, sm_select, sm_select_beta};

/// Keeps the strictly positive entries of `x` (EDA likelihoods live on
/// `(0, inf)`); returns them with the number removed.
pub fn drop_nonpositive(x: &[f64]) -> (Vec<f64>, usize) {
    let kept: Vec<f64> = x.iter().copied().filter(|v| *v > 0.0).collect();
    let removed = x.len() - kept.len();
    (kept, removed)
}

/// A fitted approximation `mu` of the data, with fit metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub mu: Vec<f64>,
    pub iterations: Option<usize>,
}

impl Fit {
    pub fn new(mu: Vec<f64>) -> Self {
        Self { mu, iterations: None }
    }
}

/// Produces `mu = argmin_eta D(x || eta)` for a divergence. Implementations
/// must be re-entrant: grid points are fitted in parallel.
pub trait ModelFitter: Sync {
    fn fit(&self, x: &[f64], spec: DivergenceSpec) -> Result<Fit>;

    fn name(&self) -> &str;
}

/// Fits one common value to every entry: the arithmetic mean for the beta
/// family, the power mean `(mean x^alpha)^(1/alpha)` (geometric mean at
/// `alpha = 0`) for the alpha family, and the arithmetic mean for the
/// scale-invariant gamma and Renyi families, where every constant is optimal.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarFitter;

impl ModelFitter for ScalarFitter {
    fn fit(&self, x: &[f64], spec: DivergenceSpec) -> Result<Fit> {
        if x.is_empty() {
            return Err(DivselError::EmptyInput);
        }
        if let Some(i) = x.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DivselError::support(format!("x[{i}] = {} must be positive", x[i])));
        }
        let n = x.len() as f64;
        let value = match spec.family {
            Family::Alpha if spec.param == 0.0 => (x.iter().map(|v| v.ln()).sum::<f64>() / n).exp(),
            Family::Alpha => {
                let a = spec.param;
                let logs: Vec<f64> = x.iter().map(|v| a * v.ln()).collect();
                ((log_sum_exp(&logs) - n.ln()) / a).exp()
            }
            _ => x.iter().sum::<f64>() / n,
        };
        Ok(Fit::new(vec![value; x.len()]))
    }

    fn name(&self) -> &str {
        "scalar"
    }
}

/// Returns the same externally computed `mu` for every divergence parameter.
#[derive(Debug, Clone)]
pub struct PrecomputedFitter {
    mu: Vec<f64>,
}

impl PrecomputedFitter {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(DivselError::EmptyInput);
        }
        if let Some(i) = mu.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DivselError::support(format!("mu[{i}] = {} must be positive", mu[i])));
        }
        Ok(Self { mu })
    }
}

impl ModelFitter for PrecomputedFitter {
    fn fit(&self, x: &[f64], _spec: DivergenceSpec) -> Result<Fit> {
        if x.len() != self.mu.len() {
            return Err(DivselError::LengthMismatch { x: x.len(), mu: self.mu.len() });
        }
        Ok(Fit::new(self.mu.clone()))
    }

    fn name(&self) -> &str {
        "precomputed"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Medal,
    ScoreMatching,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Medal => "medal",
            Estimator::ScoreMatching => "sm",
        }
    }
}

/// What happened at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub fit_iterations: Option<usize>,
    /// Divergence between the data and the (rescaled) fit used for scoring.
    pub divergence: Option<f64>,
    /// Connecting scalar applied to the fit (gamma and Renyi selection).
    pub scale: Option<f64>,
    pub error: Option<String>,
}

impl PointDiagnostics {
    fn failed(error: &DivselError) -> Self {
        Self { fit_iterations: None, divergence: None, scale: None, error: Some(error.to_string()) }
    }
}

/// Outcome of a selection scan. `profile_loglik` holds the maximum over the
/// dispersion at each parameter (the negated objective for score matching);
/// failed points hold `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub family: Family,
    pub estimator: Estimator,
    pub param_values: Vec<f64>,
    #[serde(with = "crate::serde_nonfinite::vec")]
    pub profile_loglik: Vec<f64>,
    /// Maximising dispersion per point; `None` where the point failed.
    pub per_point_phi: Vec<Option<f64>>,
    pub best_index: usize,
    pub best_param: f64,
    pub best_phi: f64,
    pub diagnostics: Vec<PointDiagnostics>,
}

/// Per-point output of a scan before assembly.
pub(crate) struct PointOutcome {
    pub value: f64,
    pub phi: Option<f64>,
    pub diagnostics: PointDiagnostics,
}

impl PointOutcome {
    pub(crate) fn from_result(r: Result<PointOutcome>) -> PointOutcome {
        r.unwrap_or_else(|e| PointOutcome {
            value: f64::NEG_INFINITY,
            phi: None,
            diagnostics: PointDiagnostics::failed(&e),
        })
    }
}

/// Argmax with lowest-index tie-breaking; fails when every point failed.
pub(crate) fn assemble(
    family: Family,
    estimator: Estimator,
    grid: &SelectionGrid,
    points: Vec<PointOutcome>,
) -> Result<SelectionResult> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if p.value.is_finite() && best.is_none_or(|b| p.value > points[b].value) {
            best = Some(i);
        }
    }
    let Some(best_index) = best else {
        let first = points
            .iter()
            .find_map(|p| p.diagnostics.error.clone())
            .unwrap_or_else(|| "no finite profile value".into());
        return Err(DivselError::Numerical(format!(
            "every grid point failed; first error: {first}"
        )));
    };
    let params = grid.param_values().to_vec();
    Ok(SelectionResult {
        family,
        estimator,
        best_param: params[best_index],
        best_phi: points[best_index].phi.unwrap_or(f64::NAN),
        best_index,
        param_values: params,
        profile_loglik: points.iter().map(|p| p.value).collect(),
        per_point_phi: points.iter().map(|p| p.phi).collect(),
        diagnostics: points.into_iter().map(|p| p.diagnostics).collect(),
    })
}
