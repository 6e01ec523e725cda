//! Model-fitting backends: multiplicative-update NMF for the beta and alpha
//! divergences and projective NMF for the gamma-divergence.

mod nmf;
mod pnmf;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{DivergenceSpec, Family};
use crate::error::{DivselError, Result};
use crate::estimators::{Fit, ModelFitter};

pub use nmf::{nmf_alpha, nmf_beta};
pub use pnmf::{pnmf_euclidean, pnmf_gamma};

/// Default factor and denominator floor.
pub const DEFAULT_FLOOR: f64 = 1e-12;
pub const DEFAULT_ITERS: usize = 100;
/// Euclidean PNMF iterations used to warm-start gamma PNMF.
pub const WARM_START_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorizationKind {
    /// `V ~ W H`
    LinearNmf,
    /// `V ~ W W^T V`
    Pnmf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    RandomUniform,
    Provided { w: Array2<f64>, h: Option<Array2<f64>> },
    EuclideanWarmStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iters: usize,
    pub seed: u64,
    pub floor: f64,
    /// `1` marks observed cells, `0` missing ones.
    pub mask: Option<Array2<f64>>,
    pub init: Init,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_ITERS,
            seed: 0,
            floor: DEFAULT_FLOOR,
            mask: None,
            init: Init::RandomUniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationModel {
    pub w: Array2<f64>,
    pub h: Option<Array2<f64>>,
    pub rank: usize,
    pub kind: FactorizationKind,
    /// Objective before the first update followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    /// Iterations at which the objective rose by more than `1e-10` relative.
    pub monotonicity_violations: Vec<usize>,
}

impl FactorizationModel {
    /// The approximation `W H` or `W W^T V`.
    pub fn approximation(&self, v: &Array2<f64>) -> Array2<f64> {
        match (&self.kind, &self.h) {
            (FactorizationKind::LinearNmf, Some(h)) => self.w.dot(h),
            _ => self.w.dot(&self.w.t().dot(v)),
        }
    }

    /// Row labels by the largest entry of each row of `W` (lowest index on ties).
    pub fn row_clusters(&self) -> Vec<usize> {
        self.w
            .rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for (k, v) in r.iter().enumerate() {
                    if *v > r[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Relative tolerance of the monotonicity bookkeeping.
const MONOTONE_TOL: f64 = 1e-10;

fn record(trace: &mut Vec<f64>, violations: &mut Vec<usize>, value: f64) {
    if let Some(&last) = trace.last() {
        if value > last * (1.0 + MONOTONE_TOL) + f64::MIN_POSITIVE {
            log::debug!("objective rose at iteration {}: {last} -> {value}", trace.len());
            violations.push(trace.len());
        }
    }
    trace.push(value);
}

fn check_matrix(v: &Array2<f64>, rank: usize, cfg: &FitConfig) -> Result<()> {
    let (f, n) = v.dim();
    if f == 0 || n == 0 {
        return Err(DivselError::EmptyInput);
    }
    if rank == 0 || rank > f.min(n) {
        return Err(DivselError::param(format!("rank {rank} must lie in 1..={}", f.min(n))));
    }
    if let Some(((i, j), x)) = v.indexed_iter().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(DivselError::support(format!("V[{i}, {j}] = {x} must be nonnegative")));
    }
    if !(cfg.floor > 0.0 && cfg.floor.is_finite()) {
        return Err(DivselError::param("the factor floor must be positive"));
    }
    if let Some(m) = &cfg.mask {
        if m.dim() != v.dim() {
            return Err(DivselError::param(format!(
                "mask shape {:?} does not match data shape {:?}",
                m.dim(),
                v.dim()
            )));
        }
        if m.iter().any(|x| *x != 0.0 && *x != 1.0) {
            return Err(DivselError::param("mask entries must be 0 or 1"));
        }
        if let Some(i) = m.rows().into_iter().position(|r| r.sum() == 0.0) {
            return Err(DivselError::param(format!("row {i} has no observed cells")));
        }
        if let Some(j) = m.columns().into_iter().position(|c| c.sum() == 0.0) {
            return Err(DivselError::param(format!("column {j} has no observed cells")));
        }
    }
    Ok(())
}

/// Mean of the observed cells.
fn observed_mean(v: &Array2<f64>, mask: Option<&Array2<f64>>) -> f64 {
    match mask {
        Some(m) => (v * m).sum() / m.sum(),
        None => v.mean().unwrap_or(1.0),
    }
}

/// Uniform `(0, 1]` entries times `scale`.
fn random_factor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| (1.0 - rng.random::<f64>()) * scale)
}

/// Fits `mu` by factorizing the data reshaped to `rows x cols` (row-major).
#[derive(Debug, Clone)]
pub struct NmfFitter {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub config: FitConfig,
}

impl NmfFitter {
    fn matrix(&self, x: &[f64]) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), x.to_vec()).map_err(|_| {
            DivselError::param(format!(
                "data of length {} is not a {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            ))
        })
    }
}

impl ModelFitter for NmfFitter {
    fn fit(&self, x: &[f64], spec: DivergenceSpec) -> Result<Fit> {
        let v = self.matrix(x)?;
        let model = match spec.family {
            Family::Beta => nmf_beta(&v, self.rank, spec.param, &self.config)?,
            Family::Alpha => nmf_alpha(&v, self.rank, spec.param, &self.config)?,
            other => {
                return Err(DivselError::Unsupported(format!(
                    "NMF fitting supports the beta and alpha families, not {other}"
                )))
            }
        };
        Ok(Fit {
            mu: model.approximation(&v).into_iter().collect(),
            iterations: Some(model.objective_trace.len() - 1),
        })
    }

    fn name(&self) -> &str {
        "nmf"
    }
}

/// Fits `mu = W W^T V` by gamma-divergence projective NMF.
#[derive(Debug, Clone)]
pub struct PnmfFitter {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub config: FitConfig,
}

impl ModelFitter for PnmfFitter {
    fn fit(&self, x: &[f64], spec: DivergenceSpec) -> Result<Fit> {
        if spec.family != Family::Gamma {
            return Err(DivselError::Unsupported(format!(
                "projective NMF fitting supports the gamma family, not {}",
                spec.family
            )));
        }
        let v = Array2::from_shape_vec((self.rows, self.cols), x.to_vec()).map_err(|_| {
            DivselError::param(format!("data of length {} is not {}x{}", x.len(), self.rows, self.cols))
        })?;
        let model = pnmf_gamma(&v, self.rank, spec.param, &self.config)?;
        Ok(Fit {
            mu: model.approximation(&v).into_iter().collect(),
            iterations: Some(model.objective_trace.len() - 1),
        })
    }

    fn name(&self) -> &str {
        "pnmf"
    }
}
