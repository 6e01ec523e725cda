use serde::{Deserialize, Serialize};

use crate::error::{DivselError, Result};

/// Default dispersion grid: log-spaced over this range.
pub const DEFAULT_PHI_RANGE: (f64, f64) = (1e-4, 1e2);
pub const DEFAULT_PHI_COUNT: usize = 40;

/// Rounds a grid value to 12 decimals so that accumulated steps land exactly
/// on values such as 0 and 1.
pub fn snap_grid_value(v: f64) -> f64 {
    let s = (v * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// Divergence-parameter grid and dispersion grid of a selection scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionGrid {
    param_values: Vec<f64>,
    phi_values: Vec<f64>,
}

impl SelectionGrid {
    pub fn new(param_values: Vec<f64>, phi_values: Vec<f64>) -> Result<Self> {
        if param_values.is_empty() || phi_values.is_empty() {
            return Err(DivselError::param("selection grids must be non-empty"));
        }
        if param_values.iter().any(|v| !v.is_finite()) {
            return Err(DivselError::param("parameter grid values must be finite"));
        }
        if param_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DivselError::param("parameter grid must be strictly increasing"));
        }
        if phi_values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DivselError::param("dispersion grid values must be positive"));
        }
        let mut phi_values = phi_values;
        phi_values.sort_by(f64::total_cmp);
        phi_values.dedup();
        Ok(Self { param_values, phi_values })
    }

    /// `lo, lo + step, ..., hi` (inclusive when `hi - lo` is a multiple of `step`).
    pub fn range(lo: f64, step: f64, hi: f64) -> Result<Vec<f64>> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
            return Err(DivselError::param(format!("invalid grid {lo}:{step}:{hi}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(DivselError::param(format!("grid {lo}:{step}:{hi} has too many points")));
        }
        Ok((0..count).map(|i| snap_grid_value(lo + i as f64 * step)).collect())
    }

    /// `count` log-spaced values from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
            return Err(DivselError::param(format!("invalid dispersion grid {lo}:{hi}:{count}")));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        Ok((0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect())
    }

    pub fn default_phi() -> Vec<f64> {
        Self::log_spaced(DEFAULT_PHI_RANGE.0, DEFAULT_PHI_RANGE.1, DEFAULT_PHI_COUNT)
            .expect("default dispersion grid")
    }

    /// `[-2, 2]` in steps of 0.05 with the default dispersion grid.
    pub fn default_grid() -> Self {
        Self::new(Self::range(-2.0, 0.05, 2.0).expect("default grid"), Self::default_phi())
            .expect("default grid")
    }

    pub fn param_values(&self) -> &[f64] {
        &self.param_values
    }

    pub fn phi_values(&self) -> &[f64] {
        &self.phi_values
    }

    /// The same grid without the point `0` (alpha grids).
    pub fn without_zero(&self) -> Result<Self> {
        Self::new(
            self.param_values.iter().copied().filter(|v| *v != 0.0).collect(),
            self.phi_values.clone(),
        )
    }
}
