//! Score of the unnormalized EDA density in `x`.

use crate::error::{DivselError, Result};
use crate::numeric::{expm1_ratio, pow_pos};

/// `psi(x) = d/dx [(beta-1)/2 ln x - D_beta(x||mu)/phi]` and its derivative
/// `psi'(x)`. The divergence gradient `(x^beta - mu^beta)/beta` is evaluated
/// as `mu^beta expm1(beta ln(x/mu))/beta`, which tends to `ln(x/mu)` at `beta = 0`.
pub fn eda_score(x: f64, mu: f64, beta: f64, phi: f64) -> Result<(f64, f64)> {
    for (name, v) in [("x", x), ("mu", mu), ("phi", phi)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(DivselError::support(format!("score needs {name} > 0, got {v}")));
        }
    }
    if !beta.is_finite() {
        return Err(DivselError::param("beta must be finite"));
    }
    let grad = pow_pos(mu, beta) * expm1_ratio(beta, (x / mu).ln());
    let psi = 0.5 * (beta - 1.0) / x - grad / phi;
    let psi_prime = -0.5 * (beta - 1.0) / (x * x) - pow_pos(x, beta - 1.0) / phi;
    Ok((psi, psi_prime))
}
