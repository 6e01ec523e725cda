//! Log-densities of the four Tweedie special cases that have closed forms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DivselError, Result};
use crate::numeric::ln_gamma;

/// Tweedie special cases, indexed by power `p` (and `beta = 1 - p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormCase {
    Gaussian,
    Poisson,
    Gamma,
    InverseGaussian,
}

impl ClosedFormCase {
    pub const ALL: [ClosedFormCase; 4] = [
        ClosedFormCase::Gaussian,
        ClosedFormCase::Poisson,
        ClosedFormCase::Gamma,
        ClosedFormCase::InverseGaussian,
    ];

    /// The matching beta-divergence parameter.
    pub fn beta(self) -> f64 {
        match self {
            ClosedFormCase::Gaussian => 1.0,
            ClosedFormCase::Poisson => 0.0,
            ClosedFormCase::Gamma => -1.0,
            ClosedFormCase::InverseGaussian => -2.0,
        }
    }

    /// Tweedie power `p = 1 - beta`.
    pub fn power(self) -> f64 {
        1.0 - self.beta()
    }

    pub fn from_power(p: f64) -> Option<Self> {
        ClosedFormCase::ALL.into_iter().find(|c| c.power() == p)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClosedFormCase::Gaussian => "gaussian",
            ClosedFormCase::Poisson => "poisson",
            ClosedFormCase::Gamma => "gamma",
            ClosedFormCase::InverseGaussian => "inverse_gaussian",
        }
    }
}

impl fmt::Display for ClosedFormCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClosedFormCase {
    type Err = DivselError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "normal" => Ok(ClosedFormCase::Gaussian),
            "poisson" => Ok(ClosedFormCase::Poisson),
            "gamma" => Ok(ClosedFormCase::Gamma),
            "inverse_gaussian" | "inversegaussian" | "ig" => Ok(ClosedFormCase::InverseGaussian),
            other => Err(DivselError::param(format!("unknown distribution '{other}'"))),
        }
    }
}

/// Poisson log-pmf `x ln mu - mu - ln Gamma(x+1)` at integer `x`, and the
/// Stirling continuation `x ln mu - mu - ln(2 pi x)/2 - x ln x + x` elsewhere.
fn poisson_unit(x: f64, mu: f64) -> f64 {
    if x == 0.0 {
        return -mu;
    }
    if x.fract() == 0.0 {
        x * mu.ln() - mu - ln_gamma(x + 1.0)
    } else {
        x * mu.ln() - mu - 0.5 * (2.0 * std::f64::consts::PI * x).ln() - x * x.ln() + x
    }
}

/// Single-entry log-density.
pub fn closed_form_term(x: f64, mu: f64, phi: f64, case: ClosedFormCase) -> f64 {
    match case {
        ClosedFormCase::Gaussian => {
            -0.5 * (2.0 * std::f64::consts::PI * phi).ln() - (x - mu) * (x - mu) / (2.0 * phi)
        }
        // p(x; mu, phi) = p_PO(x/phi; mu/phi) / phi
        ClosedFormCase::Poisson => poisson_unit(x / phi, mu / phi) - phi.ln(),
        ClosedFormCase::Gamma => {
            let k = 1.0 / phi;
            (k - 1.0) * x.ln() - x / (phi * mu) - k * (phi * mu).ln() - ln_gamma(k)
        }
        ClosedFormCase::InverseGaussian => {
            -0.5 * (2.0 * std::f64::consts::PI * phi * x * x * x).ln()
                - (0.5 * x / (mu * mu) - 1.0 / mu + 0.5 / x) / phi
        }
    }
}

/// Sum of single-entry log-densities over `x` against `mu` with dispersion `phi`.
pub fn closed_form_logpdf(x: &[f64], mu: &[f64], phi: f64, case: ClosedFormCase) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(DivselError::LengthMismatch { x: x.len(), mu: mu.len() });
    }
    if x.is_empty() {
        return Err(DivselError::EmptyInput);
    }
    if !(phi.is_finite() && phi > 0.0) {
        return Err(DivselError::param(format!("phi must be positive, got {phi}")));
    }
    let needs_positive_x = !matches!(case, ClosedFormCase::Gaussian | ClosedFormCase::Poisson);
    for (i, (&xi, &mi)) in x.iter().zip(mu).enumerate() {
        if !xi.is_finite() || (case != ClosedFormCase::Gaussian && xi < 0.0) {
            return Err(DivselError::support(format!("x[{i}] = {xi} is outside the {case} support")));
        }
        if needs_positive_x && xi == 0.0 {
            return Err(DivselError::support(format!("x[{i}] = 0 but the {case} density needs x > 0")));
        }
        if !(mi.is_finite() && (mi > 0.0 || case == ClosedFormCase::Gaussian)) {
            return Err(DivselError::support(format!("mu[{i}] = {mi} is outside the {case} mean range")));
        }
    }
    Ok(x.iter().zip(mu).map(|(&a, &b)| closed_form_term(a, b, phi, case)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_at_mean() {
        let v = closed_form_logpdf(&[3.0], &[3.0], 0.7, ClosedFormCase::Gaussian).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI * 0.7).ln()).abs() < 1e-15);
    }

    #[test]
    fn inverse_gaussian_at_mean() {
        let v = closed_form_logpdf(&[1.0], &[1.0], 1.0, ClosedFormCase::InverseGaussian).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn poisson_integer_is_exact_pmf() {
        // P(X = 3 | mu = 2) = 2^3 e^-2 / 6
        let v = closed_form_logpdf(&[3.0], &[2.0], 1.0, ClosedFormCase::Poisson).unwrap();
        let exact = (8.0f64 * (-2.0f64).exp() / 6.0).ln();
        assert!((v - exact).abs() < 1e-13);
        let zero = closed_form_logpdf(&[0.0], &[2.0], 1.0, ClosedFormCase::Poisson).unwrap();
        assert!((zero + 2.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_continuation_close_to_pmf() {
        let a = closed_form_term(20.0, 18.0, 1.0, ClosedFormCase::Poisson);
        let b = closed_form_term(20.0 + 1e-9, 18.0, 1.0, ClosedFormCase::Poisson);
        // Stirling's error at x = 20 is about 1/(12 x)
        assert!((a - b).abs() < 1.0 / 200.0);
    }

    #[test]
    fn case_round_trip() {
        for c in ClosedFormCase::ALL {
            assert_eq!(c.as_str().parse::<ClosedFormCase>().unwrap(), c);
            assert_eq!(ClosedFormCase::from_power(c.power()), Some(c));
        }
        assert_eq!(ClosedFormCase::from_power(1.5), None);
    }

    #[test]
    fn support_errors() {
        assert!(closed_form_logpdf(&[0.0], &[1.0], 1.0, ClosedFormCase::Gamma).is_err());
        assert!(closed_form_logpdf(&[1.0], &[1.0], 0.0, ClosedFormCase::Gamma).is_err());
        assert!(closed_form_logpdf(&[1.0, 2.0], &[1.0], 1.0, ClosedFormCase::Gamma).is_err());
        assert!(closed_form_logpdf(&[-1.0], &[1.0], 1.0, ClosedFormCase::Gaussian).is_ok());
    }
}
