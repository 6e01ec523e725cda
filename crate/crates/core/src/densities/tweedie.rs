//! Tweedie densities by series expansion and Tweedie sampling.
//!
//! Uses the canonical parameterisation `theta = mu^(1-p)/(1-p)`,
//! `kappa = mu^(2-p)/(2-p)` under which the series below is the exact
//! remaining factor `f(x, phi, p)` of the density
//! `exp((x theta - kappa)/phi) f(x, phi, p)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::closed_form::{closed_form_term, ClosedFormCase};
use crate::error::{DivselError, Result};
use crate::numeric::{ln_gamma, LogSumExp};

/// Terms below this fraction of the largest one are dropped.
const NEGLIGIBLE: f64 = 1e-17;
/// Budget of series terms in each direction from the dominant index.
const MAX_TERMS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TweedieModel {
    mu: f64,
    phi: f64,
    p: f64,
}

impl TweedieModel {
    pub fn new(mu: f64, phi: f64, p: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(DivselError::param(format!("Tweedie mean must be positive, got {mu}")));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(DivselError::param(format!("Tweedie dispersion must be positive, got {phi}")));
        }
        if !p.is_finite() || (p > 0.0 && p < 1.0) {
            return Err(DivselError::param(format!(
                "Tweedie power must lie outside (0, 1), got {p}"
            )));
        }
        Ok(Self { mu, phi, p })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Poisson rate of the compound Poisson-Gamma representation (`1 < p < 2`).
    pub fn lambda(&self) -> f64 {
        self.mu.powf(2.0 - self.p) / (self.phi * (2.0 - self.p))
    }

    /// Gamma shape `-a` with `a = (2-p)/(1-p)`.
    fn gamma_shape(&self) -> f64 {
        -(2.0 - self.p) / (1.0 - self.p)
    }

    /// Gamma scale `b = phi (p-1) mu^(p-1)`.
    fn gamma_scale(&self) -> f64 {
        self.phi * (self.p - 1.0) * self.mu.powf(self.p - 1.0)
    }

    fn exponent(&self, x: f64) -> f64 {
        let p = self.p;
        let theta = self.mu.powf(1.0 - p) / (1.0 - p);
        let kappa = self.mu.powf(2.0 - p) / (2.0 - p);
        (x * theta - kappa) / self.phi
    }
}

/// How a Tweedie density at power `p` can be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TweedieAvailability {
    ClosedForm(ClosedFormCase),
    Series,
    /// No Tweedie distribution exists for `0 < p < 1`.
    Undefined,
    /// `p < 0`: the distribution exists but no density evaluation is available.
    Unimplemented,
}

impl TweedieAvailability {
    pub fn is_available(self) -> bool {
        matches!(self, TweedieAvailability::ClosedForm(_) | TweedieAvailability::Series)
    }
}

pub fn tweedie_availability(p: f64) -> TweedieAvailability {
    if let Some(case) = ClosedFormCase::from_power(p) {
        TweedieAvailability::ClosedForm(case)
    } else if p > 1.0 {
        TweedieAvailability::Series
    } else if p > 0.0 {
        TweedieAvailability::Undefined
    } else {
        TweedieAvailability::Unimplemented
    }
}

/// Walks `log_term` outward from `start` in both directions until terms fall
/// below `NEGLIGIBLE` of the largest seen, calling `visit` on every index.
fn walk_series<E, V>(start: usize, envelope: E, mut visit: V) -> Result<()>
where
    E: Fn(usize) -> f64,
    V: FnMut(usize),
{
    let cutoff = NEGLIGIBLE.ln();
    let mut best = envelope(start);
    visit(start);
    let mut j = start;
    let mut steps = 0;
    loop {
        j += 1;
        steps += 1;
        let e = envelope(j);
        best = best.max(e);
        visit(j);
        if e - best < cutoff {
            break;
        }
        if steps >= MAX_TERMS {
            return Err(DivselError::Convergence(
                "Tweedie series did not reach negligible terms (upward)".into(),
            ));
        }
    }
    let mut j = start;
    let mut steps = 0;
    while j > 1 {
        j -= 1;
        steps += 1;
        let e = envelope(j);
        best = best.max(e);
        visit(j);
        if e - best < cutoff {
            break;
        }
        if steps >= MAX_TERMS {
            return Err(DivselError::Convergence(
                "Tweedie series did not reach negligible terms (downward)".into(),
            ));
        }
    }
    Ok(())
}

/// Index of the largest series term from the Stirling approximation.
fn dominant_index(estimate: f64) -> Result<usize> {
    if estimate.is_nan() || estimate >= 1e12 {
        return Err(DivselError::Convergence(format!(
            "Tweedie series peaks at term {estimate:e}, beyond the term budget"
        )));
    }
    Ok(estimate.round().max(1.0) as usize)
}

/// `ln sum_j W_j` for `1 < p < 2`.
fn log_series_compound(x: f64, phi: f64, p: f64) -> Result<f64> {
    let a = (2.0 - p) / (1.0 - p);
    let c = -a * x.ln() + a * (p - 1.0).ln() - (1.0 - a) * phi.ln() - (2.0 - p).ln();
    let log_w = |j: usize| {
        let jf = j as f64;
        jf * c - ln_gamma(jf + 1.0) - ln_gamma(-jf * a)
    };
    let jmax = dominant_index(x.powf(2.0 - p) / (phi * (2.0 - p)))?;
    let mut acc = LogSumExp::new();
    walk_series(jmax, log_w, |j| acc.push(log_w(j)))?;
    Ok(acc.value())
}

/// `ln sum_j V_j` for `p > 2`, with positive and negative terms summed apart.
fn log_series_stable(x: f64, phi: f64, p: f64) -> Result<f64> {
    let a = (2.0 - p) / (1.0 - p);
    let c = (a - 1.0) * phi.ln() + a * (p - 1.0).ln() - (p - 2.0).ln() - a * x.ln();
    let envelope = |j: usize| {
        let jf = j as f64;
        ln_gamma(1.0 + jf * a) - ln_gamma(1.0 + jf) + jf * c
    };
    let jmax = dominant_index(x.powf(2.0 - p) / (phi * (p - 2.0)))?;
    let mut pos = LogSumExp::new();
    let mut neg = LogSumExp::new();
    walk_series(jmax, envelope, |j| {
        // (-1)^j sin(-pi j a) = (-1)^(j+1) sin(pi j a)
        let s = (std::f64::consts::PI * j as f64 * a).sin();
        if s == 0.0 {
            return;
        }
        let sign = if j % 2 == 0 { -s.signum() } else { s.signum() };
        let v = envelope(j) + s.abs().ln();
        if sign > 0.0 {
            pos.push(v);
        } else {
            neg.push(v);
        }
    })?;
    let (lp, ln) = (pos.value(), neg.value());
    if lp.is_nan() || ln.is_nan() || lp <= ln {
        return Err(DivselError::Numerical(
            "alternating Tweedie series cancelled to a nonpositive value".into(),
        ));
    }
    let diff = lp + (-(ln - lp).exp()).ln_1p() - std::f64::consts::PI.ln();
    if (ln - lp).exp() > 1.0 - 1e-8 {
        return Err(DivselError::Numerical(
            "alternating Tweedie series lost all precision to cancellation".into(),
        ));
    }
    Ok(diff)
}

/// Log-density of a Tweedie distribution with `1 < p < 2` or `p > 2` by
/// series expansion. At `x = 0` (only for `1 < p < 2`) this is the log point
/// mass `-lambda`.
pub fn tweedie_series_logpdf(x: f64, model: &TweedieModel) -> Result<f64> {
    let p = model.p;
    if p <= 1.0 || p == 2.0 {
        return Err(DivselError::Unsupported(format!(
            "the Tweedie series is defined for 1 < p < 2 and p > 2, got p = {p}"
        )));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(DivselError::support(format!("Tweedie data must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        if p < 2.0 {
            return Ok(-model.lambda());
        }
        return Err(DivselError::support("Tweedie densities with p > 2 need x > 0"));
    }
    let log_sum = if p < 2.0 {
        log_series_compound(x, model.phi, p)?
    } else {
        log_series_stable(x, model.phi, p)?
    };
    Ok(log_sum - x.ln() + model.exponent(x))
}

/// Tweedie log-density by the best available route: closed forms at
/// `p in {0, 1, 2, 3}`, the series elsewhere on `(1, inf)`.
pub fn tweedie_logpdf(x: f64, model: &TweedieModel) -> Result<f64> {
    match tweedie_availability(model.p) {
        TweedieAvailability::ClosedForm(case) => Ok(closed_form_term(x, model.mu, model.phi, case)),
        TweedieAvailability::Series => tweedie_series_logpdf(x, model),
        TweedieAvailability::Undefined => Err(DivselError::Unsupported(format!(
            "no Tweedie distribution exists for p = {}",
            model.p
        ))),
        TweedieAvailability::Unimplemented => Err(DivselError::Unsupported(format!(
            "Tweedie densities with p = {} < 0 are not implemented",
            model.p
        ))),
    }
}

/// Draws `count` samples from the Tweedie distribution. Supported powers are the
/// closed-form cases `p in {0, 1, 2, 3}` and the compound Poisson-Gamma range
/// `1 < p < 2`. For `p = 1` and `phi != 1` the draws are `phi * Poisson(mu/phi)`.
pub fn tweedie_sample(model: &TweedieModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mu, phi, p) = (model.mu, model.phi, model.p);
    let bad = |e: &dyn std::fmt::Display| DivselError::param(format!("sampler: {e}"));
    let out = match tweedie_availability(p) {
        TweedieAvailability::ClosedForm(ClosedFormCase::Gaussian) => {
            let d = Normal::new(mu, phi.sqrt()).map_err(|e| bad(&e))?;
            (0..count).map(|_| d.sample(&mut rng)).collect()
        }
        TweedieAvailability::ClosedForm(ClosedFormCase::Poisson) => {
            let d = Poisson::new(mu / phi).map_err(|e| bad(&e))?;
            (0..count).map(|_| phi * d.sample(&mut rng)).collect()
        }
        TweedieAvailability::ClosedForm(ClosedFormCase::Gamma) => {
            let d = Gamma::new(1.0 / phi, phi * mu).map_err(|e| bad(&e))?;
            (0..count).map(|_| d.sample(&mut rng)).collect()
        }
        TweedieAvailability::ClosedForm(ClosedFormCase::InverseGaussian) => {
            let d = InverseGaussian::new(mu, 1.0 / phi).map_err(|e| bad(&e))?;
            (0..count).map(|_| d.sample(&mut rng)).collect()
        }
        TweedieAvailability::Series if p < 2.0 => {
            let counts = Poisson::new(model.lambda()).map_err(|e| bad(&e))?;
            let (shape, scale) = (model.gamma_shape(), model.gamma_scale());
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let g = counts.sample(&mut rng);
                if g == 0.0 {
                    out.push(0.0);
                } else {
                    // a sum of g iid Gamma(shape, scale) is Gamma(g shape, scale)
                    let d = Gamma::new(g * shape, scale).map_err(|e| bad(&e))?;
                    out.push(d.sample(&mut rng));
                }
            }
            out
        }
        _ => {
            return Err(DivselError::Unsupported(format!(
                "no Tweedie sampler for p = {p}"
            )))
        }
    };
    Ok(out)
}
