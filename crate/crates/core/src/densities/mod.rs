//! Log-densities: EDA and ED distributions, the closed-form Tweedie cases, the
//! Tweedie series, and the EDA score.

pub mod closed_form;
pub mod score;
pub mod tweedie;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::divergence::{beta_allows_zero, beta_term};
use crate::error::{DivselError, Result};
use crate::numeric::pow_pos;
use crate::quadrature::{ed_log_normalizer, unit_log_normalizer, Normalizer, QuadratureRule};

pub use closed_form::{closed_form_logpdf, closed_form_term, ClosedFormCase};
pub use score::eda_score;
pub use tweedie::{
    tweedie_availability, tweedie_logpdf, tweedie_sample, tweedie_series_logpdf,
    TweedieAvailability, TweedieModel,
};

/// Above this many distinct `mu` values the unit normalizer is interpolated
/// from a lattice in `ln phi` instead of integrated once per value.
pub const EXACT_GROUP_LIMIT: usize = 64;
/// Lattice spacing in `ln phi_eff` for the interpolated normalizer.
pub const TABLE_STEP: f64 = 0.05;

/// Parameters `(mu, beta, phi)` of a separable EDA density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaModel {
    mu: Vec<f64>,
    beta: f64,
    phi: f64,
}

impl EdaModel {
    pub fn new(mu: Vec<f64>, beta: f64, phi: f64) -> Result<Self> {
        check_positive_vec("mu", &mu)?;
        if !beta.is_finite() {
            return Err(DivselError::param("beta must be finite"));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(DivselError::param(format!("phi must be positive, got {phi}")));
        }
        Ok(Self { mu, beta, phi })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

fn check_positive_vec(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(DivselError::EmptyInput);
    }
    match v.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        Some(i) => Err(DivselError::support(format!("{name}[{i}] = {} must be positive", v[i]))),
        None => Ok(()),
    }
}

/// How the per-entry normalizers are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizerMode {
    /// One quadrature per distinct `mu`.
    Exact,
    /// Cubic Hermite interpolation on a lattice in `ln phi_eff`, using the
    /// normalizer slope as the derivative.
    Interpolated,
    /// `Exact` up to `EXACT_GROUP_LIMIT` distinct `mu` values.
    Auto,
}

/// Unit-`mu` normalizer `ln Z(1, beta, e^s)` as a function of `s = ln phi`.
struct UnitNormalizer<'r> {
    beta: f64,
    rule: &'r QuadratureRule,
    interpolate: bool,
    lattice: Mutex<HashMap<i64, Normalizer>>,
}

impl<'r> UnitNormalizer<'r> {
    fn exact(&self, s: f64) -> Result<Normalizer> {
        unit_log_normalizer(self.beta, s.exp(), self.rule)
    }

    fn node(&self, k: i64) -> Result<Normalizer> {
        if let Some(n) = self.lattice.lock().expect("lattice lock").get(&k) {
            return Ok(*n);
        }
        let n = self.exact(k as f64 * TABLE_STEP)?;
        self.lattice.lock().expect("lattice lock").insert(k, n);
        Ok(n)
    }

    fn eval(&self, s: f64) -> Result<Normalizer> {
        if !self.interpolate {
            return self.exact(s);
        }
        let u = s / TABLE_STEP;
        let k = u.floor();
        let t = u - k;
        let k = k as i64;
        let (n0, n1) = (self.node(k)?, self.node(k + 1)?);
        let h = TABLE_STEP;
        let (t2, t3) = (t * t, t * t * t);
        let log_z = (2.0 * t3 - 3.0 * t2 + 1.0) * n0.log_z
            + (t3 - 2.0 * t2 + t) * h * n0.slope
            + (-2.0 * t3 + 3.0 * t2) * n1.log_z
            + (t3 - t2) * h * n1.slope;
        let slope = (6.0 * t2 - 6.0 * t) / h * (n0.log_z - n1.log_z)
            + (3.0 * t2 - 4.0 * t + 1.0) * n0.slope
            + (3.0 * t2 - 2.0 * t) * n1.slope;
        Ok(Normalizer { log_z, slope })
    }
}

/// EDA log-likelihood of fixed data `x` and fitted `mu` at a given `beta`, as a
/// function of the dispersion. Divergence and augmentation sums are computed
/// once; normalizers are shared between entries with equal `mu`.
pub struct EdaLikelihood<'r> {
    beta: f64,
    len: usize,
    augmentation: f64,
    divergence: f64,
    /// `(ln mu, count)` per distinct `mu`.
    groups: Vec<(f64, f64)>,
    unit: UnitNormalizer<'r>,
}

impl<'r> EdaLikelihood<'r> {
    pub fn new(
        x: &[f64],
        mu: &[f64],
        beta: f64,
        mode: NormalizerMode,
        rule: &'r QuadratureRule,
    ) -> Result<Self> {
        if x.len() != mu.len() {
            return Err(DivselError::LengthMismatch { x: x.len(), mu: mu.len() });
        }
        check_positive_vec("x", x)?;
        check_positive_vec("mu", mu)?;
        if !beta.is_finite() {
            return Err(DivselError::param("beta must be finite"));
        }
        let augmentation = 0.5 * (beta - 1.0) * x.iter().map(|v| v.ln()).sum::<f64>();
        let divergence = x.iter().zip(mu).map(|(&a, &b)| beta_term(a, b, beta)).sum();
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for m in mu {
            *counts.entry(m.to_bits()).or_default() += 1;
        }
        let mut groups: Vec<(f64, f64)> = counts
            .into_iter()
            .map(|(bits, c)| (f64::from_bits(bits).ln(), c as f64))
            .collect();
        groups.sort_by(|a, b| a.0.total_cmp(&b.0));
        let interpolate = match mode {
            NormalizerMode::Exact => false,
            NormalizerMode::Interpolated => true,
            NormalizerMode::Auto => groups.len() > EXACT_GROUP_LIMIT,
        };
        Ok(Self {
            beta,
            len: x.len(),
            augmentation,
            divergence,
            groups,
            unit: UnitNormalizer {
                beta,
                rule,
                interpolate,
                lattice: Mutex::new(HashMap::new()),
            },
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `sum_i D_beta(x_i || mu_i)`.
    pub fn divergence(&self) -> f64 {
        self.divergence
    }

    pub fn distinct_means(&self) -> usize {
        self.groups.len()
    }

    /// Log-likelihood at `phi` and its derivative with respect to `ln phi`.
    pub fn evaluate(&self, phi: f64) -> Result<(f64, f64)> {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(DivselError::param(format!("phi must be positive, got {phi}")));
        }
        let a = 0.5 * (self.beta + 1.0);
        let ln_phi = phi.ln();
        let mut log_z = 0.0;
        let mut slope = 0.0;
        for &(ln_mu, count) in &self.groups {
            let n = self.unit.eval(ln_phi - (self.beta + 1.0) * ln_mu)?;
            log_z += count * (a * ln_mu + n.log_z);
            slope += count * n.slope;
        }
        let value = self.augmentation - self.divergence / phi - log_z;
        if !value.is_finite() {
            return Err(DivselError::Numerical(format!(
                "EDA log-likelihood is not finite at beta {}, phi {phi}",
                self.beta
            )));
        }
        Ok((value, self.divergence / phi - slope))
    }

    pub fn loglik(&self, phi: f64) -> Result<f64> {
        self.evaluate(phi).map(|v| v.0)
    }
}

/// `sum_i [(beta-1)/2 ln x_i - D_beta(x_i||mu_i)/phi - ln Z(mu_i, beta, phi)]`,
/// with one exact normalizer per distinct `mu_i`.
pub fn eda_logpdf(x: &[f64], model: &EdaModel, rule: &QuadratureRule) -> Result<f64> {
    EdaLikelihood::new(x, &model.mu, model.beta, NormalizerMode::Exact, rule)?.loglik(model.phi)
}

/// `sum_i [-D_beta(x_i||mu_i) - ln Z_ED(mu_i, beta)]`: the exponential
/// divergence density without augmentation, at unit dispersion. `mu_i = 0` is
/// accepted for `beta > 0`.
pub fn ed_logpdf(x: &[f64], mu: &[f64], beta: f64, rule: &QuadratureRule) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(DivselError::LengthMismatch { x: x.len(), mu: mu.len() });
    }
    if x.is_empty() {
        return Err(DivselError::EmptyInput);
    }
    if !beta.is_finite() {
        return Err(DivselError::param("beta must be finite"));
    }
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut total = 0.0;
    for (i, (&xi, &mi)) in x.iter().zip(mu).enumerate() {
        if !(xi.is_finite() && xi >= 0.0) || (xi == 0.0 && !beta_allows_zero(beta)) {
            return Err(DivselError::support(format!("x[{i}] = {xi} is outside the support")));
        }
        if !(mi.is_finite() && (mi > 0.0 || (mi == 0.0 && beta > 0.0))) {
            return Err(DivselError::support(format!("mu[{i}] = {mi} is outside the support")));
        }
        let log_z = match memo.get(&mi.to_bits()) {
            Some(v) => *v,
            None => {
                let v = ed_log_normalizer(mi, beta, rule)?;
                memo.insert(mi.to_bits(), v);
                v
            }
        };
        let d = if mi == 0.0 {
            pow_pos(xi, beta + 1.0) / (beta * (beta + 1.0))
        } else {
            beta_term(xi, mi, beta)
        };
        total -= d + log_z;
    }
    Ok(total)
}
