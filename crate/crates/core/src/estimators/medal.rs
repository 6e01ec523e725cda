use rayon::prelude::*;

use super::{assemble, Estimator, ModelFitter, PointDiagnostics, PointOutcome, SelectionGrid, SelectionResult};
use crate::densities::{EdaLikelihood, NormalizerMode};
use crate::divergence::{connecting_scalar_alpha, connecting_scalar_beta, DataPair, DivergenceSpec, Family};
use crate::error::{DivselError, Result};
use crate::numeric::golden_max;
use crate::quadrature::QuadratureRule;

/// Tuning of the dispersion profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedalOptions {
    pub normalizer: NormalizerMode,
    /// Golden-section refinement of `ln phi` around the best grid cell.
    pub refine_phi: bool,
}

impl Default for MedalOptions {
    fn default() -> Self {
        Self { normalizer: NormalizerMode::Auto, refine_phi: true }
    }
}

/// `y = x^alpha / |alpha|^(2 alpha)`, the map under which
/// `D_beta(y || m) = D_alpha(x || mu)` with `beta = 1/alpha - 1`.
pub fn alpha_transform(x: &[f64], alpha: f64) -> Vec<f64> {
    let shift = 2.0 * alpha * alpha.abs().ln();
    x.iter().map(|v| (alpha * v.ln() - shift).exp()).collect()
}

/// `max_phi [lik(phi)] + offset` over the grid, refined between the grid
/// neighbours of the best cell.
fn profile_phi(lik: &EdaLikelihood<'_>, phis: &[f64], refine: bool) -> Result<(f64, f64)> {
    let values: Vec<f64> = phis
        .iter()
        .map(|&p| lik.loglik(p).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    if !values[best].is_finite() {
        return Err(DivselError::Numerical(format!(
            "EDA likelihood is not finite anywhere on the dispersion grid at beta {}",
            lik.beta()
        )));
    }
    let (mut value, mut phi) = (values[best], phis[best]);
    if refine && phis.len() > 1 {
        let lo = phis[best.saturating_sub(1)].ln();
        let hi = phis[(best + 1).min(phis.len() - 1)].ln();
        let (s, v) = golden_max(|s| lik.loglik(s.exp()).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-7);
        if v > value {
            value = v;
            phi = s.exp();
        }
    }
    Ok((value, phi))
}

fn check_data(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(DivselError::EmptyInput);
    }
    match x.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(i) => Err(DivselError::support(format!(
            "x[{i}] = {} must be positive for EDA likelihoods",
            x[i]
        ))),
        None => Ok(()),
    }
}

fn fitted(fitter: &dyn ModelFitter, x: &[f64], spec: DivergenceSpec) -> Result<(Vec<f64>, Option<usize>)> {
    let fit = fitter.fit(x, spec)?;
    if fit.mu.len() != x.len() {
        return Err(DivselError::LengthMismatch { x: x.len(), mu: fit.mu.len() });
    }
    if let Some(i) = fit.mu.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(DivselError::Numerical(format!(
            "{} fit produced mu[{i}] = {}",
            fitter.name(),
            fit.mu[i]
        )));
    }
    Ok((fit.mu, fit.iterations))
}

/// Profile of the beta-EDA likelihood of `x` against `mu`.
fn beta_point(x: &[f64], mu: &[f64], beta: f64, grid: &SelectionGrid, rule: &QuadratureRule, opts: MedalOptions) -> Result<(f64, f64, f64)> {
    let lik = EdaLikelihood::new(x, mu, beta, opts.normalizer, rule)?;
    let (v, phi) = profile_phi(&lik, grid.phi_values(), opts.refine_phi)?;
    Ok((v, phi, lik.divergence()))
}

/// Profile of the alpha likelihood: the beta-EDA likelihood of the transformed
/// data plus the log-Jacobian `-beta sum ln y + N ln|beta + 1|`.
fn alpha_point(x: &[f64], mu: &[f64], alpha: f64, grid: &SelectionGrid, rule: &QuadratureRule, opts: MedalOptions) -> Result<(f64, f64, f64)> {
    if alpha == 0.0 {
        return Err(DivselError::param("alpha = 0 corresponds to beta -> inf and is excluded"));
    }
    let beta = 1.0 / alpha - 1.0;
    let y = alpha_transform(x, alpha);
    let m = alpha_transform(mu, alpha);
    let lik = EdaLikelihood::new(&y, &m, beta, opts.normalizer, rule)?;
    let (v, phi) = profile_phi(&lik, grid.phi_values(), opts.refine_phi)?;
    let jacobian = -beta * y.iter().map(|t| t.ln()).sum::<f64>() + y.len() as f64 * (beta + 1.0).abs().ln();
    Ok((v + jacobian, phi, lik.divergence()))
}

fn point(
    family: Family,
    param: f64,
    x: &[f64],
    fitter: &dyn ModelFitter,
    grid: &SelectionGrid,
    rule: &QuadratureRule,
    opts: MedalOptions,
) -> Result<PointOutcome> {
    let spec = DivergenceSpec::new(family, param)?;
    let (mu, iterations) = fitted(fitter, x, spec)?;
    let (scale, (value, phi, divergence)) = match family {
        Family::Beta => (None, beta_point(x, &mu, param, grid, rule, opts)?),
        Family::Alpha => (None, alpha_point(x, &mu, param, grid, rule, opts)?),
        Family::Gamma => {
            let c = connecting_scalar_beta(&DataPair::new(x, &mu)?, param)?;
            let scaled: Vec<f64> = mu.iter().map(|m| c * m).collect();
            (Some(c), beta_point(x, &scaled, param, grid, rule, opts)?)
        }
        Family::Renyi => {
            let c = connecting_scalar_alpha(&DataPair::new(x, &mu)?, param)?;
            let scaled: Vec<f64> = mu.iter().map(|m| c * m).collect();
            (Some(c), alpha_point(x, &scaled, param, grid, rule, opts)?)
        }
    };
    Ok(PointOutcome {
        value,
        phi: Some(phi),
        diagnostics: PointDiagnostics {
            fit_iterations: iterations,
            divergence: Some(divergence),
            scale,
            error: None,
        },
    })
}

/// Maximum EDA likelihood selection over `grid` for any family. Gamma and
/// Renyi fits are rescaled by their connecting scalar and scored with the beta
/// (`beta = gamma`) and alpha (`alpha = rho`) likelihoods respectively.
pub fn medal_select(
    family: Family,
    x: &[f64],
    fitter: &dyn ModelFitter,
    grid: &SelectionGrid,
    rule: &QuadratureRule,
    opts: MedalOptions,
) -> Result<SelectionResult> {
    check_data(x)?;
    match family {
        Family::Alpha if grid.param_values().contains(&0.0) => {
            return Err(DivselError::param("alpha grids must exclude 0"));
        }
        Family::Renyi if grid.param_values().iter().any(|r| *r <= 0.0) => {
            return Err(DivselError::param("Renyi grids must be positive"));
        }
        _ => {}
    }
    let points: Vec<PointOutcome> = grid
        .param_values()
        .par_iter()
        .map(|&param| PointOutcome::from_result(point(family, param, x, fitter, grid, rule, opts)))
        .collect();
    assemble(family, Estimator::Medal, grid, points)
}

pub fn medal_select_beta(x: &[f64], fitter: &dyn ModelFitter, grid: &SelectionGrid, rule: &QuadratureRule) -> Result<SelectionResult> {
    medal_select(Family::Beta, x, fitter, grid, rule, MedalOptions::default())
}

pub fn medal_select_alpha(x: &[f64], fitter: &dyn ModelFitter, grid: &SelectionGrid, rule: &QuadratureRule) -> Result<SelectionResult> {
    medal_select(Family::Alpha, x, fitter, grid, rule, MedalOptions::default())
}

pub fn select_gamma(x: &[f64], fitter: &dyn ModelFitter, grid: &SelectionGrid, rule: &QuadratureRule) -> Result<SelectionResult> {
    medal_select(Family::Gamma, x, fitter, grid, rule, MedalOptions::default())
}

pub fn select_renyi(x: &[f64], fitter: &dyn ModelFitter, grid: &SelectionGrid, rule: &QuadratureRule) -> Result<SelectionResult> {
    medal_select(Family::Renyi, x, fitter, grid, rule, MedalOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{alpha_div, beta_div};
    use crate::estimators::{PrecomputedFitter, ScalarFitter};
    use crate::quadrature::shared_rule;

    #[test]
    fn transform_identity() {
        let x = [0.4, 1.3, 7.0];
        let mu = [1.0, 0.9, 5.5];
        for a in [0.5, 2.0, -1.0] {
            let b = 1.0 / a - 1.0;
            let y = alpha_transform(&x, a);
            let m = alpha_transform(&mu, a);
            let lhs = beta_div(&DataPair::new(&y, &m).unwrap(), b).unwrap();
            let rhs = alpha_div(&DataPair::new(&x, &mu).unwrap(), a).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "alpha {a}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn jacobian_matches_direct_derivative() {
        // ln|dy/dx| = ln|alpha| - 2 alpha ln|alpha| + (alpha - 1) ln x
        for a in [0.5, 2.0, -1.0, -0.3] {
            let b = 1.0 / a - 1.0;
            let x = 2.7f64;
            let y = alpha_transform(&[x], a)[0];
            let printed = -b * y.ln() + (b + 1.0).abs().ln();
            let direct = a.abs().ln() - 2.0 * a * a.abs().ln() + (a - 1.0) * x.ln();
            assert!((printed - direct).abs() < 1e-12, "alpha {a}");
        }
    }

    #[test]
    fn single_point_grid_is_gaussian_density() {
        let rule = shared_rule(2000).unwrap();
        let grid = SelectionGrid::new(vec![1.0], vec![1.0]).unwrap();
        let opts = MedalOptions { refine_phi: false, ..Default::default() };
        let r = medal_select(Family::Beta, &[8.0], &PrecomputedFitter::new(vec![7.0]).unwrap(), &grid, &rule, opts).unwrap();
        let gauss = -0.5 - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((r.profile_loglik[0] - gauss).abs() < 1e-9);
        assert_eq!(r.best_param, 1.0);
        assert_eq!(r.best_phi, 1.0);
    }

    #[test]
    fn alpha_one_equals_beta_zero() {
        let rule = shared_rule(2000).unwrap();
        let x = [0.7, 1.9, 3.1, 2.2];
        let grid = SelectionGrid::new(vec![0.0, 1.0], SelectionGrid::default_phi()).unwrap();
        let b = medal_select(Family::Beta, &x, &ScalarFitter, &grid, &rule, MedalOptions::default()).unwrap();
        let agrid = SelectionGrid::new(vec![1.0], SelectionGrid::default_phi()).unwrap();
        let a = medal_select(Family::Alpha, &x, &ScalarFitter, &agrid, &rule, MedalOptions::default()).unwrap();
        assert!((a.profile_loglik[0] - b.profile_loglik[0]).abs() < 1e-9);
    }

    #[test]
    fn failing_points_become_neg_inf() {
        struct Flaky;
        impl ModelFitter for Flaky {
            fn fit(&self, x: &[f64], spec: DivergenceSpec) -> Result<crate::estimators::Fit> {
                if spec.param > 0.5 {
                    Err(DivselError::Convergence("stalled".into()))
                } else {
                    ScalarFitter.fit(x, spec)
                }
            }
            fn name(&self) -> &str {
                "flaky"
            }
        }
        let rule = shared_rule(500).unwrap();
        let grid = SelectionGrid::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap();
        let r = medal_select(Family::Beta, &[1.0, 2.0], &Flaky, &grid, &rule, MedalOptions::default()).unwrap();
        assert_eq!(r.profile_loglik[1], f64::NEG_INFINITY);
        assert!(r.diagnostics[1].error.as_deref().unwrap().contains("stalled"));
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn rejects_bad_grids_and_data() {
        let rule = shared_rule(100).unwrap();
        let g0 = SelectionGrid::new(vec![-1.0, 0.0], vec![1.0]).unwrap();
        assert!(medal_select(Family::Alpha, &[1.0], &ScalarFitter, &g0, &rule, MedalOptions::default()).is_err());
        assert!(medal_select(Family::Renyi, &[1.0], &ScalarFitter, &g0, &rule, MedalOptions::default()).is_err());
        let g = SelectionGrid::new(vec![1.0], vec![1.0]).unwrap();
        assert!(medal_select(Family::Beta, &[1.0, 0.0], &ScalarFitter, &g, &rule, MedalOptions::default()).is_err());
    }
}
