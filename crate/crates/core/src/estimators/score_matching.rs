use rayon::prelude::*;

use super::{assemble, Estimator, ModelFitter, PointDiagnostics, PointOutcome, SelectionGrid, SelectionResult};
use crate::densities::eda_score;
use crate::divergence::{beta_term, connecting_scalar_beta, DataPair, DivergenceSpec, Family};
use crate::error::{DivselError, Result};
use crate::numeric::{expm1_ratio, pow_pos};

/// Nonnegative-support score-matching objective of the EDA density,
/// `J = mean_i [2 x psi(x) + x^2 psi'(x) + x^2 psi(x)^2 / 2]`. Lower is better.
pub fn sm_objective_eda(x: &[f64], mu: &[f64], beta: f64, phi: f64) -> Result<f64> {
    if x.len() != mu.len() {
        return Err(DivselError::LengthMismatch { x: x.len(), mu: mu.len() });
    }
    if x.is_empty() {
        return Err(DivselError::EmptyInput);
    }
    let mut total = 0.0;
    for (&xi, &mi) in x.iter().zip(mu) {
        let (psi, dpsi) = eda_score(xi, mi, beta, phi)?;
        total += 2.0 * xi * psi + xi * xi * dpsi + 0.5 * xi * xi * psi * psi;
    }
    Ok(total / x.len() as f64)
}

/// `J(u) = c0 + c1 u + c2 u^2` in `u = 1/phi`.
#[derive(Debug, Clone, Copy)]
struct Quadratic {
    c0: f64,
    c1: f64,
    c2: f64,
}

impl Quadratic {
    fn new(x: &[f64], mu: &[f64], beta: f64) -> Self {
        // psi = A - u B and psi' = A' - u C with x A = (beta-1)/2 and x^2 A' = -(beta-1)/2
        let half = 0.5 * (beta - 1.0);
        let n = x.len() as f64;
        let (mut c1, mut c2) = (0.0, 0.0);
        for (&xi, &mi) in x.iter().zip(mu) {
            let b = pow_pos(mi, beta) * expm1_ratio(beta, (xi / mi).ln());
            let c = pow_pos(xi, beta - 1.0);
            c1 += -2.0 * xi * b - xi * xi * c - xi * half * b;
            c2 += 0.5 * xi * xi * b * b;
        }
        Self { c0: half + 0.5 * half * half, c1: c1 / n, c2: c2 / n }
    }

    fn at(&self, u: f64) -> f64 {
        self.c0 + u * (self.c1 + u * self.c2)
    }
}

fn sm_point(
    family: Family,
    param: f64,
    x: &[f64],
    fitter: &dyn ModelFitter,
    grid: &SelectionGrid,
) -> Result<PointOutcome> {
    let spec = DivergenceSpec::new(family, param)?;
    let fit = fitter.fit(x, spec)?;
    if fit.mu.len() != x.len() {
        return Err(DivselError::LengthMismatch { x: x.len(), mu: fit.mu.len() });
    }
    if let Some(i) = fit.mu.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(DivselError::Numerical(format!("fit produced mu[{i}] = {}", fit.mu[i])));
    }
    let (mu, scale) = match family {
        Family::Beta => (fit.mu, None),
        Family::Gamma => {
            let c = connecting_scalar_beta(&DataPair::new(x, &fit.mu)?, param)?;
            (fit.mu.iter().map(|m| c * m).collect(), Some(c))
        }
        _ => {
            return Err(DivselError::Unsupported(format!(
                "score-matching selection supports the beta and gamma families, not {family}"
            )))
        }
    };
    let q = Quadratic::new(x, &mu, param);
    let phis = grid.phi_values();
    let mut best = (q.at(1.0 / phis[0]), phis[0]);
    for &p in &phis[1..] {
        let j = q.at(1.0 / p);
        if j < best.0 {
            best = (j, p);
        }
    }
    // the objective is quadratic in 1/phi, so the continuous minimiser over the
    // grid range is available in closed form
    if q.c2 > 0.0 {
        let (umin, umax) = (1.0 / phis[phis.len() - 1], 1.0 / phis[0]);
        let u = (-q.c1 / (2.0 * q.c2)).clamp(umin, umax);
        let j = q.at(u);
        if j < best.0 {
            best = (j, 1.0 / u);
        }
    }
    if !best.0.is_finite() {
        return Err(DivselError::Numerical(format!("score-matching objective is {}", best.0)));
    }
    let divergence = x.iter().zip(&mu).map(|(&a, &b)| beta_term(a, b, param)).sum();
    Ok(PointOutcome {
        value: -best.0,
        phi: Some(best.1),
        diagnostics: PointDiagnostics {
            fit_iterations: fit.iterations,
            divergence: Some(divergence),
            scale,
            error: None,
        },
    })
}

/// Score-matching selection: minimises `sm_objective_eda` over the parameter and
/// dispersion grids. The stored curve is `-J` so that higher is better.
/// Gamma fits are rescaled by the connecting scalar and scored with `beta = gamma`.
pub fn sm_select(
    family: Family,
    x: &[f64],
    fitter: &dyn ModelFitter,
    grid: &SelectionGrid,
) -> Result<SelectionResult> {
    if !matches!(family, Family::Beta | Family::Gamma) {
        return Err(DivselError::Unsupported(format!(
            "score-matching selection supports the beta and gamma families, not {family}"
        )));
    }
    if x.is_empty() {
        return Err(DivselError::EmptyInput);
    }
    if let Some(i) = x.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(DivselError::support(format!("x[{i}] = {} must be positive", x[i])));
    }
    let points: Vec<PointOutcome> = grid
        .param_values()
        .par_iter()
        .map(|&p| PointOutcome::from_result(sm_point(family, p, x, fitter, grid)))
        .collect();
    assemble(family, Estimator::ScoreMatching, grid, points)
}

pub fn sm_select_beta(x: &[f64], fitter: &dyn ModelFitter, grid: &SelectionGrid) -> Result<SelectionResult> {
    sm_select(Family::Beta, x, fitter, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ScalarFitter;

    #[test]
    fn quadratic_matches_objective() {
        let x = [0.3, 1.2, 4.0, 2.2];
        let mu = [1.0, 1.5, 3.0, 2.0];
        for beta in [-2.0, -1.0, 0.0, 0.4, 1.0] {
            let q = Quadratic::new(&x, &mu, beta);
            for phi in [0.1, 1.0, 7.0] {
                let j = sm_objective_eda(&x, &mu, beta, phi).unwrap();
                assert!((q.at(1.0 / phi) - j).abs() < 1e-10 * (1.0 + j.abs()), "beta {beta} phi {phi}");
            }
        }
    }

    #[test]
    fn objective_at_mean() {
        // psi = (beta-1)/(2x) at x = mu
        let (x, beta, phi) = (2.0f64, 0.5, 0.7);
        let psi = 0.5 * (beta - 1.0) / x;
        let dpsi = -0.5 * (beta - 1.0) / (x * x) - x.powf(beta - 1.0) / phi;
        let expected = 2.0 * x * psi + x * x * dpsi + 0.5 * x * x * psi * psi;
        assert!((sm_objective_eda(&[x], &[x], beta, phi).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn single_point_grid() {
        let grid = SelectionGrid::new(vec![0.3], vec![1.0]).unwrap();
        let r = sm_select_beta(&[1.0, 2.0, 3.0], &ScalarFitter, &grid).unwrap();
        assert_eq!(r.best_param, 0.3);
        assert!(sm_select(Family::Alpha, &[1.0], &ScalarFitter, &grid).is_err());
    }
}
