use ndarray::{Array2, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_matrix, random_factor, record, FactorizationKind, FactorizationModel, FitConfig, Init, WARM_START_ITERS};
use crate::divergence::{gamma_div, DataPair};
use crate::error::{DivselError, Result};
use crate::numeric::log_sum_exp;

/// Stabilizing exponent of the gamma PNMF multiplicative update.
pub const PNMF_STEP_EXPONENT: f64 = 0.5;

fn normalize_columns(w: &mut Array2<f64>, floor: f64) {
    for mut col in w.axis_iter_mut(Axis(1)) {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|x| (x / norm).max(floor));
        }
    }
}

fn euclidean_objective(v: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let r = v - &w.dot(&w.t().dot(v));
    r.iter().map(|x| x * x).sum()
}

/// `W <- W * 2 A W / (W W^T A W + A W W^T W)` with `A = V V^T`.
fn euclidean_step(a: &Array2<f64>, w: &mut Array2<f64>, floor: f64) {
    let aw = a.dot(&*w);
    let den = w.dot(&w.t().dot(&aw)) + aw.dot(&w.t().dot(&*w));
    Zip::from(w).and(&aw).and(&den).for_each(|x, &n, &d| {
        *x = (*x * 2.0 * n / d.max(floor)).max(floor);
    });
}

fn initial_w(v: &Array2<f64>, rank: usize, cfg: &FitConfig) -> Result<Array2<f64>> {
    match &cfg.init {
        Init::Provided { w, .. } => {
            if w.dim() != (v.nrows(), rank) {
                return Err(DivselError::param("provided W does not match the data rows and rank"));
            }
            Ok(w.mapv(|x| x.max(cfg.floor)))
        }
        Init::RandomUniform | Init::EuclideanWarmStart => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut w = random_factor(&mut rng, v.nrows(), rank, 1.0);
            normalize_columns(&mut w, cfg.floor);
            Ok(w)
        }
    }
}

/// Euclidean projective NMF `V ~ W W^T V`, used as a warm start.
pub fn pnmf_euclidean(v: &Array2<f64>, rank: usize, cfg: &FitConfig) -> Result<FactorizationModel> {
    check_matrix(v, rank, cfg)?;
    if cfg.mask.is_some() {
        return Err(DivselError::Unsupported("projective NMF does not take a mask".into()));
    }
    let mut w = initial_w(v, rank, cfg)?;
    let a = v.dot(&v.t());
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut violations = Vec::new();
    record(&mut trace, &mut violations, euclidean_objective(v, &w));
    for _ in 0..cfg.max_iters {
        euclidean_step(&a, &mut w, cfg.floor);
        record(&mut trace, &mut violations, euclidean_objective(v, &w));
    }
    Ok(FactorizationModel {
        w,
        h: None,
        rank,
        kind: FactorizationKind::Pnmf,
        objective_trace: trace,
        monotonicity_violations: violations,
    })
}

fn gamma_objective(v: &Array2<f64>, mu: &Array2<f64>, gamma: f64) -> Result<f64> {
    let x: Vec<f64> = v.iter().copied().collect();
    let m: Vec<f64> = mu.iter().copied().collect();
    gamma_div(&DataPair::new(&x, &m)?, gamma)
}

fn approximation(v: &Array2<f64>, w: &Array2<f64>, floor: f64) -> Array2<f64> {
    w.dot(&w.t().dot(v)).mapv(|x| x.max(floor))
}

/// One multiplicative step `W <- W * (grad- / grad+)^eta` followed by unit
/// column norms. With `G = dD/dmu = A - B`,
/// `A = mu^g / sum mu^(g+1)` and `B = V mu^(g-1) / sum V mu^g`, the gradient in
/// `W` is `G V^T W + V G^T W`, split by the signs of `A` and `B`.
fn gamma_step(v: &Array2<f64>, w: &mut Array2<f64>, gamma: f64, floor: f64) {
    let mu = approximation(v, w, floor);
    let lmu = mu.mapv(f64::ln);
    let ls1 = log_sum_exp(&lmu.iter().map(|l| (gamma + 1.0) * l).collect::<Vec<_>>());
    let ls2 = log_sum_exp(
        &Zip::from(v).and(&lmu).map_collect(|&x, &l| x.ln() + gamma * l).into_raw_vec_and_offset().0,
    );
    let a = lmu.mapv(|l| (gamma * l - ls1).exp());
    let b = Zip::from(v).and(&lmu).map_collect(|&x, &l| (x.ln() + (gamma - 1.0) * l - ls2).exp());
    let vtw = v.t().dot(&*w);
    let plus = a.dot(&vtw) + v.dot(&a.t().dot(&*w));
    let minus = b.dot(&vtw) + v.dot(&b.t().dot(&*w));
    Zip::from(&mut *w).and(&plus).and(&minus).for_each(|x, &p, &m| {
        *x = (*x * (m / p.max(floor)).powf(PNMF_STEP_EXPONENT)).max(floor);
    });
    normalize_columns(w, floor);
}

/// Gamma-divergence projective NMF `V ~ W W^T V` over `W >= 0` with unit-norm
/// columns. The data must be strictly positive.
pub fn pnmf_gamma(v: &Array2<f64>, rank: usize, gamma: f64, cfg: &FitConfig) -> Result<FactorizationModel> {
    if !gamma.is_finite() {
        return Err(DivselError::param("gamma must be finite"));
    }
    check_matrix(v, rank, cfg)?;
    if cfg.mask.is_some() {
        return Err(DivselError::Unsupported("projective NMF does not take a mask".into()));
    }
    if let Some(((i, j), _)) = v.indexed_iter().find(|(_, x)| **x <= 0.0) {
        return Err(DivselError::support(format!("gamma PNMF needs V > 0, V[{i}, {j}] = 0")));
    }
    let mut w = if cfg.init == Init::EuclideanWarmStart {
        let warm = FitConfig { max_iters: WARM_START_ITERS, ..cfg.clone() };
        pnmf_euclidean(v, rank, &warm)?.w
    } else {
        initial_w(v, rank, cfg)?
    };
    normalize_columns(&mut w, cfg.floor);
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut violations = Vec::new();
    record(&mut trace, &mut violations, gamma_objective(v, &approximation(v, &w, cfg.floor), gamma)?);
    for _ in 0..cfg.max_iters {
        gamma_step(v, &mut w, gamma, cfg.floor);
        record(&mut trace, &mut violations, gamma_objective(v, &approximation(v, &w, cfg.floor), gamma)?);
    }
    Ok(FactorizationModel {
        w,
        h: None,
        rank,
        kind: FactorizationKind::Pnmf,
        objective_trace: trace,
        monotonicity_violations: violations,
    })
}
