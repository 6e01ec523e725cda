use ndarray::{Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    check_matrix, observed_mean, random_factor, record, FactorizationKind, FactorizationModel,
    FitConfig, Init, WARM_START_ITERS,
};
use crate::divergence::{alpha_allows_zero, alpha_term, beta_allows_zero, beta_term, LIMIT_SWITCH};
use crate::error::{DivselError, Result};

/// Exponent that makes the beta multiplicative update a majorization-minimization
/// step: `1/(1-beta)` below 0, `1` on `[0, 1]`, `1/beta` above 1.
pub(crate) fn beta_update_exponent(beta: f64) -> f64 {
    if beta < 0.0 {
        1.0 / (1.0 - beta)
    } else if beta > 1.0 {
        1.0 / beta
    } else {
        1.0
    }
}

fn weights(v: &Array2<f64>, cfg: &FitConfig) -> Array2<f64> {
    cfg.mask.clone().unwrap_or_else(|| Array2::ones(v.dim()))
}

fn check_zero_support(v: &Array2<f64>, m: &Array2<f64>, allowed: bool, what: &str) -> Result<()> {
    if allowed {
        return Ok(());
    }
    match Zip::indexed(v).and(m).fold(None, |acc, (i, j), &x, &w| {
        acc.or(if x == 0.0 && w != 0.0 { Some((i, j)) } else { None })
    }) {
        Some((i, j)) => Err(DivselError::support(format!("V[{i}, {j}] = 0 is outside the support of {what}"))),
        None => Ok(()),
    }
}

fn initial_factors(v: &Array2<f64>, rank: usize, cfg: &FitConfig) -> Result<(Array2<f64>, Array2<f64>)> {
    let (f, n) = v.dim();
    match &cfg.init {
        Init::Provided { w, h: Some(h) } => {
            if w.dim() != (f, rank) || h.dim() != (rank, n) {
                return Err(DivselError::param("provided factors do not match the data shape and rank"));
            }
            Ok((w.mapv(|x| x.max(cfg.floor)), h.mapv(|x| x.max(cfg.floor))))
        }
        Init::Provided { h: None, .. } => Err(DivselError::param("NMF needs both W and H to be provided")),
        Init::RandomUniform | Init::EuclideanWarmStart => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let scale = 2.0 * (observed_mean(v, cfg.mask.as_ref()) / rank as f64).sqrt();
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let w = random_factor(&mut rng, f, rank, scale).mapv(|x| x.max(cfg.floor));
            let h = random_factor(&mut rng, rank, n, scale).mapv(|x| x.max(cfg.floor));
            Ok((w, h))
        }
    }
}

/// `factor <- max(factor * (num / max(den, floor))^e, floor)`.
fn apply(factor: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, e: f64, floor: f64) {
    Zip::from(factor).and(num).and(den).for_each(|f, &a, &b| {
        let ratio = a / b.max(floor);
        let step = if e == 1.0 { ratio } else { ratio.powf(e) };
        *f = (*f * step).max(floor);
    });
}

fn beta_objective(v: &Array2<f64>, lam: &Array2<f64>, m: &Array2<f64>, beta: f64) -> f64 {
    Zip::from(v).and(lam).and(m).fold(0.0, |acc, &x, &l, &w| {
        if w == 0.0 {
            acc
        } else {
            acc + beta_term(x, l, beta)
        }
    })
}

fn beta_step(v: &Array2<f64>, m: &Array2<f64>, w: &mut Array2<f64>, h: &mut Array2<f64>, beta: f64, floor: f64) {
    let e = beta_update_exponent(beta);
    let lam = w.dot(h);
    let num_base = Zip::from(v).and(&lam).and(m).map_collect(|&x, &l, &k| k * x * l.powf(beta - 1.0));
    let den_base = Zip::from(&lam).and(m).map_collect(|&l, &k| k * l.powf(beta));
    apply(h, &w.t().dot(&num_base), &w.t().dot(&den_base), e, floor);
    let lam = w.dot(h);
    let num_base = Zip::from(v).and(&lam).and(m).map_collect(|&x, &l, &k| k * x * l.powf(beta - 1.0));
    let den_base = Zip::from(&lam).and(m).map_collect(|&l, &k| k * l.powf(beta));
    apply(w, &num_base.dot(&h.t()), &den_base.dot(&h.t()), e, floor);
}

/// Beta-divergence NMF `V ~ W H` by multiplicative updates
/// `H <- H * ([W^T (V * L^(beta-1))] / [W^T L^beta])^e` (and symmetrically for `W`),
/// restricted to observed cells when a mask is given.
pub fn nmf_beta(v: &Array2<f64>, rank: usize, beta: f64, cfg: &FitConfig) -> Result<FactorizationModel> {
    if !beta.is_finite() {
        return Err(DivselError::param("beta must be finite"));
    }
    check_matrix(v, rank, cfg)?;
    let m = weights(v, cfg);
    check_zero_support(v, &m, beta_allows_zero(beta), &format!("the beta = {beta} divergence"))?;
    let (mut w, mut h) = initial_factors(v, rank, cfg)?;
    if cfg.init == Init::EuclideanWarmStart {
        for _ in 0..WARM_START_ITERS {
            beta_step(v, &m, &mut w, &mut h, 1.0, cfg.floor);
        }
    }
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut violations = Vec::new();
    record(&mut trace, &mut violations, beta_objective(v, &w.dot(&h), &m, beta));
    for _ in 0..cfg.max_iters {
        beta_step(v, &m, &mut w, &mut h, beta, cfg.floor);
        record(&mut trace, &mut violations, beta_objective(v, &w.dot(&h), &m, beta));
    }
    Ok(FactorizationModel {
        w,
        h: Some(h),
        rank,
        kind: FactorizationKind::LinearNmf,
        objective_trace: trace,
        monotonicity_violations: violations,
    })
}

fn alpha_objective(v: &Array2<f64>, lam: &Array2<f64>, m: &Array2<f64>, alpha: f64) -> f64 {
    Zip::from(v).and(lam).and(m).fold(0.0, |acc, &x, &l, &w| {
        if w == 0.0 {
            acc
        } else {
            acc + alpha_term(x, l, alpha)
        }
    })
}

fn alpha_step(v: &Array2<f64>, m: &Array2<f64>, w: &mut Array2<f64>, h: &mut Array2<f64>, alpha: f64, floor: f64) {
    let near_zero = alpha.abs() < LIMIT_SWITCH;
    // near alpha = 0 the update is exp(weighted mean of ln(V/L))
    let base = |v: &Array2<f64>, lam: &Array2<f64>| {
        Zip::from(v).and(lam).and(m).map_collect(|&x, &l, &k| {
            if k == 0.0 {
                0.0
            } else if near_zero {
                (x / l).ln()
            } else {
                (x / l).powf(alpha)
            }
        })
    };
    let finish = |factor: &mut Array2<f64>, num: Array2<f64>, den: Array2<f64>| {
        Zip::from(factor).and(&num).and(&den).for_each(|f, &a, &b| {
            let r = a / b.max(floor);
            let step = if near_zero {
                r.exp()
            } else if alpha == 1.0 {
                r
            } else {
                r.max(0.0).powf(1.0 / alpha)
            };
            *f = (*f * step).max(floor);
        });
    };
    let lam = w.dot(h);
    let r = base(v, &lam);
    let (num, den) = (w.t().dot(&r), w.t().dot(m));
    finish(h, num, den);
    let lam = w.dot(h);
    let r = base(v, &lam);
    let (num, den) = (r.dot(&h.t()), m.dot(&h.t()));
    finish(w, num, den);
}

/// Alpha-divergence NMF by `H <- H * ([W^T (V/L)^alpha] / [W^T 1])^(1/alpha)` and the
/// symmetric rule for `W`; near `alpha = 0` the geometric-mean limit is used.
pub fn nmf_alpha(v: &Array2<f64>, rank: usize, alpha: f64, cfg: &FitConfig) -> Result<FactorizationModel> {
    if !alpha.is_finite() || alpha == 0.0 {
        return Err(DivselError::param("alpha-NMF needs a finite nonzero alpha"));
    }
    check_matrix(v, rank, cfg)?;
    let m = weights(v, cfg);
    check_zero_support(v, &m, alpha_allows_zero(alpha), &format!("the alpha = {alpha} divergence"))?;
    let (mut w, mut h) = initial_factors(v, rank, cfg)?;
    if cfg.init == Init::EuclideanWarmStart {
        for _ in 0..WARM_START_ITERS {
            beta_step(v, &m, &mut w, &mut h, 1.0, cfg.floor);
        }
    }
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut violations = Vec::new();
    record(&mut trace, &mut violations, alpha_objective(v, &w.dot(&h), &m, alpha));
    for _ in 0..cfg.max_iters {
        alpha_step(v, &m, &mut w, &mut h, alpha, cfg.floor);
        record(&mut trace, &mut violations, alpha_objective(v, &w.dot(&h), &m, alpha));
    }
    Ok(FactorizationModel {
        w,
        h: Some(h),
        rank,
        kind: FactorizationKind::LinearNmf,
        objective_trace: trace,
        monotonicity_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank_one() -> Array2<f64> {
        let w = [1.0, 2.0, 0.5, 3.0];
        let h = [0.7, 1.1, 2.0, 0.4, 1.5];
        Array2::from_shape_fn((4, 5), |(i, j)| w[i] * h[j])
    }

    #[test]
    fn exponents() {
        assert_eq!(beta_update_exponent(-1.0), 0.5);
        assert_eq!(beta_update_exponent(0.5), 1.0);
        assert_eq!(beta_update_exponent(2.0), 0.5);
    }

    #[test]
    fn rank_one_is_recovered() {
        let v = rank_one();
        for beta in [-1.0, 0.0, 1.0] {
            let cfg = FitConfig { max_iters: 500, ..Default::default() };
            let m = nmf_beta(&v, 1, beta, &cfg).unwrap();
            let t = &m.objective_trace;
            assert!(t[t.len() - 1] < 1e-8 * t[0], "beta {beta}: {} vs {}", t[t.len() - 1], t[0]);
        }
        let cfg = FitConfig { max_iters: 500, ..Default::default() };
        let m = nmf_alpha(&v, 1, 0.5, &cfg).unwrap();
        let t = &m.objective_trace;
        assert!(t[t.len() - 1] < 1e-8 * t[0]);
    }

    #[test]
    fn alpha_one_tracks_beta_zero() {
        let v = rank_one().mapv(|x| x + 0.3);
        let cfg = FitConfig { max_iters: 50, seed: 4, ..Default::default() };
        let a = nmf_alpha(&v, 2, 1.0, &cfg).unwrap();
        let b = nmf_beta(&v, 2, 0.0, &cfg).unwrap();
        for (x, y) in a.objective_trace.iter().zip(&b.objective_trace) {
            assert!((x - y).abs() <= 1e-8 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let v = rank_one();
        let cfg = FitConfig::default();
        assert!(nmf_beta(&v, 0, 1.0, &cfg).is_err());
        assert!(nmf_beta(&v, 5, 1.0, &cfg).is_err());
        assert!(nmf_alpha(&v, 1, 0.0, &cfg).is_err());
        let mut z = v.clone();
        z[[0, 0]] = 0.0;
        assert!(nmf_beta(&z, 1, -1.0, &cfg).is_err());
        assert!(nmf_beta(&z, 1, 1.0, &cfg).is_ok());
        let mut mask = Array2::ones(v.dim());
        mask.row_mut(2).fill(0.0);
        let cfg = FitConfig { mask: Some(mask), ..Default::default() };
        assert!(nmf_beta(&v, 1, 1.0, &cfg).is_err());
    }
}
