//! Gauss-Laguerre quadrature and the EDA normalizing constant.
//!
//! The normalizer `Z(mu, beta, phi) = int_0^inf x^((beta-1)/2) exp(-D_beta(x||mu)/phi) dx`
//! is evaluated in `v = ln x`, where the log-integrand is unimodal. The real
//! line is split at the mode and each half is mapped onto `[0, inf)` with a
//! scale matched to the local width, then integrated with the Laguerre rule.
//! This keeps sharply peaked integrands (small `phi`) and the integrable
//! endpoint singularity at `x = 0` (for `beta < 1`) resolved to near machine
//! precision with the same fixed node set.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::divergence::{beta_term, LIMIT_SWITCH};
use crate::error::{DivselError, Result};
use crate::numeric::{expm1_ratio, LogSumExp};

/// Order used when none is configured.
pub const DEFAULT_ORDER: usize = 5000;

/// Largest supported order.
pub const MAX_ORDER: usize = 10_000;

const RESCALE: f64 = 1e150;
const NEWTON_MAX_ITER: usize = 100;
/// Roots below this use double-double residuals; plain arithmetic is accurate above.
const PRECISE_BELOW: f64 = 2.0;
/// Log-integrand drop (relative to the mode) at which a half-line is truncated.
const TAIL_DROP: f64 = 60.0;
/// Log-integrand drop used to size the far reach of each half-line.
const REACH_DROP: f64 = 50.0;

/// An `n`-point Gauss-Laguerre rule for `int_0^inf e^(-z) f(z) dz`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    /// `w_i e^(z_i)`, the weights for integrating `f` itself rather than `e^(-z) f`.
    halfline_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights `w_i`. Those attached to the largest nodes underflow to zero for
    /// large orders; [`log_weights`](Self::log_weights) keeps them.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Largest node.
    pub fn max_node(&self) -> f64 {
        *self.nodes.last().expect("rules have at least one node")
    }
}

/// Laguerre values at order `n` and `n + 1` and the derivative at order `n`,
/// by the recurrence and its differentiated form, with rescaling.
/// Returns `(L_n, L_n', L_{n+1}, ln scale)`; true values are the returned ones
/// times `exp(ln scale)`.
fn laguerre_scaled(n: usize, z: f64) -> (f64, f64, f64, f64) {
    let (mut p0, mut p1) = (0.0, 1.0);
    let (mut d0, mut d1) = (0.0, 0.0);
    let mut log_scale = 0.0;
    for k in 0..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 - z) * p1 - kf * p0) / (kf + 1.0);
        let d2 = ((2.0 * kf + 1.0 - z) * d1 - p1 - kf * d0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        if p1.abs() > RESCALE || d1.abs() > RESCALE {
            p0 /= RESCALE;
            p1 /= RESCALE;
            d0 /= RESCALE;
            d1 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    let nf = n as f64;
    let next = ((2.0 * nf + 1.0 - z) * p1 - nf * p0) / (nf + 1.0);
    (p1, d1, next, log_scale)
}

/// Double-double number `hi + lo`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        Dd::two_sum(s.hi, lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        let lo = err + self.hi * o.lo + self.lo * o.hi;
        Dd::two_sum(p, lo)
    }

    fn scale(self, f: f64) -> Dd {
        let p = self.hi * f;
        let err = self.hi.mul_add(f, -p);
        Dd::two_sum(p, err + self.lo * f)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = Dd::from(q).scale(-d).add(self);
        Dd::two_sum(q, (r.hi + r.lo) / d)
    }
}

/// `(L_n(z), L_{n+1}(z))` in double-double arithmetic, rescaled by powers of
/// two; the true values are the returned ones times `2^exp2`.
fn laguerre_dd(n: usize, z: f64) -> (f64, f64, i32) {
    let (mut p0, mut p1) = (Dd::from(0.0), Dd::from(1.0));
    let mut exp2 = 0;
    for k in 0..=n {
        let kf = k as f64;
        let c = Dd::two_sum(2.0 * kf + 1.0, -z);
        let p2 = c.mul(p1).add(p0.scale(-kf)).div_f64(kf + 1.0);
        p0 = p1;
        p1 = p2;
        if p1.hi.abs() > 1e150 {
            let f = 2f64.powi(-500);
            p0 = p0.scale(f);
            p1 = p1.scale(f);
            exp2 += 500;
        }
    }
    (p0.hi + p0.lo, p1.hi + p1.lo, exp2)
}

/// `(L_n(z), L_n'(z))` by the three-term recurrence, with
/// `L_n'(z) = n (L_n(z) - L_{n-1}(z)) / z` (and `-n` at `z = 0`).
pub fn laguerre_eval(n: usize, z: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - z) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    let deriv = if n == 0 {
        0.0
    } else if z == 0.0 {
        -(n as f64)
    } else {
        n as f64 * (cur - prev) / z
    };
    (cur, deriv)
}

/// Tricomi's approximation to the `k`-th smallest root (1-based) of `L_n`.
fn tricomi_guess(n: usize, k: usize) -> f64 {
    let nu = 4.0 * n as f64 + 2.0;
    let c = std::f64::consts::PI * (4.0 * (n - k) as f64 + 3.0) / nu;
    // solve s - sin s = c on [0, 2 pi] by bisection; the map is increasing
    let (mut lo, mut hi) = (0.0f64, 2.0 * std::f64::consts::PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.sin() < c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let c2 = (0.5 * s).cos();
    nu * c2 * c2
}

/// Bessel-zero approximation for the smallest roots, `j_{0,k}^2 / nu`.
fn bessel_guess(n: usize, k: usize) -> f64 {
    let nu = 4.0 * n as f64 + 2.0;
    let b = (k as f64 - 0.25) * std::f64::consts::PI;
    let j = b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b.powi(3));
    j * j / nu * (1.0 + (j * j - 2.0) / (3.0 * nu * nu))
}

/// A refined root of `L_n` together with the log of its quadrature weight.
struct RootAndWeight {
    node: f64,
    log_weight: f64,
}

/// Newton iteration in plain arithmetic down to the evaluation noise floor,
/// then one correction from a double-double residual. The weight is evaluated
/// at the corrected root through a first-order expansion, since near the
/// origin it is far more sensitive to the root than the root is to rounding.
fn refine_root(n: usize, guess: f64) -> Result<RootAndWeight> {
    let nf = n as f64;
    let mut z = guess;
    let mut settled = false;
    for _ in 0..NEWTON_MAX_ITER {
        let (ln, dn, _, _) = laguerre_scaled(n, z);
        let step = ln / dn;
        let next = z - step;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        z = next;
        if step.abs() <= 1e-9 * z {
            settled = true;
            break;
        }
    }
    if settled {
        for _ in 0..3 {
            let (ln, dn, lp1, log_scale) = laguerre_scaled(n, z);
            let (ln_res, lp1_res, log_res) = if z < PRECISE_BELOW {
                let (a, b, exp2) = laguerre_dd(n, z);
                (a, b, exp2 as f64 * std::f64::consts::LN_2)
            } else {
                (ln, lp1, log_scale)
            };
            // same-scale ratio: the plain derivative carries `log_scale`
            let delta = -ln_res / (dn * (log_scale - log_res).exp());
            if delta.abs() <= 1e-10 * z {
                // d/dz L_{n+1} = (n+1)(L_{n+1} - L_n)/z
                let dlp1 = (nf + 1.0) * (lp1 - ln) / z;
                let dlogw = 1.0 / z - 2.0 * dlp1 / lp1;
                let log_abs = lp1_res.abs().ln() + log_res;
                let log_weight =
                    z.ln() - 2.0 * (nf + 1.0).ln() - 2.0 * log_abs + dlogw * delta;
                return Ok(RootAndWeight {
                    node: z + delta,
                    log_weight,
                });
            }
            z += delta;
        }
    }
    Err(DivselError::Convergence(format!(
        "Newton iteration for a root of L_{n} stalled near {z}"
    )))
}

/// Builds the `n`-point Gauss-Laguerre rule.
///
/// Roots are Newton-refined from asymptotic starting values; weights are
/// `z_i / ((n+1)^2 L_{n+1}(z_i)^2)`, accumulated in the log domain.
pub fn gauss_laguerre_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(DivselError::param(format!(
            "quadrature order must be in 1..={MAX_ORDER}, got {n}"
        )));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut log_weights = Vec::with_capacity(n);
    for k in 1..=n {
        let tri = tricomi_guess(n, k);
        let guess = if k <= 3 || tri < 0.5 { bessel_guess(n, k) } else { tri };
        let root = refine_root(n, guess)?;
        nodes.push(root.node);
        log_weights.push(root.log_weight);
    }
    if let Some(i) = (1..n).find(|&i| nodes[i] <= nodes[i - 1]) {
        return Err(DivselError::Convergence(format!(
            "Laguerre roots {} and {} of order {n} are not strictly increasing",
            i - 1,
            i
        )));
    }
    let weights: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();
    let halfline_weights = nodes
        .iter()
        .zip(&log_weights)
        .map(|(z, l)| (z + l).exp())
        .collect();
    let rule = QuadratureRule {
        order: n,
        nodes,
        weights,
        log_weights,
        halfline_weights,
    };
    check_moments(&rule)?;
    Ok(rule)
}

fn check_moments(rule: &QuadratureRule) -> Result<()> {
    let m0: f64 = rule.weights.iter().sum();
    let m1: f64 = rule.weights.iter().zip(&rule.nodes).map(|(w, z)| w * z).sum();
    if (m0 - 1.0).abs() > 1e-12 || (m1 - 1.0).abs() > 1e-10 {
        return Err(DivselError::Numerical(format!(
            "Laguerre rule of order {} fails moment checks (sum w = {m0}, sum w z = {m1})",
            rule.order
        )));
    }
    Ok(())
}

/// Process-wide cache of constructed rules.
pub fn shared_rule(n: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().map_err(|_| poisoned())?.get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(gauss_laguerre_rule(n)?);
    let mut guard = cache.lock().map_err(|_| poisoned())?;
    Ok(Arc::clone(guard.entry(n).or_insert(rule)))
}

fn poisoned() -> DivselError {
    DivselError::Numerical("quadrature cache lock poisoned".into())
}

/// `ln int_0^inf f(z) dz` from `ln f`, as `ln sum_i exp(ln w_i + z_i + ln f(z_i))`.
/// Non-finite or NaN values of `ln f` count as zero contributions.
pub fn integrate_halfline<F: Fn(f64) -> f64>(log_f: F, rule: &QuadratureRule) -> f64 {
    let mut acc = LogSumExp::new();
    for (z, lw) in rule.nodes.iter().zip(&rule.log_weights) {
        let lf = log_f(*z);
        if lf.is_nan() || lf == f64::INFINITY {
            continue;
        }
        acc.push(lw + z + lf);
    }
    acc.value()
}

/// `ln Z` together with `d ln Z / d ln phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub log_z: f64,
    /// Derivative with respect to `ln phi`, equal to `E[D_beta(x||mu)] / phi`.
    pub slope: f64,
}

/// `h(v) = a v - d(e^v) / phi` where `d(t) = D_beta(t || 1)`, or `d(t) = t^(b+1)/(b(b+1))`
/// when the centre is at zero.
#[derive(Debug, Clone, Copy)]
struct LogIntegrand {
    a: f64,
    beta: f64,
    inv_phi: f64,
    zero_center: bool,
}

impl LogIntegrand {
    /// `d(e^v) / phi`.
    fn scaled_div(&self, v: f64) -> f64 {
        let b = self.beta;
        if self.zero_center {
            return ((b + 1.0) * v).exp() / (b * (b + 1.0)) * self.inv_phi;
        }
        let t = v.exp();
        let d = if t == 0.0 {
            if b > -1.0 && (b + 1.0).abs() >= LIMIT_SWITCH {
                if b.abs() < LIMIT_SWITCH {
                    1.0
                } else {
                    1.0 / (b + 1.0)
                }
            } else {
                f64::INFINITY
            }
        } else if t.is_infinite() {
            f64::INFINITY
        } else {
            beta_term(t, 1.0, b)
        };
        let r = d * self.inv_phi;
        if r.is_nan() {
            f64::INFINITY
        } else {
            r
        }
    }

    fn h(&self, v: f64) -> f64 {
        let r = self.a * v - self.scaled_div(v);
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r
        }
    }

    /// `h'(v) = a - e^v (e^(beta v) - 1) / (beta phi)`, evaluated with its sign
    /// split off so that neither factor overflows into a NaN.
    fn dh(&self, v: f64) -> f64 {
        let b = self.beta;
        if self.zero_center {
            return self.a - ((b + 1.0) * v).exp() / b * self.inv_phi;
        }
        if v == 0.0 {
            return self.a;
        }
        let ratio = expm1_ratio(b, v);
        let mag = (v + ratio.abs().ln()).exp() * self.inv_phi;
        let r = self.a - v.signum() * mag;
        if r.is_nan() {
            -v.signum() * f64::INFINITY
        } else {
            r
        }
    }

    fn mode(&self) -> Result<f64> {
        let d0 = self.dh(0.0);
        if d0 == 0.0 {
            return Ok(0.0);
        }
        let dir = d0.signum();
        let mut inner = 0.0;
        let mut step = 1.0;
        let mut outer = dir * step;
        while self.dh(outer) * dir > 0.0 {
            inner = outer;
            step *= 2.0;
            outer = dir * step;
            if step > 1e7 {
                return Err(DivselError::Numerical(
                    "mode of the normalizer integrand not bracketed".into(),
                ));
            }
        }
        let (mut lo, mut hi) = if inner < outer { (inner, outer) } else { (outer, inner) };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.dh(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Distance from the mode, in direction `dir`, at which `h` has dropped by `target`.
    fn reach(&self, mode: f64, peak: f64, dir: f64, target: f64) -> Result<f64> {
        let drop = |s: f64| peak - self.h(mode + dir * s);
        let mut s = 1e-6;
        if drop(s) >= target {
            while drop(s) >= target {
                s *= 0.5;
                if s < 1e-300 {
                    return Err(DivselError::Numerical("normalizer integrand has no width".into()));
                }
            }
        }
        let mut lo = s;
        let mut hi = 2.0 * s;
        while drop(hi) < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(DivselError::Numerical(
                    "normalizer integrand does not decay".into(),
                ));
            }
        }
        for _ in 0..40 {
            let mid = (lo * hi).sqrt();
            if drop(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// `ln int_R exp(h(v)) dv` and the mean of `d(e^v)/phi` under that density.
    fn integrate(&self, rule: &QuadratureRule) -> Result<Normalizer> {
        let mode = self.mode()?;
        let peak = self.h(mode);
        if !peak.is_finite() {
            return Err(DivselError::Numerical(format!(
                "normalizer integrand is not finite at its mode ({peak})"
            )));
        }
        let z_reach = 0.25 * rule.max_node();
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for dir in [1.0, -1.0] {
            let half = self.reach(mode, peak, dir, 0.5)?;
            let far = self.reach(mode, peak, dir, REACH_DROP)?;
            let scale = half.max(far / z_reach);
            let mut a0 = 0.0;
            let mut a1 = 0.0;
            let mut closed = false;
            for (z, w) in rule.nodes.iter().zip(&rule.halfline_weights) {
                let v = mode + dir * scale * z;
                let sd = self.scaled_div(v);
                let g = self.a * v - sd - peak;
                if g.is_nan() || g < -TAIL_DROP {
                    closed = true;
                    break;
                }
                let e = w * g.exp();
                a0 += e;
                a1 += e * sd;
            }
            if !closed {
                return Err(DivselError::Numerical(
                    "quadrature nodes end before the integrand has decayed".into(),
                ));
            }
            s0 += scale * a0;
            s1 += scale * a1;
        }
        let log_z = peak + s0.ln();
        if !log_z.is_finite() {
            return Err(DivselError::Numerical(format!("log normalizer is {log_z}")));
        }
        Ok(Normalizer { log_z, slope: s1 / s0 })
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DivselError::param(format!("{name} must be finite and positive, got {v}")))
    }
}

/// `ln Z(1, beta, phi)`: the normalizer at unit `mu`. Every other `mu` reduces
/// to this through `ln Z(mu, beta, phi) = (beta+1)/2 ln mu + ln Z(1, beta, phi mu^-(beta+1))`.
pub fn unit_log_normalizer(beta: f64, phi: f64, rule: &QuadratureRule) -> Result<Normalizer> {
    if !beta.is_finite() {
        return Err(DivselError::param("beta must be finite"));
    }
    check_positive("phi", phi)?;
    LogIntegrand {
        a: 0.5 * (beta + 1.0),
        beta,
        inv_phi: 1.0 / phi,
        zero_center: false,
    }
    .integrate(rule)
}

/// `phi mu^-(beta+1)`, the dispersion seen by the unit-`mu` normalizer.
pub fn effective_phi(mu: f64, beta: f64, phi: f64) -> f64 {
    (phi.ln() - (beta + 1.0) * mu.ln()).exp()
}

/// `ln Z(mu, beta, phi)` with its derivative in `ln phi`.
pub fn eda_normalizer(mu: f64, beta: f64, phi: f64, rule: &QuadratureRule) -> Result<Normalizer> {
    check_positive("mu", mu)?;
    check_positive("phi", phi)?;
    let unit = unit_log_normalizer(beta, effective_phi(mu, beta, phi), rule)?;
    Ok(Normalizer {
        log_z: 0.5 * (beta + 1.0) * mu.ln() + unit.log_z,
        slope: unit.slope,
    })
}

/// `ln Z(mu, beta, phi) = ln int_0^inf exp((beta-1)/2 ln x - D_beta(x||mu)/phi) dx`.
pub fn eda_log_normalizer(mu: f64, beta: f64, phi: f64, rule: &QuadratureRule) -> Result<f64> {
    eda_normalizer(mu, beta, phi, rule).map(|n| n.log_z)
}

/// `ln int_0^inf exp(-D_beta(x||mu)) dx`, the normalizer without augmentation.
/// `mu = 0` is accepted for `beta > 0`, where the divergence stays finite.
pub fn ed_log_normalizer(mu: f64, beta: f64, rule: &QuadratureRule) -> Result<f64> {
    if !beta.is_finite() {
        return Err(DivselError::param("beta must be finite"));
    }
    if mu == 0.0 && beta > 0.0 {
        let f = LogIntegrand {
            a: 1.0,
            beta,
            inv_phi: 1.0,
            zero_center: true,
        };
        return f.integrate(rule).map(|n| n.log_z);
    }
    check_positive("mu", mu)?;
    let f = LogIntegrand {
        a: 1.0,
        beta,
        inv_phi: 1.0 / effective_phi(mu, beta, 1.0),
        zero_center: false,
    };
    Ok(mu.ln() + f.integrate(rule)?.log_z)
}
