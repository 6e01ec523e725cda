//! Small numerical helpers shared across modules.

/// `x^t` for `x > 0`, computed as `exp(t ln x)`.
///
/// All fractional powers in the crate go through here so that transformed
/// quantities (for example the alpha-to-beta change of variables) are
/// evaluated identically wherever they appear.
#[inline]
pub fn pow_pos(x: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if x == 0.0 {
        return if t > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (t * x.ln()).exp()
}

/// `expm1(t * l) / t`, with the `t -> 0` limit `l`.
#[inline]
pub fn expm1_ratio(t: f64, l: f64) -> f64 {
    if t == 0.0 {
        l
    } else {
        (t * l).exp_m1() / t
    }
}

/// `ln(sum(exp(v)))` with max-shifting. Returns `-inf` for an empty input or
/// when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY || v.is_nan() {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `ln Gamma(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
