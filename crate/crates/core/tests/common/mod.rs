//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// 15-point Kronrod nodes and weights with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod integration over `[a, b]` split at `breaks`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], rel_tol: f64) -> f64 {
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(breaks.iter().copied().filter(|p| *p > a && *p < b));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut stack: Vec<(f64, f64, f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    let mut total: f64 = stack.iter().map(|s| s.2).sum();
    let mut err: f64 = stack.iter().map(|s| s.3).sum();
    for _ in 0..20_000 {
        if err <= rel_tol * total.abs() {
            break;
        }
        let (idx, _) = stack
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, v, e) = stack.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        stack.push((lo, mid, v1, e1));
        stack.push((mid, hi, v2, e2));
    }
    // re-sum to shed the drift of the running totals
    let total: f64 = stack.iter().map(|s| s.2).sum();
    let err: f64 = stack.iter().map(|s| s.3).sum();
    assert!(err <= 1e-9 * total.abs(), "adaptive quadrature did not converge: {err} vs {total}");
    total
}

/// `D_beta(x || mu)` from the three-term definition, switching to the Taylor
/// series in `r - 1` near `x = mu` and to the limit forms at `beta in {0, -1}`.
pub fn beta_div_textbook(x: f64, mu: f64, beta: f64) -> f64 {
    let r = x / mu;
    if (r - 1.0).abs() < 0.1 {
        // [r^(b+1) - 1 - (b+1)(r-1)] / (b(b+1)) = sum_{k>=2} (b-1)...(b-k+2)/k! (r-1)^k
        let e = r - 1.0;
        let mut coef = 0.5; // k = 2
        let mut pow = e * e;
        let mut sum = coef * pow;
        for k in 3..60 {
            coef *= (beta - (k as f64) + 2.0) / k as f64;
            pow *= e;
            sum += coef * pow;
        }
        return mu.powf(beta + 1.0) * sum;
    }
    if beta == 0.0 {
        return x * (x / mu).ln() - x + mu;
    }
    if beta == -1.0 {
        return x / mu - (x / mu).ln() - 1.0;
    }
    (x.powf(beta + 1.0) + beta * mu.powf(beta + 1.0) - (beta + 1.0) * x * mu.powf(beta))
        / (beta * (beta + 1.0))
}

/// `ln int_0^inf x^((b-1)/2) exp(-D_b(x||mu)/phi) dx` by adaptive integration in `ln x`.
pub fn eda_log_normalizer_oracle(mu: f64, beta: f64, phi: f64) -> f64 {
    let a = 0.5 * (beta + 1.0);
    let h = |u: f64| a * u - beta_div_textbook(u.exp(), mu, beta) / phi;
    log_integral_oracle(h, mu.ln())
}

/// `ln int_0^inf exp(-D_b(x||mu)) dx`, the normalizer without augmentation.
pub fn ed_log_normalizer_oracle(mu: f64, beta: f64) -> f64 {
    let h = |u: f64| u - beta_div_textbook(u.exp(), mu, beta);
    log_integral_oracle(h, mu.ln())
}

/// `ln int_R exp(h(u)) du` for a log-integrand with a single peak.
pub fn log_integral_oracle<H: Fn(f64) -> f64>(h: H, centre: f64) -> f64 {
    let safe = |u: f64| {
        let v = h(u);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    // locate the peak on a geometric set of offsets around the centre
    let mut offsets = vec![0.0];
    for k in -80..=30 {
        let d = 10f64.powf(k as f64 / 10.0);
        offsets.push(d);
        offsets.push(-d);
    }
    let mut best = (centre, safe(centre));
    for d in &offsets {
        let u = centre + d;
        let v = safe(u);
        if v > best.1 {
            best = (u, v);
        }
    }
    // polish the peak location by ternary search on a bracket around the best sample
    let (mut lo, mut hi) = (best.0 - 1e-3 * (1.0 + best.0.abs()), best.0 + 1e-3 * (1.0 + best.0.abs()));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if safe(m1) < safe(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let peak_u = 0.5 * (lo + hi);
    let peak = safe(peak_u).max(best.1);
    // find where the integrand falls below exp(-70) of the peak on each side
    let reach = |dir: f64| {
        let mut s = 1e-8;
        while peak - safe(peak_u + dir * s) < 70.0 {
            s *= 1.5;
            assert!(s < 1e7, "oracle integrand does not decay");
        }
        s
    };
    let (left, right) = (reach(-1.0), reach(1.0));
    let mut breaks = vec![peak_u];
    for k in -8..=6 {
        let d = 10f64.powi(k);
        breaks.push(peak_u - d);
        breaks.push(peak_u + d);
    }
    let f = |u: f64| (safe(u) - peak).exp();
    let v = adaptive(f, peak_u - left, peak_u + right, &breaks, 1e-12);
    peak + v.ln()
}
