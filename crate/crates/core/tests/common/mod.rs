//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// `int_0^inf f(x) dx` by the exp-sinh rule, refined by halving the step
/// until two levels agree to `rel_tol`. Independent of the crate's quadrature.
pub fn exp_sinh(f: impl Fn(f64) -> f64, rel_tol: f64) -> f64 {
    let node = |t: f64| {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        let w = x * FRAC_PI_2 * t.cosh();
        if x.is_finite() && x > 0.0 && w.is_finite() {
            let v = f(x) * w;
            if v.is_finite() {
                return v;
            }
        }
        0.0
    };
    let t_max = 6.0;
    let mut step = 0.5;
    let mut sum: f64 = (0..=((2.0 * t_max / step) as i64)).map(|k| node(-t_max + k as f64 * step)).sum();
    let mut prev = sum * step;
    for _ in 0..12 {
        step /= 2.0;
        let n = (2.0 * t_max / step) as i64;
        sum += (0..n / 2).map(|k| node(-t_max + (2 * k + 1) as f64 * step)).sum::<f64>();
        let cur = sum * step;
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// `E[X^2 1{|X| <= eps}]` for `X ~ N(0, var)`.
pub fn gaussian_truncated_second_moment(var: f64, eps: f64) -> f64 {
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};
    let k = eps / var.sqrt();
    let n = Normal::new(0.0, 1.0).unwrap();
    var * (2.0 * n.cdf(k) - 1.0 - 2.0 * k * n.pdf(k))
}

/// Sample mean and its standard error.
pub fn mean_se(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        s += x;
        s2 += x * x;
    }
    let m = s / n;
    (m, ((s2 / n - m * m).max(0.0) / n).sqrt())
}

/// `e^{-z} - 1 + z` without cancellation for small `z`.
pub fn compensated_exp(z: f64) -> f64 {
    if z < 1e-2 {
        z * z * (0.5 - z * (1.0 / 6.0 - z * (1.0 / 24.0 - z / 120.0)))
    } else {
        f64::exp_m1(-z) + z
    }
}

/// For each moment function: the model expectation, and the mean and standard
/// error over `n` draws of `u (sigma W_h + S_h)` with `S_h` symmetric stable of
/// scale `(2C|Gamma(-Y) cos(pi Y/2)| h)^{1/Y}`.
pub fn moments_vs_mc(
    set: trqv_core::MomentSet,
    theta: trqv_core::ThetaEstimate,
    u: f64,
    h: f64,
    n: usize,
    seed: u64,
) -> Vec<(f64, f64, f64)> {
    use rand_distr::{Distribution, StandardNormal};
    use trqv_core::{model_expectation, mme::eval_moments, rng::stream_rng, sample_stable, MomentSpec, StableLaw};
    let spec = MomentSpec::new(set, u).unwrap();
    let model = model_expectation(&spec, &theta, h).unwrap();
    let law = StableLaw::strictly_stable(theta.c, theta.c, theta.y, h).unwrap();
    let mut rng = stream_rng(seed, 0);
    let sd = (theta.sigma2 * h).sqrt();
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            u * (sd * z + sample_stable(&law, &mut rng).unwrap())
        })
        .collect();
    model
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let (mc, se) = mean_se(xs.iter().map(|&x| eval_moments(x, set)[j]));
            (m, mc, se)
        })
        .collect()
}

/// `1 / sqrt(2 sigma^2 h ln(1/h))`.
pub fn scaling(sigma2: f64, h: f64) -> f64 {
    1.0 / (2.0 * sigma2 * h * (1.0 / h).ln()).sqrt()
}
