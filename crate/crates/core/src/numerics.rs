//! Small numerical kernels shared across modules: gamma values at negative
//! non-integer arguments, adaptive Gauss-Kronrod quadrature and Brent's
//! bracketing root finder.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Distance from the integers 1 and 2 below which `Y` is rejected.
pub const INDEX_POLE_GUARD: f64 = 1e-6;

/// Checks `y` lies in the infinite-variation range `(1, 2)` away from the poles.
pub fn check_index(y: f64) -> Result<()> {
    if !y.is_finite() || y <= 1.0 || y >= 2.0 {
        return Err(Error::Domain(format!("index Y = {y} must lie in (1, 2)")));
    }
    if (y - 1.0).abs() < INDEX_POLE_GUARD || (2.0 - y).abs() < INDEX_POLE_GUARD {
        return Err(Error::Domain(format!(
            "index Y = {y} is within {INDEX_POLE_GUARD:e} of a gamma pole"
        )));
    }
    Ok(())
}

/// `Gamma(-y)` for `y` in `(1, 2)`, from the reflection formula
/// `Gamma(-y) = -pi / (sin(pi y) Gamma(1 + y))`. Positive on that range.
pub fn gamma_neg(y: f64) -> Result<f64> {
    check_index(y)?;
    Ok(-PI / ((PI * y).sin() * ln_gamma(1.0 + y).exp()))
}

/// `Gamma(x)` for positive `x`.
pub fn gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    ln_gamma(x).exp()
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (positive half).
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
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * hw, ((kron - gauss) * hw).abs())
}

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
///
/// Bisects until each panel meets `max(abs_tol, rel_tol * |I|)` scaled by its
/// share of the interval. Integrable endpoint singularities are fine since
/// endpoints are never evaluated.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = gk15(&f, a, b);
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let mut total = 0.0;
    let mut budget = 200_000usize;
    let width = (b - a).abs();
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        budget = budget
            .checked_sub(1)
            .ok_or_else(|| Error::Numerical("quadrature panel budget exhausted".into()))?;
        let tol = abs_tol.max(rel_tol * whole.abs()) * ((hi - lo).abs() / width).max(1e-12);
        if err <= tol || depth >= 60 {
            if !val.is_finite() {
                return Err(Error::Numerical("non-finite integrand".into()));
            }
            total += val;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        stack.push((lo, mid, v1, e1, depth + 1));
        stack.push((mid, hi, v2, e2, depth + 1));
    }
    Ok(total)
}

/// Adaptive quadrature on `[a, inf)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Upper incomplete gamma `Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt` for
/// `x > 0` and non-integer `s > -2`, using the downward recurrence
/// `Gamma(s, x) = (Gamma(s + 1, x) - x^s e^{-x}) / s` below `s = 0`.
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0 && s > -2.0);
    if s > 0.0 {
        return statrs::function::gamma::gamma_ui(s, x);
    }
    (upper_gamma(s + 1.0, x) - x.powf(s) * (-x).exp()) / s
}

/// Brent's method on a bracket with `f(lo)` and `f(hi)` of opposite sign.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo: fa, f_hi: fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Numerical(format!("brent did not converge in {max_iter} iterations")))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Scans `[lo, hi]` on a geometric grid and returns every bracketed sign change.
pub fn sign_changes<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let ratio = (hi / lo).powf(1.0 / (points.max(2) - 1) as f64);
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..points.max(2) {
        let x = if i + 1 == points.max(2) { hi } else { lo * ratio.powi(i as i32) };
        let fx = f(x);
        if f_prev == 0.0 || f_prev.signum() != fx.signum() {
            out.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_neg_matches_recurrence() {
        // Gamma(-y) = Gamma(2 - y) / ((-y)(1 - y))
        for &y in &[1.1, 1.35, 1.5, 1.7, 1.95] {
            let via_rec = gamma_pos(2.0 - y) / ((-y) * (1.0 - y));
            assert_relative_eq!(gamma_neg(y).unwrap(), via_rec, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_neg_rejects_poles() {
        assert!(gamma_neg(1.0 + 1e-7).is_err());
        assert!(gamma_neg(2.0 - 1e-7).is_err());
        assert!(gamma_neg(2.0).is_err());
        assert!(gamma_neg(0.9).is_err());
    }

    #[test]
    fn quadrature_known_integrals() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-14, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
        let v = integrate_to_inf(|x| (-x).exp(), 0.0, 1e-14, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);
        // integrable endpoint singularity
        let v = integrate(|x| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-10).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn upper_gamma_negative_order() {
        for &(s, x) in &[(-0.35, 0.004), (-1.35, 0.02), (0.65, 1.3), (-0.7, 3.0)] {
            let q = integrate(|t: f64| t.powf(s - 1.0) * (-t).exp(), x, 60.0, 1e-16, 1e-12).unwrap();
            assert_relative_eq!(upper_gamma(s, x), q, max_relative = 1e-9);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [4, 8, 11, 16] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((q - exact).abs() < 1e-13, "n {n} degree {deg}");
            }
        }
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), max_relative = 1e-14);
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100), Err(Error::NoBracket { .. })));
    }
}
