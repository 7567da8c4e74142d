//! Stable-law primitives.
//!
//! All laws use the 1-parameterization: for `alpha != 1` the characteristic
//! function is
//!
//! ```text
//! E exp(iuX) = exp(iu*loc - scale^alpha |u|^alpha (1 - i beta tan(pi alpha / 2) sgn u))
//! ```
//!
//! so `alpha = 2, scale = 1` is a Gaussian with variance 2. The strictly
//! stable part of a tempered-stable process under the tilted measure has
//! zero location and the scale returned by [`StableLaw::strictly_stable`].
//! `alpha = 1` is not supported.

use crate::error::{Error, Result};
use crate::numerics::gamma_neg;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    pub alpha: f64,
    pub beta: f64,
    pub scale: f64,
    pub location: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, beta: f64, scale: f64, location: f64) -> Result<Self> {
        let law = Self { alpha, beta, scale, location };
        law.validate()?;
        Ok(law)
    }

    /// Standard symmetric law with unit scale.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0, 0.0)
    }

    /// Law at time `t` of the compensated stable process with Levy density
    /// `c_plus x^{-1-Y}` on `x > 0` and `c_minus |x|^{-1-Y}` on `x < 0`.
    pub fn strictly_stable(c_plus: f64, c_minus: f64, y: f64, t: f64) -> Result<Self> {
        if !(c_plus >= 0.0 && c_minus >= 0.0 && c_plus + c_minus > 0.0) {
            return Err(Error::Domain(format!(
                "jump intensities ({c_plus}, {c_minus}) must be nonnegative with positive sum"
            )));
        }
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time {t} must be positive")));
        }
        let g = gamma_neg(y)?;
        let scale = ((c_plus + c_minus) * (g * (PI * y / 2.0).cos()).abs() * t).powf(1.0 / y);
        Self::new(y, (c_plus - c_minus) / (c_plus + c_minus), scale, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { alpha, beta, scale, location } = *self;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("stability index {alpha} must lie in (0, 2]")));
        }
        if (alpha - 1.0).abs() < 1e-9 {
            return Err(Error::Domain("stability index 1 is not supported".into()));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::Domain(format!("skewness {beta} must lie in [-1, 1]")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale {scale} must be positive")));
        }
        if !location.is_finite() {
            return Err(Error::Domain("location must be finite".into()));
        }
        Ok(())
    }
}

/// Scale of the one-sided stable variables `Z_t^{+}` and `-Z_t^{-}` under the
/// tilted measure: `(C |Gamma(-Y) cos(pi Y / 2)| t)^{1/Y}`.
pub fn one_sided_scale(c: f64, y: f64, t: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("jump intensity {c} must be positive")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time {t} must be positive")));
    }
    let g = gamma_neg(y)?;
    Ok((c * (g * (PI * y / 2.0).cos()).abs() * t).powf(1.0 / y))
}

/// Chambers-Mallows-Stuck draw from `law`.
pub fn sample_stable<R: Rng + ?Sized>(law: &StableLaw, rng: &mut R) -> Result<f64> {
    law.validate()?;
    Ok(law.location + law.scale * sample_standard(law.alpha, law.beta, rng))
}

/// CMS draw with unit scale and zero location; parameters are assumed valid.
pub(crate) fn sample_standard<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    let tan_term = beta * (FRAC_PI_2 * alpha).tan();
    let b = tan_term.atan() / alpha;
    let s = (1.0 + tan_term * tan_term).powf(0.5 / alpha);
    let arg = alpha * (v + b);
    s * arg.sin() / v.cos().powf(1.0 / alpha) * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Precomputed CMS constants for repeated draws from one law.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CmsSampler {
    alpha: f64,
    inv_alpha: f64,
    expo: f64,
    b: f64,
    s: f64,
}

impl CmsSampler {
    pub(crate) fn new(alpha: f64, beta: f64) -> Self {
        let tan_term = beta * (FRAC_PI_2 * alpha).tan();
        Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            expo: (1.0 - alpha) / alpha,
            b: tan_term.atan() / alpha,
            s: (1.0 + tan_term * tan_term).powf(0.5 / alpha),
        }
    }

    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let arg = self.alpha * (v + self.b);
        self.s * arg.sin() / v.cos().powf(self.inv_alpha) * ((v - arg).cos() / w).powf(self.expo)
    }
}

/// Characteristic function of `law` at frequency `u`.
pub fn stable_cf(u: f64, law: &StableLaw) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let mag = (law.scale * u.abs()).powf(law.alpha);
    let skew = law.beta * (FRAC_PI_2 * law.alpha).tan() * u.signum();
    Complex64::new(-mag, mag * skew + u * law.location).exp()
}

/// Characteristic exponent `t (c1 |u|^Y + i c2 |u|^Y sgn u)` of the strictly
/// stable part of a tempered-stable process with intensities `c_plus`,
/// `c_minus`, where `c1 = (C+ + C-) cos(pi Y/2) Gamma(-Y)` and
/// `c2 = (C- - C+) sin(pi Y/2) Gamma(-Y)`.
pub fn strictly_stable_exponent(u: f64, c_plus: f64, c_minus: f64, y: f64, t: f64) -> Result<Complex64> {
    let g = gamma_neg(y)?;
    let c1 = (c_plus + c_minus) * (PI * y / 2.0).cos() * g;
    let c2 = (c_minus - c_plus) * (PI * y / 2.0).sin() * g;
    let m = u.abs().powf(y) * t;
    Ok(Complex64::new(c1 * m, c2 * m * u.signum()))
}
