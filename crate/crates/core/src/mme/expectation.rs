//! Model expectations `E[f(u Z_h)]` for `Z = sigma W + S`, `S` symmetric
//! `Y`-stable with Levy density `C |x|^{-1-Y}`.
//!
//! Two routes: a Parseval integral of the moment functions' Fourier transforms
//! against the characteristic function (default), and a DFT inversion of the
//! characteristic function to a density followed by trapezoid quadrature.

use super::moments::{eval_moments, MomentSet, MomentSpec};
use super::ThetaEstimate;
use crate::error::{Error, Result};
use crate::numerics::{gamma_neg, gauss_legendre};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

/// Which numerical route computes the expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationEngine {
    #[default]
    Fourier,
    Dft,
}

/// `E[f(u Z_h)]` for each moment function of `spec`, by the default engine.
pub fn model_expectation(spec: &MomentSpec, theta: &ThetaEstimate, h: f64) -> Result<Vec<f64>> {
    ModelExpectation::new(ExpectationEngine::Fourier).eval(spec, theta, h)
}

/// Characteristic function of `u Z_h` is `exp(-a v^2 - b |v|^Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CfShape {
    a: f64,
    b: f64,
    y: f64,
}

impl CfShape {
    fn new(spec: &MomentSpec, theta: &ThetaEstimate, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("step h = {h} must be positive")));
        }
        if !(theta.sigma2 >= 0.0 && theta.c >= 0.0) || !(theta.sigma2 > 0.0 || theta.c > 0.0) {
            return Err(Error::Domain(format!(
                "sigma^2 = {}, C = {} do not define a nondegenerate law",
                theta.sigma2, theta.c
            )));
        }
        let u = spec.scaling_u;
        let b = if theta.c > 0.0 {
            let g = gamma_neg(theta.y)?;
            2.0 * theta.c * (g * (PI * theta.y / 2.0).cos()).abs() * h * u.powf(theta.y)
        } else {
            crate::numerics::check_index(theta.y)?;
            0.0
        };
        Ok(Self { a: 0.5 * h * theta.sigma2 * u * u, b, y: theta.y })
    }

    #[inline]
    fn exponent(&self, v: f64) -> f64 {
        let v = v.abs();
        let s = if self.b > 0.0 && v > 0.0 { self.b * (self.y * v.ln()).exp() } else { 0.0 };
        self.a * v * v + s
    }

    fn cf(&self, v: f64) -> f64 {
        (-self.exponent(v)).exp()
    }

    /// Frequency beyond which the characteristic function is below `e^{-level}`.
    fn cutoff(&self, level: f64) -> f64 {
        let mut hi = 1.0;
        while self.exponent(hi) < level {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.exponent(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Largest frequency the Fourier route integrates to.
pub const MAX_FREQUENCY: f64 = 4000.0;
const CF_LEVEL: f64 = 40.0;
const GL_ORDER: usize = 8;
const DYADIC_LEVELS: i32 = 24;

fn gl_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// `int f(x) cos(v x) dx` for the five moment functions.
fn transform(set: MomentSet, v: f64, out: &mut [f64]) {
    let v2 = v * v;
    match set {
        MomentSet::FSet => {
            out[0] = 2.0 / (1.0 + v2);
            out[1] = sqrt_exp_transform(v);
            out[2] = if v < 0.05 {
                2.0 * (1.0 / 3.0 - v2 / 10.0 + v2 * v2 / 168.0 - v2 * v2 * v2 / 6480.0)
            } else {
                let (s, c) = v.sin_cos();
                2.0 * (s / v + 2.0 * c / v2 - 2.0 * s / (v2 * v))
            };
        }
        MomentSet::GSet => {
            if v < 0.05 {
                out[0] = 1.0 - v2 / 12.0 + v2 * v2 / 360.0 - v2 * v2 * v2 / 20160.0;
                out[1] = 2.0 * (2.0 / 3.0 - v2 / 15.0 + v2 * v2 / 420.0 - v2 * v2 * v2 / 22680.0);
            } else {
                let (s, c) = v.sin_cos();
                out[0] = 2.0 * (1.0 - c) / v2;
                out[1] = 4.0 * (s - v * c) / (v2 * v);
            }
        }
    }
}

/// `int_R e^{-sqrt|x|} cos(v x) dx`, interpolated from a table built once.
///
/// On the ray `x = i t` the oscillation becomes decay, which gives
/// `-2 Im int_0^inf 2s exp(-e^{i pi/4} s - v s^2) ds` (with `x = i s^2`).
fn sqrt_exp_transform(v: f64) -> f64 {
    let table = sqrt_exp_table();
    let t = v.ln_1p();
    let pos = t / table.dt;
    let i = (pos as usize).min(table.f.len() - 2);
    let s = pos - i as f64;
    let (f0, f1) = (table.f[i], table.f[i + 1]);
    let (d0, d1) = (table.df[i] * table.dt, table.df[i + 1] * table.dt);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * f0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * f1 + (s3 - s2) * d1
}

struct SqrtExpTable {
    dt: f64,
    /// values and derivatives with respect to `t = ln(1 + v)`
    f: Vec<f64>,
    df: Vec<f64>,
}

fn sqrt_exp_table() -> &'static SqrtExpTable {
    static TABLE: OnceLock<SqrtExpTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let points = 4096;
        let dt = MAX_FREQUENCY.ln_1p() * 1.001 / (points - 1) as f64;
        let (x, w) = gauss_legendre(24);
        let omega = Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let mut f = Vec::with_capacity(points);
        let mut df = Vec::with_capacity(points);
        for k in 0..points {
            let t = k as f64 * dt;
            let v = t.exp_m1();
            // s where the modulus of the integrand has decayed by e^{-50}
            let end = if v > 0.0 {
                (-FRAC_1_SQRT_2 + (0.5 + 200.0 * v).sqrt()) / (2.0 * v)
            } else {
                50.0 * std::f64::consts::SQRT_2
            };
            let panels = 48;
            let width = end / panels as f64;
            let (mut k0, mut k1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for p in 0..panels {
                let mid = (p as f64 + 0.5) * width;
                for (xi, wi) in x.iter().zip(&w) {
                    let s = mid + 0.5 * width * xi;
                    let e = (-(omega * s) - v * s * s).exp() * (wi * 0.5 * width);
                    k0 += e * (2.0 * s);
                    k1 -= e * (2.0 * s * s * s);
                }
            }
            f.push(-2.0 * k0.im);
            df.push(-2.0 * k1.im * (1.0 + v));
        }
        SqrtExpTable { dt, f, df }
    })
}

/// Evaluates model expectations, keeping engine-specific state (the DFT
/// route caches its last density) for the lifetime of one fit.
#[derive(Debug, Clone, Default)]
pub struct ModelExpectation {
    engine: ExpectationEngine,
    dft_cache: Option<DftDensity>,
}

impl ModelExpectation {
    pub fn new(engine: ExpectationEngine) -> Self {
        Self { engine, dft_cache: None }
    }

    pub fn engine(&self) -> ExpectationEngine {
        self.engine
    }

    pub fn eval(&mut self, spec: &MomentSpec, theta: &ThetaEstimate, h: f64) -> Result<Vec<f64>> {
        let shape = CfShape::new(spec, theta, h)?;
        match self.engine {
            ExpectationEngine::Fourier => fourier_expectation(spec.set, &shape),
            ExpectationEngine::Dft => {
                if self.dft_cache.as_ref().is_none_or(|d| d.shape != shape) {
                    self.dft_cache = Some(DftDensity::build(shape)?);
                }
                Ok(self.dft_cache.as_ref().expect("density just built").expectation(spec.set))
            }
        }
    }
}

fn fourier_expectation(set: MomentSet, shape: &CfShape) -> Result<Vec<f64>> {
    let v_max = shape.cutoff(CF_LEVEL);
    if !(v_max <= MAX_FREQUENCY) {
        return Err(Error::Numerical(format!(
            "characteristic function decays too slowly (needs frequencies up to {v_max:.3e})"
        )));
    }
    let (x, w) = gl_nodes();
    let k = set.len();
    let mut acc = vec![0.0; k];
    let mut fh = vec![0.0; k];
    let mut panel = |lo: f64, hi: f64| {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (xi, wi) in x.iter().zip(w) {
            let v = mid + half * xi;
            let weight = wi * half * shape.cf(v);
            transform(set, v, &mut fh);
            for (a, f) in acc.iter_mut().zip(&fh) {
                *a += weight * f;
            }
        }
    };
    let width = v_max.min(16.0) / 16.0;
    // graded panels toward the origin, where |v|^Y is not smooth
    panel(0.0, width * 2f64.powi(-DYADIC_LEVELS));
    for l in (0..DYADIC_LEVELS).rev() {
        panel(width * 2f64.powi(-l - 1), width * 2f64.powi(-l));
    }
    let panels = ((v_max - width) / width).ceil().max(1.0) as usize;
    let step = (v_max - width) / panels as f64;
    for p in 0..panels {
        panel(width + p as f64 * step, width + (p + 1) as f64 * step);
    }
    Ok(acc.into_iter().map(|a| a / PI).collect())
}

/// Density of `u Z_h` on a uniform grid from the DFT of its characteristic
/// function.
#[derive(Debug, Clone)]
struct DftDensity {
    shape: CfShape,
    dx: f64,
    x0: f64,
    p: Vec<f64>,
}

/// Mass allowed outside the density grid.
pub const DFT_TAIL_MASS: f64 = 1e-8;
const DFT_MIN_LOG2: u32 = 14;
const RICHARDSON_LEVELS: usize = 4;
const DFT_MAX_LOG2: u32 = 22;

impl DftDensity {
    fn build(shape: CfShape) -> Result<Self> {
        let sd = (2.0 * shape.a).sqrt();
        let stable_scale = if shape.b > 0.0 { shape.b.powf(1.0 / shape.y) } else { 0.0 };
        // spacing: a power of two so that x = +-1 are grid points
        let mut dx = 2f64.powi(((sd + stable_scale) / 16.0).log2().floor() as i32).min(1.0 / 32.0);
        while shape.exponent(PI / dx) < CF_LEVEL {
            dx *= 0.5;
            if dx < 1e-9 {
                return Err(Error::Numerical("density grid spacing underflow".into()));
            }
        }
        // half-width from the Gaussian spread and the stable tail
        // P(|S| > L) ~ 2 c L^{-Y} / Y with c the Levy density constant
        let mut half = (12.0 * sd).max(2.0);
        if shape.b > 0.0 {
            let c = shape.b / (2.0 * crate::numerics::gamma_neg(shape.y)? * (PI * shape.y / 2.0).cos().abs());
            half = half.max((2.0 * c / (shape.y * DFT_TAIL_MASS)).powf(1.0 / shape.y));
        }
        let needed = (2.0 * half / dx).log2().ceil() as u32;
        let log2n = needed.max(DFT_MIN_LOG2);
        if log2n > DFT_MAX_LOG2 {
            return Err(Error::Numerical(format!(
                "density grid needs 2^{log2n} points to keep tail mass below {DFT_TAIL_MASS:e}"
            )));
        }
        let n = 1usize << log2n;
        let dv = 2.0 * PI / (n as f64 * dx);
        let v0 = -(n as f64) / 2.0 * dv;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * shape.cf(v0 + k as f64 * dv), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = dv / (2.0 * PI);
        let p = buf
            .iter()
            .enumerate()
            .map(|(j, z)| if j % 2 == 0 { scale * z.re } else { -scale * z.re })
            .collect();
        Ok(Self { shape, dx, x0: -(n as f64) / 2.0 * dx, p })
    }

    /// Trapezoid sums on spacings `dx` to `8 dx` combined by Richardson
    /// extrapolation. The moment functions have kinks or jumps at 0 and +-1
    /// (grid points at every spacing), which make the plain sum second-order
    /// accurate; `e^{-sqrt|x|}` has a cusp whose error expansion runs in
    /// `dx^{3/2}, dx^2, dx^{5/2}`.
    fn expectation(&self, set: MomentSet) -> Vec<f64> {
        let k = set.len();
        let mut sums = vec![vec![0.0; k]; RICHARDSON_LEVELS];
        let mut f = vec![0.0; k];
        for (j, &pj) in self.p.iter().enumerate() {
            let x = self.x0 + j as f64 * self.dx;
            if (x.abs() - 1.0).abs() < 0.25 * self.dx {
                // jump of the indicator: average of the one-sided limits
                let inner = eval_moments(x.signum() * (1.0 - 1e-15), set);
                let outer = eval_moments(x.signum() * (1.0 + 1e-15), set);
                for (fi, (a, b)) in f.iter_mut().zip(inner.iter().zip(&outer)) {
                    *fi = 0.5 * (a + b);
                }
            } else {
                f.copy_from_slice(&eval_moments(x, set));
            }
            for (level, sum) in sums.iter_mut().enumerate() {
                let stride = 1usize << level;
                if j % stride == 0 {
                    for (s, fi) in sum.iter_mut().zip(&f) {
                        *s += pj * fi * self.dx * stride as f64;
                    }
                }
            }
        }
        (0..k)
            .map(|i| {
                let orders: [f64; RICHARDSON_LEVELS - 1] =
                    if set == MomentSet::FSet && i == 1 { [1.5, 2.0, 2.5] } else { [2.0, 4.0, 6.0] };
                let mut row: Vec<f64> = sums.iter().map(|s| s[i]).collect();
                for q in orders {
                    let r = 2f64.powf(q);
                    row = row.windows(2).map(|w| (r * w[0] - w[1]) / (r - 1.0)).collect();
                }
                row[0]
            })
            .collect()
    }
}
