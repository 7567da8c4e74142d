//! CGMY-plus-Brownian models: parameters, tilted-measure constants, the exact
//! characteristic function, and path simulation for the Levy and
//! Heston-with-jumps cases.

use crate::error::{Error, Result};
use crate::numerics::{check_index, gamma_neg, gamma_pos, integrate, upper_gamma};
use crate::rng::{stream_rng, StreamRng};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// How the drift of the jump component is pinned down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftConvention {
    /// `E_P[J_t] = 0`.
    #[default]
    ZeroMeanJumps,
    /// Levy triplet drift `b` relative to the truncation function `1{|x| <= 1}`.
    Explicit { b: f64 },
}

/// `X_t = sigma W_t + J_t` with `J` a CGMY process whose Levy density is
/// `C+ e^{-Mx} x^{-1-Y}` on `x > 0` and `C- e^{Gx} |x|^{-1-Y}` on `x < 0`.
///
/// Zero intensities are accepted and switch the jump component off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyModelParams {
    pub sigma: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub y: f64,
    pub g: f64,
    pub m: f64,
    #[serde(default)]
    pub drift: DriftConvention,
}

impl LevyModelParams {
    /// Symmetric-intensity CGMY model with centered jumps.
    pub fn cgmy(sigma: f64, c: f64, g: f64, m: f64, y: f64) -> Result<Self> {
        let p = Self { sigma, c_plus: c, c_minus: c, y, g, m, drift: DriftConvention::ZeroMeanJumps };
        p.validate()?;
        Ok(p)
    }

    /// The reference parameter set `C = 0.028, G = 2.318, M = 4.025`.
    pub fn reference(sigma: f64, y: f64) -> Result<Self> {
        Self::cgmy(sigma, 0.028, 2.318, 4.025, y)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma = {} must be nonnegative", self.sigma)));
        }
        if !(self.c_plus >= 0.0 && self.c_minus >= 0.0) {
            return Err(Error::Domain(format!(
                "jump intensities ({}, {}) must be nonnegative",
                self.c_plus, self.c_minus
            )));
        }
        if !(self.g > 0.0 && self.m > 0.0) {
            return Err(Error::Domain(format!("tempering rates G = {}, M = {} must be positive", self.g, self.m)));
        }
        check_index(self.y)
    }

    pub fn has_jumps(&self) -> bool {
        self.c_plus > 0.0 || self.c_minus > 0.0
    }

    /// `(C+ + C-) / 2`.
    pub fn c_bar(&self) -> f64 {
        0.5 * (self.c_plus + self.c_minus)
    }

    /// `E_P[J_1]`.
    pub fn jump_mean(&self) -> Result<f64> {
        match self.drift {
            DriftConvention::ZeroMeanJumps => Ok(0.0),
            DriftConvention::Explicit { b } => Ok(b + self.big_jump_first_moment(1.0)?),
        }
    }

    /// `int_{|x| > a} x nu(dx)`.
    pub fn big_jump_first_moment(&self, a: f64) -> Result<f64> {
        self.validate()?;
        let s = 1.0 - self.y;
        let pos = self.c_plus * self.m.powf(-s) * upper_gamma(s, self.m * a);
        let neg = self.c_minus * self.g.powf(-s) * upper_gamma(s, self.g * a);
        Ok(pos - neg)
    }

    /// `int x^2 nu(dx)`.
    pub fn jump_second_moment(&self) -> Result<f64> {
        self.validate()?;
        let y = self.y;
        Ok(gamma_pos(2.0 - y) * (self.c_plus * self.m.powf(y - 2.0) + self.c_minus * self.g.powf(y - 2.0)))
    }

    /// `nu(|x| > a)`.
    pub fn tail_mass(&self, a: f64) -> Result<f64> {
        self.validate()?;
        let y = self.y;
        let pos = self.c_plus * self.m.powf(y) * upper_gamma(-y, self.m * a);
        let neg = self.c_minus * self.g.powf(y) * upper_gamma(-y, self.g * a);
        Ok(pos + neg)
    }
}

/// Characteristic exponent `log E exp(iu X_1)`.
pub fn cgmy_exponent(u: f64, p: &LevyModelParams) -> Result<Complex64> {
    p.validate()?;
    let diffusion = Complex64::new(-0.5 * p.sigma * p.sigma * u * u, 0.0);
    let mean = p.jump_mean()?;
    if !p.has_jumps() {
        return Ok(diffusion + Complex64::new(0.0, u * mean));
    }
    let y = p.y;
    let g = gamma_neg(y)?;
    let iu = Complex64::new(0.0, u);
    let m = Complex64::new(p.m, 0.0);
    let gg = Complex64::new(p.g, 0.0);
    let jumps = g
        * (p.c_plus * ((m - iu).powf(y) - p.m.powf(y)) + p.c_minus * ((gg + iu).powf(y) - p.g.powf(y)));
    // compensates the mean of the closed form so that E[J_1] = mean
    let centering = iu * (g * y * (p.c_plus * p.m.powf(y - 1.0) - p.c_minus * p.g.powf(y - 1.0)) + mean);
    Ok(diffusion + jumps + centering)
}

/// Characteristic function of `X_t` under `P`.
pub fn cgmy_cf(u: f64, p: &LevyModelParams, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time {t} must be positive")));
    }
    if u == 0.0 {
        p.validate()?;
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok((cgmy_exponent(u, p)? * t).exp())
}

/// `eta = int (e^{-phi} - 1 + phi) d nu~ = Gamma(-Y) (C+ M^Y + C- G^Y)`.
pub fn eta_constant(p: &LevyModelParams) -> Result<f64> {
    p.validate()?;
    let y = p.y;
    Ok(gamma_neg(y)? * (p.c_plus * p.m.powf(y) + p.c_minus * p.g.powf(y)))
}

/// `gamma~ = E~[J_1]`, the mean of the jump component under the tilted measure.
pub fn gamma_tilde(p: &LevyModelParams) -> Result<f64> {
    p.validate()?;
    let y = p.y;
    match p.drift {
        DriftConvention::ZeroMeanJumps => {
            Ok(gamma_pos(2.0 - y) / (y - 1.0) * (p.c_plus * p.m.powf(y - 1.0) - p.c_minus * p.g.powf(y - 1.0)))
        }
        DriftConvention::Explicit { b } => {
            // b~ = b + int_{0<|x|<=1} x (nu~ - nu)(dx), computed on s with x = s^{1/(2-Y)}
            // so the x^{1-Y} endpoint behaviour becomes bounded.
            let k = 1.0 / (2.0 - y);
            let side = |c: f64, rate: f64| -> Result<f64> {
                if c == 0.0 {
                    return Ok(0.0);
                }
                integrate(
                    |s: f64| {
                        let x = s.powf(k);
                        -(-rate * x).exp_m1() * x.powf(-y) * k * s.powf(k - 1.0)
                    },
                    0.0,
                    1.0,
                    1e-15,
                    1e-13,
                )
                .map(|v| c * v)
            };
            let b_tilde = b + side(p.c_plus, p.m)? - side(p.c_minus, p.g)?;
            Ok(b_tilde + (p.c_plus - p.c_minus) / (y - 1.0))
        }
    }
}

/// `t_i = i h` with `h = T / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub n: usize,
    pub t_horizon: f64,
    pub h: f64,
}

impl SamplingGrid {
    pub fn new(n: usize, t_horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("grid needs at least one increment".into()));
        }
        if !(t_horizon > 0.0 && t_horizon.is_finite()) {
            return Err(Error::Input(format!("horizon {t_horizon} must be positive")));
        }
        Ok(Self { n, t_horizon, h: t_horizon / n as f64 })
    }

    /// Grid over `days` trading days of `hours` hours sampled every `seconds`,
    /// with 252 trading days per year.
    pub fn trading(days: usize, hours: f64, seconds: f64) -> Result<Self> {
        let per_day = hours * 3600.0 / seconds;
        if !(per_day >= 1.0) || (per_day - per_day.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{hours} hours per day is not a whole number of {seconds}-second steps"
            )));
        }
        Self::new(days * per_day.round() as usize, days as f64 / 252.0)
    }

    /// Same step, `k` increments.
    pub fn sub_grid(&self, k: usize) -> Result<Self> {
        Self::new(k, self.h * k as f64)
    }
}

/// The observed increments of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSeries {
    pub values: Vec<f64>,
    pub grid: SamplingGrid,
}

impl IncrementSeries {
    pub fn new(values: Vec<f64>, grid: SamplingGrid) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Input(format!(
                "series has {} values but the grid has {} increments",
                values.len(),
                grid.n
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("increment {i} is not finite")));
        }
        Ok(Self { values, grid })
    }

    /// Builds a series over horizon `t_horizon` from raw increments.
    pub fn from_values(values: Vec<f64>, t_horizon: f64) -> Result<Self> {
        let grid = SamplingGrid::new(values.len(), t_horizon)?;
        Self::new(values, grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Consecutive sub-series `[start, start + k)` on the same step.
    pub fn window(&self, start: usize, k: usize) -> Result<Self> {
        if start + k > self.len() {
            return Err(Error::Input(format!("window [{start}, {}) exceeds length {}", start + k, self.len())));
        }
        Self::new(self.values[start..start + k].to_vec(), self.grid.sub_grid(k)?)
    }

    /// CSV with header `i,increment`, one row per increment, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "increment"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`IncrementSeries::write_csv`].
    pub fn read_csv<R: Read>(input: R, t_horizon: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "increment"] {
            return Err(Error::Input(format!("expected header `i,increment`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let v: f64 = rec
                .get(1)
                .ok_or_else(|| Error::Input(format!("row {row}: missing increment")))?
                .trim()
                .parse()
                .map_err(|e| Error::Input(format!("row {row}: {e}")))?;
            values.push(v);
        }
        Self::from_values(values, t_horizon)
    }
}

/// Knobs of the jump simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSimConfig {
    /// Jumps with modulus at most `delta` are replaced by a Gaussian with the
    /// variance of the untempered stable small jumps. `None` picks the cutoff
    /// from `jumps_per_step`.
    pub delta: Option<f64>,
    /// Expected number of untempered jumps above the cutoff per increment.
    /// The Gaussian part then has standard deviation about
    /// `delta sqrt(jumps_per_step Y / (2 - Y))`, so it is a sum of many jumps.
    pub jumps_per_step: f64,
}

impl Default for JumpSimConfig {
    fn default() -> Self {
        Self { delta: None, jumps_per_step: 16.0 }
    }
}

impl JumpSimConfig {
    /// Small-jump cutoff for `p` on `grid`.
    pub fn cutoff(&self, p: &LevyModelParams, grid: &SamplingGrid) -> Result<f64> {
        let delta = match self.delta {
            Some(d) => d,
            None => {
                if !(self.jumps_per_step > 0.0 && self.jumps_per_step.is_finite()) {
                    return Err(Error::Config(format!("jumps per step {} must be positive", self.jumps_per_step)));
                }
                ((p.c_plus + p.c_minus) * grid.h / (p.y * self.jumps_per_step)).powf(1.0 / p.y)
            }
        };
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!("small-jump cutoff delta = {delta} must be positive")));
        }
        Ok(delta)
    }
}

/// A simulated path together with its explicit (`|x| > delta`) jumps.
#[derive(Debug, Clone)]
pub struct CgmyPath {
    pub series: IncrementSeries,
    /// `(increment index, jump size)` of each simulated big jump.
    pub jumps: Vec<(usize, f64)>,
}

/// Adds the CGMY jump component on `grid` to `out`.
///
/// Jumps above `delta` are a compound Poisson process obtained by thinning
/// Pareto-tailed stable jumps with acceptance `e^{-Mx}` / `e^{Gx}`; the rest is
/// a centered Gaussian matching `int_{|x|<=delta} x^2 nu~(dx)`. The drift makes
/// `E[J_h] = h E_P[J_1]`.
fn add_cgmy_jumps(
    p: &LevyModelParams,
    grid: &SamplingGrid,
    cfg: &JumpSimConfig,
    rng: &mut StreamRng,
    out: &mut [f64],
    jumps: &mut Vec<(usize, f64)>,
) -> Result<()> {
    if !p.has_jumps() {
        return Ok(());
    }
    let delta = cfg.cutoff(p, grid)?;
    let (y, h) = (p.y, grid.h);
    let small_sd = ((p.c_plus + p.c_minus) * delta.powf(2.0 - y) / (2.0 - y) * h).sqrt();
    let drift = h * (p.jump_mean()? - p.big_jump_first_moment(delta)?);
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += small_sd * z + drift;
    }
    let n = grid.n;
    for (c, rate, sign) in [(p.c_plus, p.m, 1.0), (p.c_minus, p.g, -1.0)] {
        if c == 0.0 {
            continue;
        }
        let mean_count = c * delta.powf(-y) / y * grid.t_horizon;
        let count = Poisson::new(mean_count)
            .map_err(|e| Error::Numerical(format!("poisson({mean_count}): {e}")))?
            .sample(rng) as u64;
        for _ in 0..count {
            let u: f64 = rng.random();
            let x = delta * (1.0 - u).powf(-1.0 / y);
            let keep: f64 = rng.random();
            let idx = ((rng.random::<f64>() * n as f64) as usize).min(n - 1);
            if keep < (-rate * x).exp() {
                out[idx] += sign * x;
                jumps.push((idx, sign * x));
            }
        }
    }
    Ok(())
}

/// Simulates `n` increments of `X = sigma W + J` under `P`.
pub fn simulate_cgmy_increments(p: &LevyModelParams, grid: &SamplingGrid, seed: u64) -> Result<IncrementSeries> {
    Ok(simulate_cgmy_path(p, grid, &JumpSimConfig::default(), &mut stream_rng(seed, 0))?.series)
}

/// Simulation with an explicit configuration and random stream; also returns
/// the big jumps.
pub fn simulate_cgmy_path(
    p: &LevyModelParams,
    grid: &SamplingGrid,
    cfg: &JumpSimConfig,
    rng: &mut StreamRng,
) -> Result<CgmyPath> {
    p.validate()?;
    let sd = p.sigma * grid.h.sqrt();
    let mut values: Vec<f64> = (0..grid.n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect();
    let mut jumps = Vec::new();
    add_cgmy_jumps(p, grid, cfg, rng, &mut values, &mut jumps)?;
    Ok(CgmyPath { series: IncrementSeries::new(values, *grid)?, jumps })
}

/// Variance dynamics `dV = kappa (theta - V) dt + xi sqrt(V) dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub kappa: f64,
    pub xi: f64,
    pub theta: f64,
    /// Defaults to `theta`.
    #[serde(default)]
    pub v0: Option<f64>,
}

impl Default for HestonParams {
    fn default() -> Self {
        Self { kappa: 5.0, xi: 0.5, theta: 0.16, v0: None }
    }
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.theta > 0.0 && self.xi >= 0.0) {
            return Err(Error::Domain(format!(
                "heston parameters kappa = {}, xi = {}, theta = {} out of range",
                self.kappa, self.xi, self.theta
            )));
        }
        if self.v0.is_some_and(|v| !(v >= 0.0)) {
            return Err(Error::Domain("initial variance must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn initial_variance(&self) -> f64 {
        self.v0.unwrap_or(self.theta)
    }
}

/// A stochastic-volatility path with its exact on-grid integrated variance.
#[derive(Debug, Clone)]
pub struct SvPath {
    pub increments: IncrementSeries,
    /// `V_{t_i}` for `i = 0..=n`, floored at zero.
    pub spot_variance: Vec<f64>,
    iv_prefix: Vec<f64>,
}

impl SvPath {
    fn new(increments: IncrementSeries, spot_variance: Vec<f64>) -> Self {
        let h = increments.grid.h;
        let mut iv_prefix = Vec::with_capacity(spot_variance.len());
        iv_prefix.push(0.0);
        let mut acc = 0.0;
        for w in spot_variance.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            iv_prefix.push(acc);
        }
        Self { increments, spot_variance, iv_prefix }
    }

    /// Trapezoid integral of the spot variance over increments `[start, end)`.
    pub fn true_iv(&self, start: usize, end: usize) -> Result<f64> {
        if start > end || end > self.increments.len() {
            return Err(Error::Input(format!("window [{start}, {end}) outside path of length {}", self.increments.len())));
        }
        Ok(self.iv_prefix[end] - self.iv_prefix[start])
    }
}

/// Heston variance (full-truncation Euler) with CGMY jumps; `W`, `B` and `J`
/// independent. The `sigma` of `jump_params` is ignored.
pub fn simulate_heston_cgmy(
    sv: &HestonParams,
    jump_params: &LevyModelParams,
    grid: &SamplingGrid,
    seed: u64,
) -> Result<SvPath> {
    simulate_heston_cgmy_with(sv, jump_params, grid, &JumpSimConfig::default(), &mut stream_rng(seed, 0))
}

pub fn simulate_heston_cgmy_with(
    sv: &HestonParams,
    jump_params: &LevyModelParams,
    grid: &SamplingGrid,
    cfg: &JumpSimConfig,
    rng: &mut StreamRng,
) -> Result<SvPath> {
    sv.validate()?;
    jump_params.validate()?;
    let h = grid.h;
    let sqrt_h = h.sqrt();
    let mut v = sv.initial_variance();
    let mut spot = Vec::with_capacity(grid.n + 1);
    let mut values = Vec::with_capacity(grid.n);
    spot.push(v.max(0.0));
    for _ in 0..grid.n {
        let vp = v.max(0.0);
        let zw: f64 = StandardNormal.sample(rng);
        let zb: f64 = StandardNormal.sample(rng);
        values.push(vp.sqrt() * sqrt_h * zw);
        v += sv.kappa * (sv.theta - vp) * h + sv.xi * vp.sqrt() * sqrt_h * zb;
        spot.push(v.max(0.0));
    }
    let mut jumps = Vec::new();
    add_cgmy_jumps(jump_params, grid, cfg, rng, &mut values, &mut jumps)?;
    Ok(SvPath::new(IncrementSeries::new(values, *grid)?, spot))
}
