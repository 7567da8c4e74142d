//! The five-step estimation algorithm for Levy data and the block-localized
//! integrated-variance estimator.

use crate::error::{Error, Result};
use crate::levy::IncrementSeries;
use crate::mme::{
    fit_theta, solve_gn, ExpectationEngine, MomentObjective, MomentSet, MomentSpec, NelderMeadOptions, ThetaEstimate,
};
use crate::threshold::{threshold_first_order, threshold_second_order};
use crate::trqv::{pilot_sigma, realized_variance, trqv, PilotVariant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the pilot variance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "rule", content = "variant")]
pub enum PilotRule {
    /// `p01` when realized variance exceeds [`AUTO_PILOT_RV_CUTOFF`], else `p02`.
    #[default]
    Auto,
    Fixed(PilotVariant),
}

/// Realized-variance level above which the automatic rule switches to `p01`.
pub const AUTO_PILOT_RV_CUTOFF: f64 = 0.09;

/// Longest run of repeated refinement rounds.
pub const MAX_REFINEMENT_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub pilot: PilotRule,
    /// Initial jump intensity of the first fit.
    pub c0: f64,
    /// Initial index of the first fit.
    pub y0: f64,
    pub optimizer: NelderMeadOptions,
    pub engine: ExpectationEngine,
    /// Extra rounds of the fixed-variance fit and threshold update after the
    /// first pass (0 disables, at most [`MAX_REFINEMENT_ROUNDS`]).
    pub refinement_rounds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pilot: PilotRule::Auto,
            c0: 0.1,
            y0: 1.3,
            optimizer: NelderMeadOptions::local(),
            engine: ExpectationEngine::Fourier,
            refinement_rounds: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.y0 > 1.0 && self.y0 < 2.0) {
            return Err(Error::Config(format!("initial point C0 = {}, Y0 = {} out of range", self.c0, self.y0)));
        }
        if self.refinement_rounds > MAX_REFINEMENT_ROUNDS {
            return Err(Error::Config(format!(
                "at most {MAX_REFINEMENT_ROUNDS} refinement rounds, got {}",
                self.refinement_rounds
            )));
        }
        Ok(())
    }
}

/// Distance from 2 within which a fitted index is treated as inseparable from
/// the Brownian part.
pub const BROWNIAN_EDGE: f64 = 0.05;

/// Formula that produced a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    #[default]
    SecondOrder,
    /// The second-order radicand was not positive.
    FirstOrder,
    /// The fitted jump part was degenerate (`C = 0` or `Y` within
    /// [`BROWNIAN_EDGE`] of 2); the stage's scaling threshold `1/u` was used.
    Scaling,
}

/// Stage at which a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pilot,
    FullFit,
    FirstThreshold,
    JumpFit,
    FinalThreshold,
}

/// Every intermediate of one run. Quantities after a failed stage are `None`
/// and `failure` says where and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub pilot_variant: PilotVariant,
    pub pilot: f64,
    /// Scaling of the first fit.
    pub u1: f64,
    pub theta1: Option<ThetaEstimate>,
    pub eps1: Option<f64>,
    pub eps1_source: ThresholdSource,
    pub sigma2_step3: Option<f64>,
    /// Scaling of the fixed-variance fit.
    pub u2: Option<f64>,
    pub theta2: Option<ThetaEstimate>,
    pub eps_star_hat: Option<f64>,
    pub eps_star_source: ThresholdSource,
    pub sigma2_final: Option<f64>,
    /// Refinement rounds actually run after the first pass.
    pub refinement_rounds: usize,
    pub failure: Option<(Stage, String)>,
}

impl EstimateReport {
    pub fn c2(&self) -> Option<f64> {
        self.theta2.map(|t| t.c)
    }

    pub fn y2(&self) -> Option<f64> {
        self.theta2.map(|t| t.y)
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Some threshold did not come from the second-order formula.
    pub fn used_fallback(&self) -> bool {
        self.eps1_source != ThresholdSource::SecondOrder || self.eps_star_source != ThresholdSource::SecondOrder
    }
}

fn degenerate_jumps(theta: &ThetaEstimate) -> bool {
    !(theta.c > 0.0) || theta.y > 2.0 - BROWNIAN_EDGE
}

/// Threshold for a fitted `theta`; `scaling_u` is the scaling of the stage.
fn stage_threshold(theta: &ThetaEstimate, scaling_u: f64, h: f64) -> Result<(f64, ThresholdSource)> {
    if degenerate_jumps(theta) {
        return Ok((1.0 / scaling_u, ThresholdSource::Scaling));
    }
    match threshold_second_order(theta.sigma2, theta.c, theta.y, h) {
        Ok(e) => Ok((e, ThresholdSource::SecondOrder)),
        Err(Error::ThresholdBracket { .. }) => {
            Ok((threshold_first_order(theta.sigma2, theta.y, h)?, ThresholdSource::FirstOrder))
        }
        Err(e) => Err(e),
    }
}

/// Runs the five steps on one series. Errors only on unusable input; a failing
/// stage is reported inside the returned report.
pub fn estimate_cgmy(series: &IncrementSeries, config: &PipelineConfig) -> Result<EstimateReport> {
    config.validate()?;
    if series.is_empty() {
        return Err(Error::Input("empty increment series".into()));
    }
    let h = series.grid.h;
    let pilot_variant = match config.pilot {
        PilotRule::Fixed(v) => v,
        PilotRule::Auto => {
            if realized_variance(series)? > AUTO_PILOT_RV_CUTOFF {
                PilotVariant::P01
            } else {
                PilotVariant::P02
            }
        }
    };
    let pilot = pilot_sigma(series, pilot_variant)?;
    let mut report = EstimateReport {
        pilot_variant,
        pilot,
        u1: f64::NAN,
        theta1: None,
        eps1: None,
        eps1_source: ThresholdSource::SecondOrder,
        sigma2_step3: None,
        u2: None,
        theta2: None,
        eps_star_hat: None,
        eps_star_source: ThresholdSource::SecondOrder,
        sigma2_final: None,
        refinement_rounds: 0,
        failure: None,
    };
    let fail = |mut r: EstimateReport, stage: Stage, e: Error| {
        r.failure = Some((stage, e.to_string()));
        Ok(r)
    };

    // step 1
    let spec = match MomentSpec::from_variance(MomentSet::FSet, pilot, h) {
        Ok(s) => s,
        Err(e) => return fail(report, Stage::Pilot, e),
    };
    report.u1 = spec.scaling_u;

    // step 2
    let init = ThetaEstimate::at(pilot, config.c0, config.y0);
    let theta1 = match MomentObjective::new(series, spec, config.engine)
        .and_then(|mut obj| fit_theta(&mut obj, &init, &config.optimizer))
    {
        Ok(t) => t,
        Err(e) => return fail(report, Stage::FullFit, e),
    };
    report.theta1 = Some(theta1);

    // step 3
    let (eps1, source) = match stage_threshold(&theta1, report.u1, h) {
        Ok(v) => v,
        Err(e) => return fail(report, Stage::FirstThreshold, e),
    };
    report.eps1 = Some(eps1);
    report.eps1_source = source;
    let sigma2_2 = trqv(series, eps1)?;
    report.sigma2_step3 = Some(sigma2_2);

    // steps 4 and 5, optionally repeated
    let mut sigma2 = sigma2_2;
    let start_cy = |t: &ThetaEstimate| if degenerate_jumps(t) { (config.c0, config.y0) } else { (t.c, t.y) };
    let mut init_cy = start_cy(&theta1);
    for round in 0..=config.refinement_rounds {
        let u2 = match MomentSpec::from_variance(MomentSet::GSet, sigma2, h) {
            Ok(s) => s.scaling_u,
            Err(e) => return fail(report, Stage::JumpFit, e),
        };
        report.u2 = Some(u2);
        let theta2 = match solve_gn(series, sigma2, init_cy, &config.optimizer, config.engine) {
            Ok(t) => t,
            Err(e) => return fail(report, Stage::JumpFit, e),
        };
        report.theta2 = Some(theta2);
        let (eps, source) = match stage_threshold(&theta2, u2, h) {
            Ok(v) => v,
            Err(e) => return fail(report, Stage::FinalThreshold, e),
        };
        report.eps_star_hat = Some(eps);
        report.eps_star_source = source;
        let s = trqv(series, eps)?;
        report.sigma2_final = Some(s);
        report.refinement_rounds = round;
        sigma2 = s;
        init_cy = start_cy(&theta2);
    }
    Ok(report)
}

/// Block layout and per-block estimation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockConfig {
    /// Observations per block.
    pub k_n: usize,
    /// Value used for a block whose estimation fails.
    pub fallback: PilotVariant,
    pub pipeline: PipelineConfig,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self { k_n: 160, fallback: PilotVariant::P02, pipeline: PipelineConfig::default() }
    }
}

/// Smallest block length accepted.
pub const MIN_BLOCK_LEN: usize = 32;

/// Estimate for one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub index: usize,
    pub start: usize,
    pub sigma2_hat: f64,
    /// `sigma2_hat * k_n * h`.
    pub iv_contribution: f64,
    /// The pipeline failed and the pilot value was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimates {
    pub blocks: Vec<BlockEstimate>,
    /// Trailing observations not covered by a full block.
    pub dropped: usize,
}

impl BlockEstimates {
    /// Sum of the block contributions.
    pub fn integrated_variance(&self) -> f64 {
        self.blocks.iter().map(|b| b.iv_contribution).sum()
    }

    pub fn fallbacks(&self) -> usize {
        self.blocks.iter().filter(|b| b.fallback).count()
    }
}

/// Splits `series` into consecutive blocks of `k_n` increments (a trailing
/// partial block is dropped), treats volatility as constant in each, and
/// estimates it with [`estimate_cgmy`].
pub fn estimate_iv_blocks(series: &IncrementSeries, config: &BlockConfig) -> Result<BlockEstimates> {
    if config.k_n < MIN_BLOCK_LEN {
        return Err(Error::Config(format!("block length {} below the minimum {MIN_BLOCK_LEN}", config.k_n)));
    }
    config.pipeline.validate()?;
    if series.len() < config.k_n {
        return Err(Error::Input(format!("series of {} increments shorter than one block of {}", series.len(), config.k_n)));
    }
    let k = config.k_n;
    let count = series.len() / k;
    let blocks = (0..count)
        .into_par_iter()
        .map(|b| {
            let block = series.window(b * k, k)?;
            let estimate = estimate_cgmy(&block, &config.pipeline).ok().and_then(|r| r.sigma2_final);
            let (sigma2_hat, fallback) = match estimate {
                Some(s) if s.is_finite() => (s, false),
                _ => (pilot_sigma(&block, config.fallback)?, true),
            };
            Ok(BlockEstimate {
                index: b,
                start: b * k,
                sigma2_hat,
                iv_contribution: sigma2_hat * block.grid.t_horizon,
                fallback,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockEstimates { blocks, dropped: series.len() - count * k })
}
