//! Monte Carlo studies: configuration, per-path runs, summary tables and CSV
//! reports for the Levy study, the stochastic-volatility study and the
//! threshold-equation curves.

use crate::error::{Error, Result};
use crate::levy::{
    simulate_cgmy_increments, simulate_heston_cgmy, HestonParams, IncrementSeries, LevyModelParams, SamplingGrid,
};
use crate::pipeline::{estimate_cgmy, estimate_iv_blocks, BlockConfig, EstimateReport, PipelineConfig};
use crate::rng::derive_seed;
use crate::threshold::{
    exact_residual, leading_order_residual, solve_threshold_exact_with, threshold_first_order, threshold_second_order,
    ExactThreshold, ThresholdInputs, TiltedSample,
};
use crate::trqv::trqv;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Token written in place of a statistic that could not be computed.
pub const FAILED: &str = "FAILED";

/// Sampling frequency of the observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frequency {
    #[serde(rename = "5s")]
    FiveSeconds,
    #[serde(rename = "1min")]
    OneMinute,
    #[serde(rename = "5min")]
    FiveMinutes,
    #[serde(rename = "seconds")]
    Seconds(f64),
}

impl Frequency {
    pub fn seconds(&self) -> f64 {
        match *self {
            Frequency::FiveSeconds => 5.0,
            Frequency::OneMinute => 60.0,
            Frequency::FiveMinutes => 300.0,
            Frequency::Seconds(s) => s,
        }
    }
}

impl std::str::FromStr for Frequency {
    type Err = Error;

    /// `5s`, `1min`, `5min`, or a number of seconds (optionally suffixed `s`).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "5s" => Ok(Frequency::FiveSeconds),
            "1min" => Ok(Frequency::OneMinute),
            "5min" => Ok(Frequency::FiveMinutes),
            other => other
                .trim_end_matches('s')
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .map(Frequency::Seconds)
                .ok_or_else(|| Error::Config(format!("unknown frequency '{other}'"))),
        }
    }
}

/// Trading calendar and sampling frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub frequency: Frequency,
    pub trading_days: usize,
    pub hours_per_day: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { frequency: Frequency::FiveMinutes, trading_days: 252, hours_per_day: 6.5 }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Result<SamplingGrid> {
        self.grid_for_days(self.trading_days)
    }

    fn grid_for_days(&self, days: usize) -> Result<SamplingGrid> {
        if days == 0 {
            return Err(Error::Config("at least one trading day is needed".into()));
        }
        SamplingGrid::trading(days, self.hours_per_day, self.frequency.seconds())
    }

    pub fn per_day(&self) -> Result<usize> {
        Ok(self.grid_for_days(1)?.n)
    }
}

fn default_model() -> LevyModelParams {
    LevyModelParams::reference(0.2, 1.35).expect("reference parameters are valid")
}

fn default_sv_jumps() -> LevyModelParams {
    LevyModelParams::reference(0.0, 1.7).expect("reference parameters are valid")
}

/// Settings of the Levy-data study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub model: LevyModelParams,
    pub grid: GridSpec,
    pub n_paths: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    /// Size of the tilted-measure sample used to solve for the exact optimal
    /// threshold; 0 skips it and the row that depends on it.
    pub exact_threshold_paths: usize,
    /// CSV destination; a `.meta.json` sidecar is written next to it.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: default_model(),
            grid: GridSpec::default(),
            n_paths: 200,
            seed: 1,
            pipeline: PipelineConfig::default(),
            exact_threshold_paths: 0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        self.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.model.sigma > 0.0) {
            return Err(Error::Config("the study needs sigma > 0".into()));
        }
        if self.exact_threshold_paths != 0 && self.exact_threshold_paths < 1000 {
            return Err(Error::Config("exact_threshold_paths must be 0 or at least 1000".into()));
        }
        self.grid.grid()?;
        self.pipeline.validate()
    }
}

/// One row of a study table. Statistics that could not be computed are `None`
/// and written as [`FAILED`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub estimator: String,
    pub sample_mean: Option<f64>,
    /// Divisor `n - 1`; 0 when only one value is available.
    pub sample_sd: Option<f64>,
    /// Mean of `(estimate - truth) / truth`.
    pub mean_relative_error: Option<f64>,
    pub sd_relative_error: Option<f64>,
    /// Mean of `(estimate - truth)^2`, which equals
    /// `sd^2 (n - 1) / n + (mean - truth)^2`.
    pub mse: Option<f64>,
    pub truth: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Fewer than two values: the SD is reported as 0.
    pub degenerate: bool,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

impl StudyRow {
    /// Summarizes `values` (one entry per path, `None` for a failed path)
    /// against `truth`.
    pub fn summarize(estimator: &str, values: &[Option<f64>], truth: f64) -> Self {
        let ok: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
        let n_ok = ok.len();
        let mut row = StudyRow {
            estimator: estimator.to_string(),
            sample_mean: None,
            sample_sd: None,
            mean_relative_error: None,
            sd_relative_error: None,
            mse: None,
            truth,
            n_ok,
            n_failed: values.len() - n_ok,
            degenerate: n_ok < 2,
        };
        if n_ok == 0 {
            return row;
        }
        let (mean, sd) = mean_sd(&ok);
        row.sample_mean = Some(mean);
        row.sample_sd = Some(sd);
        row.mse = Some(ok.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / n_ok as f64);
        if truth != 0.0 {
            let rel: Vec<f64> = ok.iter().map(|v| (v - truth) / truth).collect();
            let (rm, rs) = mean_sd(&rel);
            row.mean_relative_error = Some(rm);
            row.sd_relative_error = Some(rs);
        }
        row
    }
}

/// Column names of a study table.
pub const STUDY_COLUMNS: [&str; 10] = [
    "estimator",
    "sample_mean",
    "sample_sd",
    "mean_relative_error",
    "sd_relative_error",
    "mse",
    "truth",
    "n_ok",
    "n_failed",
    "degenerate",
];

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:e}"),
        _ => FAILED.to_string(),
    }
}

pub fn write_study_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STUDY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.estimator.clone(),
            cell(r.sample_mean),
            cell(r.sample_sd),
            cell(r.mean_relative_error),
            cell(r.sd_relative_error),
            cell(r.mse),
            cell(Some(r.truth)),
            r.n_ok.to_string(),
            r.n_failed.to_string(),
            r.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of one simulated path of the Levy study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub index: usize,
    pub seed: u64,
    pub report: Option<EstimateReport>,
    /// Error that stopped the path before a report existed.
    pub error: Option<String>,
    /// TRQV at the second-order threshold computed from the true parameters.
    pub sigma2_true_params_threshold: Option<f64>,
    /// TRQV at the exact optimal threshold.
    pub sigma2_exact_threshold: Option<f64>,
}

/// Thresholds computed from the true parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceThresholds {
    pub first_order: f64,
    pub second_order: f64,
    pub exact: Option<ExactThreshold>,
}

impl ReferenceThresholds {
    /// Truth used for the estimated-threshold rows: the exact threshold when
    /// it was solved, the second-order one otherwise.
    pub fn target(&self) -> f64 {
        self.exact.map_or(self.second_order, |e| e.eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStudy {
    pub rows: Vec<StudyRow>,
    pub paths: Vec<PathOutcome>,
    pub thresholds: ReferenceThresholds,
}

impl McStudy {
    pub fn row(&self, estimator: &str) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }
}

/// Row names of the Levy study, in table order.
pub mod rows {
    pub const PILOT_VARIANCE: &str = "pilot_variance";
    pub const FULL_FIT_VARIANCE: &str = "full_fit_variance";
    pub const FULL_FIT_INTENSITY: &str = "full_fit_intensity";
    pub const FULL_FIT_INDEX: &str = "full_fit_index";
    pub const FIRST_THRESHOLD: &str = "first_threshold";
    pub const FIRST_TRQV_VARIANCE: &str = "first_trqv_variance";
    pub const JUMP_FIT_INTENSITY: &str = "jump_fit_intensity";
    pub const JUMP_FIT_INDEX: &str = "jump_fit_index";
    pub const FINAL_THRESHOLD: &str = "final_threshold";
    pub const FINAL_VARIANCE: &str = "final_variance";
    pub const TRUE_PARAMS_THRESHOLD_VARIANCE: &str = "true_params_threshold_variance";
    pub const EXACT_THRESHOLD_VARIANCE: &str = "exact_threshold_variance";
}

fn reference_thresholds(cfg: &ExperimentConfig, grid: &SamplingGrid) -> Result<ReferenceThresholds> {
    let p = &cfg.model;
    let s2 = p.sigma * p.sigma;
    let first_order = threshold_first_order(s2, p.y, grid.h)?;
    let second_order = threshold_second_order(s2, p.c_bar(), p.y, grid.h)?;
    let exact = if cfg.exact_threshold_paths > 0 {
        let sample = TiltedSample::draw(p, grid.h, cfg.exact_threshold_paths, derive_seed(cfg.seed, u64::MAX))?;
        Some(solve_threshold_exact_with(&sample, &ThresholdInputs::from_params(p, grid), cfg.exact_threshold_paths)?)
    } else {
        None
    };
    Ok(ReferenceThresholds { first_order, second_order, exact })
}

fn run_path(cfg: &ExperimentConfig, grid: &SamplingGrid, th: &ReferenceThresholds, index: usize) -> PathOutcome {
    let seed = derive_seed(cfg.seed, index as u64);
    let mut out = PathOutcome {
        index,
        seed,
        report: None,
        error: None,
        sigma2_true_params_threshold: None,
        sigma2_exact_threshold: None,
    };
    let series = match simulate_cgmy_increments(&cfg.model, grid, seed) {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.sigma2_true_params_threshold = trqv(&series, th.second_order).ok();
    out.sigma2_exact_threshold = th.exact.and_then(|e| trqv(&series, e.eps).ok());
    match estimate_cgmy(&series, &cfg.pipeline) {
        Ok(r) => out.report = Some(r),
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Simulates `n_paths` series, runs the estimation pipeline on each and
/// summarizes every stage. Failed paths are counted, never fatal.
pub fn run_mc_study(cfg: &ExperimentConfig) -> Result<McStudy> {
    cfg.validate()?;
    let grid = cfg.grid.grid()?;
    let thresholds = reference_thresholds(cfg, &grid)?;
    let paths: Vec<PathOutcome> =
        (0..cfg.n_paths).into_par_iter().map(|i| run_path(cfg, &grid, &thresholds, i)).collect();
    let p = &cfg.model;
    let s2 = p.sigma * p.sigma;
    let eps_target = thresholds.target();
    let col = |f: &dyn Fn(&EstimateReport) -> Option<f64>| -> Vec<Option<f64>> {
        paths.iter().map(|o| o.report.as_ref().and_then(f)).collect()
    };
    let mut table = vec![
        StudyRow::summarize(rows::PILOT_VARIANCE, &col(&|r| Some(r.pilot)), s2),
        StudyRow::summarize(rows::FULL_FIT_VARIANCE, &col(&|r| r.theta1.map(|t| t.sigma2)), s2),
        StudyRow::summarize(rows::FULL_FIT_INTENSITY, &col(&|r| r.theta1.map(|t| t.c)), p.c_bar()),
        StudyRow::summarize(rows::FULL_FIT_INDEX, &col(&|r| r.theta1.map(|t| t.y)), p.y),
        StudyRow::summarize(rows::FIRST_THRESHOLD, &col(&|r| r.eps1), eps_target),
        StudyRow::summarize(rows::FIRST_TRQV_VARIANCE, &col(&|r| r.sigma2_step3), s2),
        StudyRow::summarize(rows::JUMP_FIT_INTENSITY, &col(&|r| r.c2()), p.c_bar()),
        StudyRow::summarize(rows::JUMP_FIT_INDEX, &col(&|r| r.y2()), p.y),
        StudyRow::summarize(rows::FINAL_THRESHOLD, &col(&|r| r.eps_star_hat), eps_target),
        StudyRow::summarize(rows::FINAL_VARIANCE, &col(&|r| r.sigma2_final), s2),
        StudyRow::summarize(
            rows::TRUE_PARAMS_THRESHOLD_VARIANCE,
            &paths.iter().map(|o| o.sigma2_true_params_threshold).collect::<Vec<_>>(),
            s2,
        ),
    ];
    if thresholds.exact.is_some() {
        table.push(StudyRow::summarize(
            rows::EXACT_THRESHOLD_VARIANCE,
            &paths.iter().map(|o| o.sigma2_exact_threshold).collect::<Vec<_>>(),
            s2,
        ));
    }
    Ok(McStudy { rows: table, paths, thresholds })
}

#[derive(Serialize)]
struct McStudyMeta<'a> {
    config: &'a ExperimentConfig,
    thresholds: &'a ReferenceThresholds,
    conventions: [&'static str; 4],
    failed_paths: Vec<(usize, String)>,
    fallback_paths: Vec<usize>,
}

fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the table to `path` and the configuration, reference thresholds,
/// conventions and failures to the `.meta.json` sidecar.
pub fn save_mc_study(study: &McStudy, cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    write_study_csv(&study.rows, create(path)?)?;
    let meta = McStudyMeta {
        config: cfg,
        thresholds: &study.thresholds,
        conventions: [
            "sample_sd uses divisor n - 1",
            "mse is the mean squared error about truth, i.e. population variance plus squared bias",
            "relative error is (estimate - truth) / truth",
            "threshold rows use the exact optimal threshold as truth when it was solved, else the second-order threshold",
        ],
        failed_paths: study
            .paths
            .iter()
            .filter_map(|o| {
                o.error.clone().or_else(|| o.report.as_ref()?.failure.as_ref().map(|(s, m)| format!("{s:?}: {m}")))
                    .map(|m| (o.index, m))
            })
            .collect(),
        fallback_paths: study
            .paths
            .iter()
            .filter(|o| o.report.as_ref().is_some_and(|r| r.used_fallback()))
            .map(|o| o.index)
            .collect(),
    };
    let mut w = create(&meta_path(path))?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    w.flush()?;
    Ok(())
}

/// Settings of the stochastic-volatility study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvStudyConfig {
    pub heston: HestonParams,
    /// Jump part; its `sigma` is ignored.
    pub jumps: LevyModelParams,
    pub grid: GridSpec,
    /// 1-based trading days whose integrated variance is estimated.
    pub days: Vec<usize>,
    pub n_paths: usize,
    pub seed: u64,
    pub blocks: BlockConfig,
    pub output: Option<PathBuf>,
}

impl Default for SvStudyConfig {
    fn default() -> Self {
        Self {
            heston: HestonParams::default(),
            jumps: default_sv_jumps(),
            grid: GridSpec { frequency: Frequency::FiveSeconds, ..GridSpec::default() },
            days: vec![2, 52, 102, 152, 202, 252],
            n_paths: 200,
            seed: 1,
            blocks: BlockConfig::default(),
            output: None,
        }
    }
}

impl SvStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        self.heston.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.jumps.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.grid.grid()?;
        if self.days.is_empty() {
            return Err(Error::Config("no days selected".into()));
        }
        if let Some(d) = self.days.iter().find(|d| **d == 0 || **d > self.grid.trading_days) {
            return Err(Error::Input(format!("day {d} outside 1..={}", self.grid.trading_days)));
        }
        Ok(())
    }
}

/// Daily integrated variance of one path on one selected day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyEstimate {
    pub day: usize,
    pub estimate: f64,
    pub truth: f64,
    pub fallback_blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvRow {
    pub day: usize,
    /// Median over paths of `|estimate - truth|`.
    pub mad: Option<f64>,
    pub mean_estimate: Option<f64>,
    pub mean_truth: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub fallback_blocks: usize,
}

pub const SV_COLUMNS: [&str; 7] = ["day", "mad", "mean_estimate", "mean_truth", "n_ok", "n_failed", "fallback_blocks"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvStudy {
    pub rows: Vec<SvRow>,
    /// `paths[i]` holds the selected days of path `i`, or the error that stopped it.
    pub paths: Vec<std::result::Result<Vec<DailyEstimate>, String>>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 { values[k / 2] } else { 0.5 * (values[k / 2 - 1] + values[k / 2]) })
}

fn sv_path(cfg: &SvStudyConfig, per_day: usize, index: usize) -> Result<Vec<DailyEstimate>> {
    // later days do not influence earlier ones, so the path stops at the last selected day
    let last = *cfg.days.iter().max().expect("validated non-empty");
    let grid = cfg.grid.grid_for_days(last)?;
    let path = simulate_heston_cgmy(&cfg.heston, &cfg.jumps, &grid, derive_seed(cfg.seed, index as u64))?;
    cfg.days
        .iter()
        .map(|&day| {
            let start = (day - 1) * per_day;
            let window = path.increments.window(start, per_day)?;
            let est = estimate_iv_blocks(&window, &cfg.blocks)?;
            Ok(DailyEstimate {
                day,
                estimate: est.integrated_variance(),
                truth: path.true_iv(start, start + per_day)?,
                fallback_blocks: est.fallbacks(),
            })
        })
        .collect()
}

/// Simulates Heston-with-jumps paths and reports, per selected day, the MAD
/// of the block estimator of the daily integrated variance. Each day is split
/// into blocks of `k_n` increments; the day's trailing partial block is dropped.
pub fn run_sv_study(cfg: &SvStudyConfig) -> Result<SvStudy> {
    cfg.validate()?;
    let per_day = cfg.grid.per_day()?;
    if per_day < cfg.blocks.k_n {
        return Err(Error::Config(format!("a day has {per_day} increments, fewer than one block of {}", cfg.blocks.k_n)));
    }
    let paths: Vec<_> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| sv_path(cfg, per_day, i).map_err(|e| e.to_string()))
        .collect();
    let rows = cfg
        .days
        .iter()
        .enumerate()
        .map(|(k, &day)| {
            let ok: Vec<DailyEstimate> = paths.iter().filter_map(|p| p.as_ref().ok().map(|v| v[k])).collect();
            let n = ok.len();
            let mut dev: Vec<f64> = ok.iter().map(|d| (d.estimate - d.truth).abs()).collect();
            let mean = |f: fn(&DailyEstimate) -> f64| (n > 0).then(|| ok.iter().map(f).sum::<f64>() / n as f64);
            SvRow {
                day,
                mad: median(&mut dev),
                mean_estimate: mean(|d| d.estimate),
                mean_truth: mean(|d| d.truth),
                n_ok: n,
                n_failed: paths.len() - n,
                fallback_blocks: ok.iter().map(|d| d.fallback_blocks).sum(),
            }
        })
        .collect();
    Ok(SvStudy { rows, paths })
}

pub fn write_sv_csv<W: Write>(rows: &[SvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.day.to_string(),
            cell(r.mad),
            cell(r.mean_estimate),
            cell(r.mean_truth),
            r.n_ok.to_string(),
            r.n_failed.to_string(),
            r.fallback_blocks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_sv_study(study: &SvStudy, cfg: &SvStudyConfig, path: &Path) -> Result<()> {
    write_sv_csv(&study.rows, create(path)?)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        config: &'a SvStudyConfig,
        conventions: [&'static str; 3],
        failed_paths: Vec<(usize, &'a str)>,
    }
    let meta = Meta {
        config: cfg,
        conventions: [
            "mad is the median over paths of |estimated daily IV - true daily IV|",
            "days are 1-based; each day is blocked separately and its trailing partial block is dropped",
            "paths are simulated up to the last selected day",
        ],
        failed_paths: study
            .paths
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().err().map(|e| (i, e.as_str())))
            .collect(),
    };
    let mut w = create(&meta_path(path))?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    w.flush()?;
    Ok(())
}

/// Threshold grid for the equation curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl EpsGrid {
    /// `points` evenly spaced values between 0.25 and 2.5 times the
    /// first-order threshold.
    pub fn around_first_order(p: &LevyModelParams, h: f64, points: usize) -> Result<Self> {
        let e1 = threshold_first_order(p.sigma * p.sigma, p.y, h)?;
        Ok(Self { lo: 0.25 * e1, hi: 2.5 * e1, points })
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.points >= 2) {
            return Err(Error::Config(format!("bad threshold grid {self:?}")));
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.lo + step * i as f64).collect())
    }
}

/// Left-hand sides of the exact threshold equation (with `E[b]` from the
/// tilted-measure sample) and of the leading-order equation at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbRow {
    pub eps: f64,
    pub lhs_exact: f64,
    pub lhs_leading_order: f64,
}

pub const EB_COLUMNS: [&str; 3] = ["eps", "lhs_exact", "lhs_leading_order"];

/// Both equation curves on `eps` for the model on `grid`, sharing one
/// tilted-measure sample of size `npaths`.
pub fn eb_curve(p: &LevyModelParams, grid: &SamplingGrid, eps: &EpsGrid, npaths: usize, seed: u64) -> Result<Vec<EbRow>> {
    let inp = ThresholdInputs::from_params(p, grid);
    inp.validate()?;
    let sample = TiltedSample::draw(p, grid.h, npaths, seed)?;
    Ok(eps
        .values()?
        .into_iter()
        .map(|e| EbRow {
            eps: e,
            lhs_exact: exact_residual(e, sample.eb(e).estimate, &inp),
            lhs_leading_order: leading_order_residual(e, &inp),
        })
        .collect())
}

pub fn write_eb_csv<W: Write>(rows: &[EbRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EB_COLUMNS)?;
    for r in rows {
        w.write_record([format!("{:e}", r.eps), format!("{:e}", r.lhs_exact), format!("{:e}", r.lhs_leading_order)])?;
    }
    w.flush()?;
    Ok(())
}

/// First sign change of a curve, by linear interpolation.
pub fn first_crossing(xs: &[f64], ys: &[f64]) -> Option<f64> {
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        (y[0] == 0.0).then_some(x[0]).or_else(|| {
            (y[0] * y[1] < 0.0).then(|| x[0] - y[0] * (x[1] - x[0]) / (y[1] - y[0]))
        })
    })
}

/// Writes a series as `i,increment`.
pub fn save_series(series: &IncrementSeries, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    series.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}
