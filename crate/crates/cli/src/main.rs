//! `trqv`: simulation, threshold selection, estimation and Monte Carlo studies.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use trqv_core::experiment::{
    eb_curve, run_mc_study, run_sv_study, save_mc_study, save_series, save_sv_study, write_eb_csv, write_study_csv,
    write_sv_csv, EpsGrid, ExperimentConfig, Frequency, GridSpec, SvStudyConfig,
};
use trqv_core::{
    estimate_cgmy, simulate_cgmy_increments, solve_threshold_exact_mc, solve_threshold_leading_order,
    threshold_first_order, threshold_second_order, Error, IncrementSeries, LevyModelParams, PilotRule, PilotVariant,
    PipelineConfig, Result, ThresholdInputs,
};

#[derive(Parser)]
#[command(name = "trqv", version, about = "Threshold selection and volatility estimation for tempered-stable Levy models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate increments of the model and write them as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print threshold approximations for the given parameters.
    Threshold {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        /// Tilted-measure sample size for the exact threshold.
        #[arg(long, default_value_t = 1_000_000)]
        mc_paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the five-step estimator on a CSV of increments and print a JSON report.
    Estimate {
        /// CSV with columns `i,increment`.
        input: PathBuf,
        /// Time span covered by the increments, in years.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Pipeline configuration as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pilot estimator (`auto`, `rv`, `p00`, `p01`, `p02`); overrides the config.
        #[arg(long)]
        pilot: Option<String>,
    },
    /// Monte Carlo study on simulated Levy data.
    McStudy {
        /// Study configuration as JSON; fields left out take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV (overrides the config; stdout when neither is set).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stochastic-volatility study of daily integrated variance.
    SvStudy {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of simulated trading days (days beyond it must not be selected).
        #[arg(long)]
        trading_days: Option<usize>,
        /// Comma-separated 1-based days.
        #[arg(long, value_delimiter = ',')]
        days: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curves of the exact and leading-order threshold equations over a threshold grid.
    Eb {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Grid start; defaults to 0.25 times the first-order threshold.
        #[arg(long)]
        lo: Option<f64>,
        /// Grid end; defaults to 2.5 times the first-order threshold.
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 121)]
        points: usize,
        #[arg(long, default_value_t = 200_000)]
        mc_paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    All,
    FirstOrder,
    SecondOrder,
    LeadingOrder,
    Exact,
}

#[derive(Args)]
struct ModelArgs {
    /// Model parameters as JSON; the flags below are ignored when given.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Jump intensity, used for both signs.
    #[arg(long, default_value_t = 0.028)]
    c: f64,
    #[arg(long, default_value_t = 2.318)]
    g: f64,
    #[arg(long, default_value_t = 4.025)]
    m: f64,
    #[arg(long, default_value_t = 1.35)]
    y: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<LevyModelParams> {
        let p = match &self.model {
            Some(path) => read_json::<LevyModelParams>(path)?,
            None => LevyModelParams::cgmy(self.sigma, self.c, self.g, self.m, self.y)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct GridArgs {
    /// `5s`, `1min`, `5min` or a number of seconds.
    #[arg(long, default_value = "5min")]
    frequency: String,
    #[arg(long, default_value_t = 252)]
    days: usize,
    #[arg(long, default_value_t = 6.5)]
    hours: f64,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        Ok(GridSpec { frequency: self.frequency.parse::<Frequency>()?, trading_days: self.days, hours_per_day: self.hours })
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_pilot(s: &str) -> Result<PilotRule> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(PilotRule::Auto)
    } else {
        Ok(PilotRule::Fixed(s.parse::<PilotVariant>()?))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_threshold(label: &str, value: Result<f64>) -> Result<()> {
    match value {
        Ok(v) => println!("{label:<14} {v:.7e}"),
        Err(e) => println!("{label:<14} {} ({e})", trqv_core::experiment::FAILED),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { model, grid, seed, out } => {
            let series = simulate_cgmy_increments(&model.params()?, &grid.spec()?.grid()?, seed)?;
            match out {
                Some(path) => save_series(&series, &path),
                None => series.write_csv(io::stdout().lock()),
            }
        }
        Command::Threshold { model, grid, method, mc_paths, seed } => {
            let p = model.params()?;
            let grid = grid.spec()?.grid()?;
            let s2 = p.sigma * p.sigma;
            let want = |m: Method| method == Method::All || method == m;
            let mut first_failure = None;
            let mut show = |label: &str, v: Result<f64>| {
                if let Err(e) = &v {
                    first_failure.get_or_insert_with(|| e.to_string());
                }
                print_threshold(label, v)
            };
            if want(Method::FirstOrder) {
                show("first_order", threshold_first_order(s2, p.y, grid.h))?;
            }
            if want(Method::SecondOrder) {
                show("second_order", threshold_second_order(s2, p.c_bar(), p.y, grid.h))?;
            }
            if want(Method::LeadingOrder) {
                show("leading_order", solve_threshold_leading_order(&ThresholdInputs::from_params(&p, &grid)))?;
            }
            if want(Method::Exact) {
                match solve_threshold_exact_mc(&p, &grid, mc_paths, seed) {
                    Ok(t) => println!("{:<14} {:.7e} [{:.7e}, {:.7e}]", "exact", t.eps, t.lower, t.upper),
                    Err(e) => show("exact", Err(e))?,
                }
            }
            // a single requested value that failed is an error; in `all` mode failures are reported inline
            match (method, first_failure) {
                (Method::All, _) | (_, None) => Ok(()),
                (_, Some(msg)) => Err(Error::Numerical(msg)),
            }
        }
        Command::Estimate { input, horizon, config, pilot } => {
            let mut cfg: PipelineConfig = match config {
                Some(path) => read_json(&path)?,
                None => PipelineConfig::default(),
            };
            if let Some(p) = pilot {
                cfg.pilot = parse_pilot(&p)?;
            }
            cfg.validate()?;
            let file = File::open(&input).map_err(|e| Error::Input(format!("{}: {e}", input.display())))?;
            let series = IncrementSeries::read_csv(BufReader::new(file), horizon)?;
            let report = estimate_cgmy(&series, &cfg)?;
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            match &report.failure {
                Some((stage, msg)) => Err(Error::Numerical(format!("stopped at {stage:?}: {msg}"))),
                None => Ok(()),
            }
        }
        Command::McStudy { config, n_paths, seed, out } => {
            let mut cfg: ExperimentConfig = match config {
                Some(path) => read_json(&path)?,
                None => ExperimentConfig::default(),
            };
            cfg.n_paths = n_paths.unwrap_or(cfg.n_paths);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.output = out.or(cfg.output);
            let study = run_mc_study(&cfg)?;
            match &cfg.output {
                Some(path) => save_mc_study(&study, &cfg, path),
                None => write_study_csv(&study.rows, io::stdout().lock()),
            }
        }
        Command::SvStudy { config, n_paths, seed, trading_days, days, out } => {
            let mut cfg: SvStudyConfig = match config {
                Some(path) => read_json(&path)?,
                None => SvStudyConfig::default(),
            };
            cfg.n_paths = n_paths.unwrap_or(cfg.n_paths);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.grid.trading_days = trading_days.unwrap_or(cfg.grid.trading_days);
            cfg.days = days.unwrap_or(cfg.days);
            cfg.output = out.or(cfg.output);
            let study = run_sv_study(&cfg)?;
            match &cfg.output {
                Some(path) => save_sv_study(&study, &cfg, path),
                None => write_sv_csv(&study.rows, io::stdout().lock()),
            }
        }
        Command::Eb { model, grid, lo, hi, points, mc_paths, seed, out } => {
            let p = model.params()?;
            let grid = grid.spec()?.grid()?;
            let default = EpsGrid::around_first_order(&p, grid.h, points)?;
            let eps = EpsGrid { lo: lo.unwrap_or(default.lo), hi: hi.unwrap_or(default.hi), points };
            let rows = eb_curve(&p, &grid, &eps, mc_paths, seed)?;
            write_eb_csv(&rows, output(out.as_deref())?)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Input(_) | Error::Config(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trqv: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
