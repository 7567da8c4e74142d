//! Volatility and jump-activity estimation for tempered-stable Levy models
//! from high-frequency increments.
//!
//! The crate covers the full chain: stable and CGMY primitives, simulation,
//! truncated realized variance, MSE-optimal threshold approximations, a
//! scaled method-of-moments fit, the iterative estimation pipeline and a
//! block-localized integrated-variance estimator.

pub mod error;
pub mod experiment;
pub mod levy;
pub mod mme;
pub mod numerics;
pub mod pipeline;
pub mod rng;
pub mod stable;
pub mod threshold;
pub mod trqv;

pub use error::{Error, Result};
pub use levy::{
    cgmy_cf, eta_constant, gamma_tilde, simulate_cgmy_increments, simulate_heston_cgmy, DriftConvention,
    HestonParams, IncrementSeries, LevyModelParams, SamplingGrid, SvPath,
};
pub use stable::{one_sided_scale, sample_stable, stable_cf, StableLaw};
pub use experiment::{
    eb_curve, run_mc_study, run_sv_study, EbRow, EpsGrid, ExperimentConfig, Frequency, GridSpec, McStudy, StudyRow,
    SvRow, SvStudy, SvStudyConfig,
};
pub use mme::{model_expectation, objective_vn, solve_gn, ExpectationEngine, MomentSet, MomentSpec, ThetaEstimate};
pub use pipeline::{
    estimate_cgmy, estimate_iv_blocks, BlockConfig, BlockEstimates, EstimateReport, PilotRule, PipelineConfig,
    ThresholdSource,
};
pub use threshold::{
    mc_eb, solve_threshold_exact_mc, solve_threshold_leading_order, threshold_first_order, threshold_second_order,
    ExactThreshold, ThresholdInputs,
};
pub use trqv::{pilot_sigma, realized_variance, trqv, PilotVariant};
