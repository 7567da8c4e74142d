//! Scaled method of moments for `(sigma^2, C, Y)` of the approximating model
//! `sigma W + S` with `S` symmetric `Y`-stable.

pub mod expectation;
pub mod moments;
pub mod objective;
pub mod optimize;

pub use expectation::{model_expectation, ExpectationEngine, ModelExpectation};
pub use moments::{empirical_moments, eval_moments, MomentSet, MomentSpec};
pub use objective::{fit_theta, objective_vn, solve_gn, MomentObjective};
pub use optimize::{minimize, nelder_mead, NelderMeadOptions};

use serde::{Deserialize, Serialize};

/// A parameter point of the approximating model, with fit diagnostics when it
/// comes out of an optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub sigma2: f64,
    pub c: f64,
    pub y: f64,
    pub objective_value: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ThetaEstimate {
    /// A bare parameter point.
    pub fn at(sigma2: f64, c: f64, y: f64) -> Self {
        Self { sigma2, c, y, objective_value: 0.0, converged: false, iterations: 0 }
    }
}
