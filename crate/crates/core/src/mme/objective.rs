//! The weighted moment objective and the fixed-variance fit of `(C, Y)`.

use super::expectation::{ExpectationEngine, ModelExpectation};
use super::moments::{empirical_moments, MomentSet, MomentSpec};
use super::optimize::{index_from_logit, minimize, nelder_mead, NelderMeadOptions};
use super::ThetaEstimate;
use crate::error::{Error, Result};
use crate::levy::IncrementSeries;

/// Sample moments matched against model expectations at one scaling.
///
/// For the f-set the gaps are divided by `h u^Y` (first two functions) and
/// `h u^2` (the truncated second moment); g-set gaps are unweighted.
#[derive(Debug, Clone)]
pub struct MomentObjective {
    empirical: Vec<f64>,
    spec: MomentSpec,
    h: f64,
    model: ModelExpectation,
    weight_scale: f64,
}

impl MomentObjective {
    pub fn new(series: &IncrementSeries, spec: MomentSpec, engine: ExpectationEngine) -> Result<Self> {
        Self::from_moments(empirical_moments(series, &spec)?, spec, series.grid.h, engine)
    }

    /// Objective for given target moments (for instance exact model values).
    pub fn from_moments(empirical: Vec<f64>, spec: MomentSpec, h: f64, engine: ExpectationEngine) -> Result<Self> {
        if empirical.len() != spec.set.len() {
            return Err(Error::Input(format!(
                "{} target moments for a set of {} functions",
                empirical.len(),
                spec.set.len()
            )));
        }
        Ok(Self { empirical, spec, h, model: ModelExpectation::new(engine), weight_scale: 1.0 })
    }

    /// Multiplies every weight by `k`.
    pub fn with_weight_scale(mut self, k: f64) -> Self {
        self.weight_scale = k;
        self
    }

    pub fn spec(&self) -> &MomentSpec {
        &self.spec
    }

    pub fn empirical(&self) -> &[f64] {
        &self.empirical
    }

    /// Row weights at index `y`.
    pub fn weights(&self, y: f64) -> Vec<f64> {
        let u = self.spec.scaling_u;
        let k = self.weight_scale;
        match self.spec.set {
            MomentSet::FSet => {
                let jump = k * self.h * u.powf(y);
                vec![jump, jump, k * self.h * u * u]
            }
            MomentSet::GSet => vec![k; 2],
        }
    }

    /// Sample minus model moments.
    pub fn gaps(&mut self, theta: &ThetaEstimate) -> Result<Vec<f64>> {
        let model = self.model.eval(&self.spec, theta, self.h)?;
        Ok(self.empirical.iter().zip(&model).map(|(e, m)| e - m).collect())
    }

    pub fn value(&mut self, theta: &ThetaEstimate) -> Result<f64> {
        let gaps = self.gaps(theta)?;
        let w = self.weights(theta.y);
        Ok(gaps.iter().zip(&w).map(|(g, w)| (g / w) * (g / w)).sum())
    }
}

/// Weighted objective at `theta` for the f-set scaled by `spec`.
pub fn objective_vn(theta: &ThetaEstimate, series: &IncrementSeries, spec: &MomentSpec) -> Result<f64> {
    MomentObjective::new(series, *spec, ExpectationEngine::Fourier)?.value(theta)
}

/// Minimizes the objective over `(sigma^2, C, Y)` from `init`.
pub fn fit_theta(objective: &mut MomentObjective, init: &ThetaEstimate, opts: &NelderMeadOptions) -> Result<ThetaEstimate> {
    minimize(|t| objective.value(t), init, opts)
}

/// Fits `(C, Y)` with `sigma^2` pinned by minimizing the unweighted squared
/// g-set gaps, with `u = 1 / sqrt(2 sigma^2 h ln(1/h))`.
pub fn solve_gn(
    series: &IncrementSeries,
    sigma2_fixed: f64,
    init_c_y: (f64, f64),
    opts: &NelderMeadOptions,
    engine: ExpectationEngine,
) -> Result<ThetaEstimate> {
    let spec = MomentSpec::from_variance(MomentSet::GSet, sigma2_fixed, series.grid.h)?;
    let mut objective = MomentObjective::new(series, spec, engine)?;
    fit_jump_part(&mut objective, sigma2_fixed, init_c_y, opts)
}

/// `(C, Y)` minimizing `objective` at fixed `sigma^2`.
pub fn fit_jump_part(
    objective: &mut MomentObjective,
    sigma2_fixed: f64,
    init_c_y: (f64, f64),
    opts: &NelderMeadOptions,
) -> Result<ThetaEstimate> {
    let (c0, y0) = init_c_y;
    if !(sigma2_fixed > 0.0 && c0 > 0.0 && y0 > 1.0 && y0 < 2.0) {
        return Err(Error::Domain(format!("fixed-variance fit from sigma^2 = {sigma2_fixed}, C = {c0}, Y = {y0}")));
    }
    let z0 = [c0.ln(), ((y0 - 1.0) / (2.0 - y0)).ln()];
    let m = nelder_mead(
        |z| {
            let theta = ThetaEstimate::at(sigma2_fixed, z[0].exp(), index_from_logit(z[1]));
            objective.value(&theta).unwrap_or(f64::INFINITY)
        },
        &z0,
        opts,
    )?;
    Ok(ThetaEstimate {
        sigma2: sigma2_fixed,
        c: m.x[0].exp(),
        y: index_from_logit(m.x[1]),
        objective_value: m.value,
        converged: m.converged,
        iterations: m.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mme::model_expectation;

    const H: f64 = 1.0 / 19656.0;

    fn noiseless(set: MomentSet, theta: &ThetaEstimate, u: f64) -> MomentObjective {
        let spec = MomentSpec::new(set, u).unwrap();
        let target = model_expectation(&spec, theta, H).unwrap();
        MomentObjective::from_moments(target, spec, H, ExpectationEngine::Fourier).unwrap()
    }

    fn scaling(sigma2: f64) -> f64 {
        1.0 / (2.0 * sigma2 * H * (1.0 / H).ln()).sqrt()
    }

    #[test]
    fn zero_at_generating_point_and_nonnegative() {
        let truth = ThetaEstimate::at(0.04, 0.028, 1.35);
        let mut obj = noiseless(MomentSet::FSet, &truth, scaling(0.04));
        assert_eq!(obj.value(&truth).unwrap(), 0.0);
        for k in 0..10 {
            let t = ThetaEstimate::at(0.02 + 0.005 * k as f64, 0.01 + 0.02 * k as f64, 1.1 + 0.08 * k as f64);
            assert!(obj.value(&t).unwrap() >= 0.0);
        }
    }

    #[test]
    fn generating_point_beats_perturbations() {
        let truth = ThetaEstimate::at(0.04, 0.028, 1.35);
        let mut obj = noiseless(MomentSet::FSet, &truth, scaling(0.04));
        let at_truth = obj.value(&truth).unwrap();
        // deterministic quasi-random perturbations within +-20%
        for k in 1..=100 {
            let r = |j: u32| ((k as f64 * [0.754877666, 0.569840291, 0.438289107][j as usize]).fract() - 0.5) * 0.4;
            let t = ThetaEstimate::at(0.04 * (1.0 + r(0)), 0.028 * (1.0 + r(1)), 1.35 * (1.0 + r(2)).min(1.48));
            if t.y >= 2.0 {
                continue;
            }
            assert!(obj.value(&t).unwrap() > at_truth, "perturbation {k}");
        }
    }

    #[test]
    fn noiseless_recovery_and_weight_invariance() {
        let truth = ThetaEstimate::at(0.04, 0.028, 1.35);
        let init = ThetaEstimate::at(0.05, 0.1, 1.3);
        let opts = NelderMeadOptions::default();
        let mut obj = noiseless(MomentSet::FSet, &truth, scaling(0.04));
        let est = fit_theta(&mut obj, &init, &opts).unwrap();
        assert!((est.sigma2 / 0.04 - 1.0).abs() < 0.01, "{est:?}");
        assert!((est.c / 0.028 - 1.0).abs() < 0.01, "{est:?}");
        assert!((est.y / 1.35 - 1.0).abs() < 0.01, "{est:?}");
        let mut scaled = noiseless(MomentSet::FSet, &truth, scaling(0.04)).with_weight_scale(7.5);
        let est2 = fit_theta(&mut scaled, &init, &opts).unwrap();
        assert_eq!((est.sigma2, est.c, est.y), (est2.sigma2, est2.c, est2.y));
    }

    #[test]
    fn noiseless_fixed_variance_recovery() {
        let truth = ThetaEstimate::at(0.04, 0.028, 1.35);
        let mut obj = noiseless(MomentSet::GSet, &truth, scaling(0.04));
        let est = fit_jump_part(&mut obj, 0.04, (0.1, 1.3), &NelderMeadOptions::default()).unwrap();
        assert!((est.c / 0.028 - 1.0).abs() < 0.01, "{est:?}");
        assert!((est.y / 1.35 - 1.0).abs() < 0.01, "{est:?}");
        assert_eq!(est.sigma2, 0.04);
    }
}
