//! Moment functions and their empirical averages.

use crate::error::{Error, Result};
use crate::levy::IncrementSeries;
use serde::{Deserialize, Serialize};

/// Which family of moment functions is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSet {
    /// `e^{-|x|}`, `e^{-sqrt|x|}`, `x^2 1{|x| < 1}`.
    FSet,
    /// `(1 - |x|) 1{|x| < 1}`, `(1 - x^2) 1{|x| < 1}`.
    GSet,
}

impl MomentSet {
    pub fn len(self) -> usize {
        match self {
            Self::FSet => 3,
            Self::GSet => 2,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// A moment family together with the scaling `u` applied to increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub set: MomentSet,
    pub scaling_u: f64,
}

impl MomentSpec {
    pub fn new(set: MomentSet, scaling_u: f64) -> Result<Self> {
        if !(scaling_u > 0.0 && scaling_u.is_finite()) {
            return Err(Error::Domain(format!("scaling u = {scaling_u} must be positive")));
        }
        Ok(Self { set, scaling_u })
    }

    /// `u = 1 / sqrt(2 sigma^2 h ln(1/h))`.
    pub fn from_variance(set: MomentSet, sigma2: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Domain(format!("step h = {h} must lie in (0, 1)")));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::Domain(format!("variance {sigma2} must be positive to set the scaling")));
        }
        Self::new(set, 1.0 / (2.0 * sigma2 * h * (1.0 / h).ln()).sqrt())
    }
}

/// Values of the moment functions at `x` (no scaling applied).
pub fn eval_moments(x: f64, set: MomentSet) -> Vec<f64> {
    let mut out = vec![0.0; set.len()];
    eval_into(x, set, &mut out);
    out
}

#[inline]
fn eval_into(x: f64, set: MomentSet, out: &mut [f64]) {
    let a = x.abs();
    let inside = a < 1.0;
    match set {
        MomentSet::FSet => {
            out[0] = (-a).exp();
            out[1] = (-a.sqrt()).exp();
            out[2] = if inside { x * x } else { 0.0 };
        }
        MomentSet::GSet => {
            out[0] = if inside { 1.0 - a } else { 0.0 };
            out[1] = if inside { 1.0 - x * x } else { 0.0 };
        }
    }
}

/// `(1/n) sum f(u x_i)`.
pub fn empirical_moments(series: &IncrementSeries, spec: &MomentSpec) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Input("empty increment series".into()));
    }
    let k = spec.set.len();
    let mut acc = vec![0.0; k];
    let mut tmp = vec![0.0; k];
    for &x in &series.values {
        eval_into(spec.scaling_u * x, spec.set, &mut tmp);
        for (a, t) in acc.iter_mut().zip(&tmp) {
            *a += t;
        }
    }
    let n = series.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_special_points() {
        assert_eq!(eval_moments(0.0, MomentSet::FSet), vec![1.0, 1.0, 0.0]);
        assert_eq!(eval_moments(0.0, MomentSet::GSet), vec![1.0, 1.0]);
        assert_eq!(eval_moments(1.0, MomentSet::FSet)[2], 0.0);
        assert_eq!(eval_moments(1.0, MomentSet::GSet), vec![0.0, 0.0]);
        assert_eq!(eval_moments(-1.0, MomentSet::GSet), vec![0.0, 0.0]);
        let f = eval_moments(-0.5, MomentSet::FSet);
        assert_eq!(f, vec![(-0.5f64).exp(), (-(0.5f64).sqrt()).exp(), 0.25]);
        assert_eq!(f, eval_moments(0.5, MomentSet::FSet));
    }

    #[test]
    fn empirical_basics() {
        let zero = IncrementSeries::from_values(vec![0.0; 10], 1.0).unwrap();
        let spec = MomentSpec::new(MomentSet::FSet, 3.0).unwrap();
        assert_eq!(empirical_moments(&zero, &spec).unwrap(), vec![1.0, 1.0, 0.0]);
        let one = IncrementSeries::from_values(vec![0.5], 1.0).unwrap();
        let unit = MomentSpec::new(MomentSet::FSet, 1.0).unwrap();
        assert_eq!(empirical_moments(&one, &unit).unwrap(), eval_moments(0.5, MomentSet::FSet));
        assert!(MomentSpec::new(MomentSet::GSet, 0.0).is_err());
    }

    #[test]
    fn concatenation_is_weighted_mean() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin() * 0.01).collect();
        let b: Vec<f64> = (0..91).map(|i| (i as f64 * 1.91).cos() * 0.02).collect();
        let spec = MomentSpec::new(MomentSet::GSet, 60.0).unwrap();
        let ma = empirical_moments(&IncrementSeries::from_values(a.clone(), 1.0).unwrap(), &spec).unwrap();
        let mb = empirical_moments(&IncrementSeries::from_values(b.clone(), 1.0).unwrap(), &spec).unwrap();
        let ab: Vec<f64> = a.into_iter().chain(b).collect();
        let mab = empirical_moments(&IncrementSeries::from_values(ab, 1.0).unwrap(), &spec).unwrap();
        for j in 0..2 {
            let w = (37.0 * ma[j] + 91.0 * mb[j]) / 128.0;
            assert!((mab[j] - w).abs() < 1e-15);
        }
    }
}
