//! Truncated realized quadratic variation and the pilot variance estimators.

use crate::error::{Error, Result};
use crate::levy::IncrementSeries;
use serde::{Deserialize, Serialize};

/// Pilot estimators of `sigma^2` used to seed the moment fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PilotVariant {
    /// Plain realized variance.
    Rv,
    /// TRQV at `sqrt(2 RV h ln(1/h))`.
    P00,
    /// TRQV at `sqrt(h ln(1/h))`.
    P01,
    /// TRQV at `sqrt(2 P00 h ln(1/h))`.
    P02,
}

impl std::str::FromStr for PilotVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rv" => Ok(Self::Rv),
            "p00" => Ok(Self::P00),
            "p01" => Ok(Self::P01),
            "p02" => Ok(Self::P02),
            other => Err(Error::Config(format!("unknown pilot variant `{other}`"))),
        }
    }
}

/// `(1/T) sum x_i^2 1{|x_i| <= eps}`; `eps = +inf` gives realized variance.
pub fn trqv(series: &IncrementSeries, eps: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Input("empty increment series".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("threshold {eps} must be nonnegative")));
    }
    let sum: f64 = series.values.iter().filter(|x| x.abs() <= eps).map(|x| x * x).sum();
    Ok(sum / series.grid.t_horizon)
}

pub fn realized_variance(series: &IncrementSeries) -> Result<f64> {
    trqv(series, f64::INFINITY)
}

/// `h ln(1/h)`, the common scale of the pilot thresholds.
fn log_scale(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("step h = {h} must lie in (0, 1)")));
    }
    Ok(h * (1.0 / h).ln())
}

pub fn pilot_sigma(series: &IncrementSeries, variant: PilotVariant) -> Result<f64> {
    let s = log_scale(series.grid.h)?;
    match variant {
        PilotVariant::Rv => realized_variance(series),
        PilotVariant::P01 => trqv(series, s.sqrt()),
        PilotVariant::P00 => {
            let rv = realized_variance(series)?;
            trqv(series, (2.0 * rv * s).sqrt())
        }
        PilotVariant::P02 => {
            let p00 = pilot_sigma(series, PilotVariant::P00)?;
            trqv(series, (2.0 * p00 * s).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::SamplingGrid;

    fn series(v: &[f64], t: f64) -> IncrementSeries {
        IncrementSeries::from_values(v.to_vec(), t).unwrap()
    }

    #[test]
    fn definition_examples() {
        let s = series(&[0.1, -0.2, 0.05], 1.0);
        assert!((trqv(&s, 0.15).unwrap() - 0.0125).abs() < 1e-17);
        assert_eq!(trqv(&s, 0.0).unwrap(), 0.0);
        let direct: f64 = s.values.iter().map(|x| x * x).sum();
        assert_eq!(trqv(&s, f64::INFINITY).unwrap(), direct);
        // ties are kept
        assert_eq!(trqv(&s, 0.2).unwrap(), trqv(&s, f64::INFINITY).unwrap());
    }

    #[test]
    fn annualizes_by_horizon() {
        let s = series(&[0.1, -0.2, 0.05], 0.5);
        assert!((trqv(&s, 1.0).unwrap() - 0.105).abs() < 1e-16);
    }

    #[test]
    fn errors() {
        let empty = IncrementSeries { values: vec![], grid: SamplingGrid { n: 0, t_horizon: 1.0, h: 1.0 } };
        assert!(matches!(trqv(&empty, 1.0), Err(Error::Input(_))));
        let s = series(&[0.1], 1.0);
        assert!(matches!(pilot_sigma(&s, PilotVariant::P01), Err(Error::Domain(_))));
    }

    #[test]
    fn pilot_definitions() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 1e-5 - 5e-3).collect();
        let s = series(&v, 1.0);
        let lh = s.grid.h * (1.0 / s.grid.h).ln();
        assert_eq!(pilot_sigma(&s, PilotVariant::P01).unwrap(), trqv(&s, lh.sqrt()).unwrap());
        let rv = pilot_sigma(&s, PilotVariant::Rv).unwrap();
        let p00 = pilot_sigma(&s, PilotVariant::P00).unwrap();
        assert_eq!(p00, trqv(&s, (2.0 * rv * lh).sqrt()).unwrap());
        assert_eq!(pilot_sigma(&s, PilotVariant::P02).unwrap(), trqv(&s, (2.0 * p00 * lh).sqrt()).unwrap());
        assert_eq!("P02".parse::<PilotVariant>().unwrap(), PilotVariant::P02);
    }
}
