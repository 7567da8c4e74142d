//! Properties of truncated realized variance, its link to the truncated
//! second moment of the moment fit, and the pilot estimators on simulated data.

use proptest::prelude::*;
use trqv_core::mme::empirical_moments;
use trqv_core::{
    pilot_sigma, realized_variance, simulate_cgmy_increments, trqv, IncrementSeries, LevyModelParams, MomentSet,
    MomentSpec, PilotVariant, SamplingGrid,
};

fn series(values: Vec<f64>, t: f64) -> IncrementSeries {
    IncrementSeries::from_values(values, t).unwrap()
}

fn increments() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..200)
}

proptest! {
    #[test]
    fn nondecreasing_in_threshold(xs in increments(), a in 0.0f64..1.5, b in 0.0f64..1.5, t in 0.01f64..5.0) {
        let s = series(xs, t);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(trqv(&s, lo).unwrap() <= trqv(&s, hi).unwrap());
    }

    #[test]
    fn bounded_by_realized_variance(xs in increments(), eps in 0.0f64..1.5, t in 0.01f64..5.0) {
        let s = series(xs, t);
        let v = trqv(&s, eps).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= realized_variance(&s).unwrap());
        prop_assert_eq!(trqv(&s, f64::INFINITY).unwrap(), realized_variance(&s).unwrap());
        prop_assert_eq!(trqv(&s, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn scale_equivariant(xs in increments(), eps in 0.0f64..1.5, k in -6i32..6) {
        // powers of two keep the scaled increments and threshold exact
        let lambda = 2f64.powi(k);
        let base = trqv(&series(xs.clone(), 1.0), eps).unwrap();
        let scaled = trqv(&series(xs.iter().map(|x| lambda * x).collect(), 1.0), lambda * eps).unwrap();
        prop_assert_eq!(scaled, lambda * lambda * base);
    }

    #[test]
    fn truncated_moment_bridge(xs in prop::collection::vec(-0.02f64..0.02, 1..300), u in 20.0f64..400.0, t in 0.01f64..2.0) {
        let s = series(xs.clone(), t);
        let n = xs.len() as f64;
        let f3 = empirical_moments(&s, &MomentSpec::new(MomentSet::FSet, u).unwrap()).unwrap()[2];
        let direct = u * u / n * xs.iter().filter(|x| x.abs() < 1.0 / u).map(|x| x * x).sum::<f64>();
        // both sides are n-term sums in different association orders
        let tol = 4.0 * n * f64::EPSILON * direct.abs().max(f64::MIN_POSITIVE);
        prop_assert!((f3 - direct).abs() <= tol);
        // continuous data has no ties at the threshold, so strict and non-strict truncation agree
        let via_trqv = u * u * t / n * trqv(&s, 1.0 / u).unwrap();
        prop_assert!((f3 - via_trqv).abs() <= 2.0 * tol);
    }

    #[test]
    fn first_pilot_is_trqv_at_its_threshold(xs in increments(), t in 0.01f64..5.0) {
        let s = series(xs, t);
        let h = s.grid.h;
        if h < 1.0 {
            let eps = (h * (1.0 / h).ln()).sqrt();
            prop_assert_eq!(pilot_sigma(&s, PilotVariant::P01).unwrap(), trqv(&s, eps).unwrap());
        }
    }
}

#[test]
fn small_example_from_definition() {
    let s = series(vec![0.1, -0.2, 0.05], 1.0);
    assert!((trqv(&s, 0.15).unwrap() - 0.0125).abs() < 1e-17);
}

#[test]
fn gaussian_pilot_accuracy() {
    let p = LevyModelParams { c_plus: 0.0, c_minus: 0.0, ..LevyModelParams::reference(0.2, 1.35).unwrap() };
    let grid = SamplingGrid::new(19656, 1.0).unwrap();
    let close = (0..200u64)
        .filter(|&seed| {
            let s = simulate_cgmy_increments(&p, &grid, seed).unwrap();
            (pilot_sigma(&s, PilotVariant::P02).unwrap() / 0.04 - 1.0).abs() < 0.05
        })
        .count();
    assert!(close >= 190, "{close} of 200 within 5%");
}

#[test]
fn second_pilot_overestimates_with_active_jumps() {
    let p = LevyModelParams::reference(0.2, 1.7).unwrap();
    let grid = SamplingGrid::new(19656, 1.0).unwrap();
    let mean = (0..200u64)
        .map(|seed| pilot_sigma(&simulate_cgmy_increments(&p, &grid, seed).unwrap(), PilotVariant::P02).unwrap())
        .sum::<f64>()
        / 200.0;
    assert!(mean > 0.04, "mean p02 pilot {mean}");
}
