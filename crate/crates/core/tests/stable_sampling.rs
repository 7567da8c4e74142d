//! Monte Carlo checks of the stable sampler against its characteristic function.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use trqv_core::{sample_stable, stable_cf, StableLaw};

fn draws(law: &StableLaw, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_stable(law, &mut rng).unwrap()).collect()
}

/// Largest gap between the empirical CDF of `xs` and `cdf`.
fn ks_one_sample(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

// asymptotic Kolmogorov critical value at the 1% level
const KS_1PCT: f64 = 1.628;

#[test]
fn index_two_is_gaussian_with_variance_two() {
    let law = StableLaw::new(2.0, 0.0, 1.0, 0.0).unwrap();
    let mut xs = draws(&law, 100_000, 1);
    let normal = Normal::new(0.0, 2f64.sqrt()).unwrap();
    let d = ks_one_sample(&mut xs, |x| normal.cdf(x));
    assert!(d < KS_1PCT / (xs.len() as f64).sqrt(), "KS distance {d}");
}

/// Empirical CF within 3 standard errors of `stable_cf`, real and imaginary parts.
fn assert_cf_matches(law: &StableLaw, freqs: &[f64], n: usize, seed: u64) {
    let xs = draws(law, n, seed);
    let nf = n as f64;
    for &u in freqs {
        let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
        for &x in &xs {
            let (si, co) = (u * x).sin_cos();
            c += co;
            s += si;
            c2 += co * co;
            s2 += si * si;
        }
        let (mc, ms) = (c / nf, s / nf);
        let se_c = ((c2 / nf - mc * mc) / nf).sqrt();
        let se_s = ((s2 / nf - ms * ms) / nf).sqrt();
        let cf = stable_cf(u, law);
        assert!((mc - cf.re).abs() < 3.0 * se_c, "{law:?} u={u}: re {mc} vs {} (se {se_c})", cf.re);
        assert!((ms - cf.im).abs() < 3.0 * se_s, "{law:?} u={u}: im {ms} vs {} (se {se_s})", cf.im);
    }
}

#[test]
fn symmetric_index_one_and_a_half_cf() {
    let law = StableLaw::symmetric(1.5).unwrap();
    assert_cf_matches(&law, &[0.5, 1.0, 2.0], 100_000, 2);
    for u in [0.5, 1.0, 2.0] {
        assert!((stable_cf(u, &law).re - (-f64::powf(u, 1.5)).exp()).abs() < 1e-15);
    }
}

#[test]
fn skewed_laws_cf_on_five_frequencies() {
    let freqs = [0.25, 0.5, 1.0, 2.0, 4.0];
    for (k, (alpha, beta)) in [(1.35, 1.0), (1.5, -0.5), (1.7, 0.3)].into_iter().enumerate() {
        let law = StableLaw::new(alpha, beta, 0.7, 0.1).unwrap();
        assert_cf_matches(&law, &freqs, 100_000, 10 + k as u64);
    }
}

#[test]
fn totally_skewed_right_tail_index() {
    let law = StableLaw::new(1.35, 1.0, 1.0, 0.0).unwrap();
    let mut xs = draws(&law, 1_000_000, 3);
    xs.sort_by(|a, b| b.total_cmp(a));
    // Hill estimator on the largest k order statistics
    let k = 2000;
    let hill = xs[..k].iter().map(|x| (x / xs[k]).ln()).sum::<f64>() / k as f64;
    let slope = 1.0 / hill;
    assert!((1.25..=1.45).contains(&slope), "tail slope {slope}");
}

#[test]
fn self_similar_scaling() {
    let (alpha, s, t): (f64, f64, f64) = (1.5, 0.8, 3.7);
    let r = t.powf(1.0 / alpha);
    let mut direct = draws(&StableLaw::new(alpha, 0.4, s * r, 0.0).unwrap(), 50_000, 4);
    let mut scaled: Vec<f64> =
        draws(&StableLaw::new(alpha, 0.4, s, 0.0).unwrap(), 50_000, 5).into_iter().map(|x| r * x).collect();
    let d = ks_two_sample(&mut direct, &mut scaled);
    let crit = KS_1PCT * (2.0 / 50_000.0f64).sqrt();
    assert!(d < crit, "two-sample KS {d} vs {crit}");
}
