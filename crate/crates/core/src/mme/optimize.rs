//! Derivative-free minimization (Nelder-Mead) and the unconstrained
//! coordinates used for `(sigma^2, C, Y)`.

use super::ThetaEstimate;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub diameter_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Halvings of the initial step allowed when a vertex is not finite.
    pub max_retries: usize,
    /// Fresh simplices started from the best point when a run hits
    /// `max_iter` without meeting the diameter test.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 500, diameter_tol: 1e-8, initial_step: 0.5, max_retries: 8, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| v.iter().zip(best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Minimizes `f` from `x0`. Non-finite values count as `+inf`.
impl NelderMeadOptions {
    /// Small initial simplex and no restarts: stays in the basin of the starting point.
    pub fn local() -> Self {
        Self { initial_step: 0.1, restarts: 0, ..Self::default() }
    }
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<Minimum> {
    let mut best = nelder_mead_run(&mut f, x0, opts)?;
    for _ in 0..opts.restarts {
        if best.converged {
            break;
        }
        // A restart from a point on the edge of the domain may not find a simplex.
        let Ok(next) = nelder_mead_run(&mut f, &best.x, opts) else {
            break;
        };
        let iterations = best.iterations + next.iterations;
        if next.value <= best.value {
            best = next;
        }
        best.iterations = iterations;
    }
    Ok(best)
}

fn nelder_mead_run<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions) -> Result<Minimum> {
    let n = x0.len();
    let mut trace = Vec::new();
    let f0 = f(x0);
    if !f0.is_finite() {
        trace.push(format!("objective {f0} at the initial point {x0:?}"));
        return Err(Error::Optimizer { message: "objective not finite at the initial point".into(), trace });
    }
    let mut step = opts.initial_step;
    let mut simplex = vec![x0.to_vec()];
    let mut values = vec![f0];
    for attempt in 0..=opts.max_retries {
        simplex.truncate(1);
        values.truncate(1);
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += step;
            values.push(f(&v));
            simplex.push(v);
        }
        if values.iter().all(|v| v.is_finite()) {
            break;
        }
        trace.push(format!("non-finite vertex with initial step {step}"));
        if attempt == opts.max_retries {
            return Err(Error::Optimizer { message: "could not build a finite initial simplex".into(), trace });
        }
        step *= 0.5;
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = finite_or_inf(f(&xr));
        if fr < values[0] {
            let xe = along(2.0);
            let fe = finite_or_inf(f(&xe));
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[n] {
            let xc = along(0.5);
            let fc = finite_or_inf(f(&xc));
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(-0.5);
            let fc = finite_or_inf(f(&xc));
            let ok = fc < values[n];
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let v: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            values[i] = finite_or_inf(f(&v));
            simplex[i] = v;
        }
    }
    Ok(Minimum { x: simplex.swap_remove(0), value: values[0], iterations, converged })
}

/// `(ln sigma^2, ln C, logit(Y - 1))`.
pub fn to_unconstrained(sigma2: f64, c: f64, y: f64) -> [f64; 3] {
    [sigma2.ln(), c.ln(), ((y - 1.0) / (2.0 - y)).ln()]
}

/// Inverse of [`to_unconstrained`].
pub fn from_unconstrained(z: &[f64]) -> (f64, f64, f64) {
    (z[0].exp(), z[1].exp(), index_from_logit(z[2]))
}

pub(crate) fn index_from_logit(z: f64) -> f64 {
    1.0 + 1.0 / (1.0 + (-z).exp())
}

/// Minimizes a scalar field over `(sigma^2, C, Y)` in unconstrained
/// coordinates; errors from `objective` count as non-finite values.
pub fn minimize<F: FnMut(&ThetaEstimate) -> Result<f64>>(
    mut objective: F,
    init: &ThetaEstimate,
    opts: &NelderMeadOptions,
) -> Result<ThetaEstimate> {
    if !(init.sigma2 > 0.0 && init.c > 0.0 && init.y > 1.0 && init.y < 2.0) {
        return Err(Error::Domain(format!("initial point ({}, {}, {}) outside the domain", init.sigma2, init.c, init.y)));
    }
    let z0 = to_unconstrained(init.sigma2, init.c, init.y);
    let m = nelder_mead(
        |z| {
            let (s2, c, y) = from_unconstrained(z);
            objective(&ThetaEstimate::at(s2, c, y)).unwrap_or(f64::INFINITY)
        },
        &z0,
        opts,
    )?;
    let (sigma2, c, y) = from_unconstrained(&m.x);
    Ok(ThetaEstimate { sigma2, c, y, objective_value: m.value, converged: m.converged, iterations: m.iterations })
}
