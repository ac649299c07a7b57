//! Least-squares quadratic refinement for noisy objectives.
//!
//! A replicated composite design of half-width `r` is evaluated around the
//! incumbent, a full quadratic is fitted by least squares and the incumbent
//! moves to the model minimizer (clipped to `2r`). Indefinite fits leave the
//! point unchanged.

use nalgebra::{DMatrix, DVector};

use super::{Objective, OptimizeOutcome, OptimizerSettings};
use crate::error::Result;

const ROUNDS: usize = 2;

/// Offsets in units of the radius: centre, `+-e_i`, `+-e_i/2` and
/// `(+-e_i +- e_j)/sqrt 2`.
fn design(n: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; n]];
    for i in 0..n {
        for s in [1.0, -1.0, 0.5, -0.5] {
            let mut u = vec![0.0; n];
            u[i] = s;
            points.push(u);
        }
    }
    let d = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(d, d), (d, -d), (-d, d), (-d, -d)] {
                let mut u = vec![0.0; n];
                u[i] = si;
                u[j] = sj;
                points.push(u);
            }
        }
    }
    points
}

fn features(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut f = Vec::with_capacity(1 + n + n * (n + 1) / 2);
    f.push(1.0);
    f.extend_from_slice(u);
    for i in 0..n {
        for j in i..n {
            f.push(u[i] * u[j]);
        }
    }
    f
}

/// Minimizer and minimum of the fitted model in design units, or `None` for
/// an indefinite or ill-posed fit.
fn fit_minimum(samples: &[(Vec<f64>, f64)], n: usize) -> Option<(DVector<f64>, f64)> {
    let rows: Vec<Vec<f64>> = samples.iter().map(|(u, _)| features(u)).collect();
    let n_coef = rows[0].len();
    let a = DMatrix::from_fn(rows.len(), n_coef, |r, c| rows[r][c]);
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|(_, f)| *f));
    let coef = a.svd(true, true).solve(&y, 1e-12).ok()?;

    let grad = DVector::from_fn(n, |i, _| coef[1 + i]);
    let mut hess = DMatrix::zeros(n, n);
    let mut k = 1 + n;
    for i in 0..n {
        for j in i..n {
            if i == j {
                hess[(i, i)] = 2.0 * coef[k];
            } else {
                hess[(i, j)] = coef[k];
                hess[(j, i)] = coef[k];
            }
            k += 1;
        }
    }
    let chol = hess.clone().cholesky()?;
    let mut step = -chol.solve(&grad);
    let norm = step.norm();
    if norm > 2.0 {
        step *= 2.0 / norm;
    }
    let value = coef[0] + grad.dot(&step) + 0.5 * step.dot(&(&hess * &step));
    Some((step, value))
}

pub fn refine(objective: &mut Objective<'_>, outcome: OptimizeOutcome, settings: &OptimizerSettings) -> Result<OptimizeOutcome> {
    let n = outcome.x.len();
    if n == 0 || settings.polish_samples_per_coefficient == 0 {
        return Ok(outcome);
    }
    let base = design(n);
    let n_coef = 1 + n + n * (n + 1) / 2;
    let replicas = (settings.polish_samples_per_coefficient * n_coef).div_ceil(base.len());
    let r = settings.polish_radius;

    let mut out = outcome;
    for _ in 0..ROUNDS {
        if out.evaluations + replicas * base.len() > settings.max_evaluations {
            break;
        }
        let mut samples = Vec::with_capacity(replicas * base.len());
        for _ in 0..replicas {
            for u in &base {
                let x: Vec<f64> = out.x.iter().zip(u).map(|(x, ui)| x + r * ui).collect();
                samples.push((u.clone(), objective(&x)?));
                out.evaluations += 1;
            }
        }
        let Some((step, value)) = fit_minimum(&samples, n) else {
            break;
        };
        for (x, s) in out.x.iter_mut().zip(step.iter()) {
            *x += r * s;
        }
        out.f = value;
    }
    Ok(out)
}
