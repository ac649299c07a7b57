//! Nelder–Mead simplex search with the standard coefficients.

use super::{Objective, OptimizeOutcome, OptimizerSettings};
use crate::error::Result;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

pub fn minimize(objective: &mut Objective<'_>, x0: &[f64], settings: &OptimizerSettings) -> Result<OptimizeOutcome> {
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        objective(x)
    };
    let f0 = eval(x0, &mut evaluations)?;
    let mut simplex = vec![(x0.to_vec(), f0)];
    if n == 0 {
        return Ok(OptimizeOutcome {
            x: x0.to_vec(),
            f: f0,
            evaluations,
            converged: true,
        });
    }
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += settings.rho_begin;
        let f = eval(&x, &mut evaluations)?;
        simplex.push((x, f));
    }

    let mut converged = false;
    while evaluations < settings.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < settings.tol_energy && diameter < settings.rho_end.max(1e-6) * 10.0 {
            converged = true;
            break;
        }
        if diameter < settings.rho_end {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst.0, -REFLECT);
        let fr = eval(&reflected, &mut evaluations)?;
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -EXPAND);
            let fe = eval(&expanded, &mut evaluations)?;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = combine(&centroid, &reflected, CONTRACT);
            let f = eval(&x, &mut evaluations)?;
            (x, f)
        } else {
            let x = combine(&centroid, &worst.0, CONTRACT);
            let f = eval(&x, &mut evaluations)?;
            (x, f)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = combine(&best, &vertex.0, SHRINK);
            let f = eval(&x, &mut evaluations)?;
            *vertex = (x, f);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(OptimizeOutcome {
        x,
        f,
        evaluations,
        converged,
    })
}
