//! Derivative-free trust-region minimization with linear interpolation
//! models, in the style of COBYLA for problems without constraints.
//!
//! The method keeps `n + 1` points, fits the linear model through them and
//! steps a distance `rho` down its gradient. Steps that achieve less than a
//! tenth of the predicted decrease, or less than the energy tolerance, are
//! kept but count as failures. Failed steps first
//! repair the interpolation geometry; once the geometry is acceptable, `rho`
//! is halved and the simplex is rebuilt around the best point.

use nalgebra::{DMatrix, DVector};

use super::{Objective, OptimizeOutcome, OptimizerSettings};
use crate::error::Result;

struct Point {
    x: Vec<f64>,
    f: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn best_index(points: &[Point]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.f < points[best].f {
            best = i;
        }
    }
    best
}

/// Gradient of the linear interpolant, or `None` when the points are too
/// close to degenerate.
fn linear_model(points: &[Point], best: usize, rho: f64) -> Option<DVector<f64>> {
    let n = points[0].x.len();
    let others: Vec<&Point> = points.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, p)| p).collect();
    let base = &points[best];
    let d = DMatrix::from_fn(n, n, |r, c| (others[r].x[c] - base.x[c]) / rho);
    let rhs = DVector::from_fn(n, |r, _| others[r].f - base.f);
    let svd = d.clone().svd(false, false);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < 1e-3 {
        return None;
    }
    d.lu().solve(&rhs).map(|g| g / rho)
}

pub fn minimize(objective: &mut Objective<'_>, x0: &[f64], settings: &OptimizerSettings) -> Result<OptimizeOutcome> {
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        objective(x)
    };
    let f0 = eval(x0, &mut evaluations)?;
    if n == 0 {
        return Ok(OptimizeOutcome {
            x: x0.to_vec(),
            f: f0,
            evaluations,
            converged: true,
        });
    }

    let mut rho = settings.rho_begin;
    let mut points = vec![Point { x: x0.to_vec(), f: f0 }];
    let rebuild = |points: &mut Vec<Point>, rho: f64, evaluations: &mut usize, eval: &mut dyn FnMut(&[f64], &mut usize) -> Result<f64>| -> Result<()> {
        let b = best_index(points);
        let centre = points.swap_remove(b);
        points.clear();
        for i in 0..n {
            if *evaluations >= settings.max_evaluations {
                break;
            }
            let mut x = centre.x.clone();
            x[i] += rho;
            let f = eval(&x, evaluations)?;
            points.push(Point { x, f });
        }
        points.push(centre);
        Ok(())
    };
    rebuild(&mut points, rho, &mut evaluations, &mut eval)?;
    let mut level_start = points[best_index(&points)].f;

    loop {
        if evaluations >= settings.max_evaluations || points.len() < n + 1 {
            break;
        }
        let b = best_index(&points);
        let Some(g) = linear_model(&points, b, rho) else {
            rebuild(&mut points, rho, &mut evaluations, &mut eval)?;
            continue;
        };
        let g_norm = g.norm();
        let geometry_ok = points.iter().all(|p| distance(&p.x, &points[b].x) <= 2.0 * rho);

        if g_norm > 0.0 && g_norm.is_finite() {
            let trial: Vec<f64> = points[b].x.iter().zip(g.iter()).map(|(x, gi)| x - rho * gi / g_norm).collect();
            let f = eval(&trial, &mut evaluations)?;
            let predicted = rho * g_norm;
            let actual = points[b].f - f;
            // Replace the vertex farthest from the new point, never the incumbent.
            let far = (0..points.len())
                .filter(|&i| i != b)
                .max_by(|&i, &j| distance(&points[i].x, &trial).total_cmp(&distance(&points[j].x, &trial)))
                .expect("at least two points");
            if actual > 0.0 {
                points[far] = Point { x: trial, f };
                if actual >= 0.1 * predicted && actual >= settings.tol_energy {
                    continue;
                }
            } else if !geometry_ok {
                let worst = (0..points.len())
                    .filter(|&i| i != b)
                    .max_by(|&i, &j| distance(&points[i].x, &points[b].x).total_cmp(&distance(&points[j].x, &points[b].x)))
                    .expect("at least two points");
                points[worst] = Point { x: trial, f };
                continue;
            }
        }
        let b = best_index(&points);
        if !points.iter().all(|p| distance(&p.x, &points[b].x) <= 2.0 * rho) {
            rebuild(&mut points, rho, &mut evaluations, &mut eval)?;
            continue;
        }

        let best_f = points[b].f;
        let level_change = level_start - best_f;
        if rho <= settings.rho_end
            || (level_change < settings.tol_energy && rho * g_norm < settings.tol_energy)
        {
            return Ok(OptimizeOutcome {
                x: points[b].x.clone(),
                f: points[b].f,
                evaluations,
                converged: true,
            });
        }
        level_start = best_f;
        rho = (rho * 0.5).max(settings.rho_end);
        rebuild(&mut points, rho, &mut evaluations, &mut eval)?;
    }

    let b = best_index(&points);
    Ok(OptimizeOutcome {
        x: points[b].x.clone(),
        f: points[b].f,
        evaluations,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqe::OptimizerKind;

    fn settings() -> OptimizerSettings {
        OptimizerSettings {
            kind: OptimizerKind::Cobyla,
            rho_begin: 0.25,
            rho_end: 1e-7,
            tol_energy: 1e-12,
            max_evaluations: 5000,
            polish_samples_per_coefficient: 0,
            polish_radius: 0.1,
        }
    }

    #[test]
    fn quadratic_bowl() {
        let mut f = |x: &[f64]| -> Result<f64> { Ok((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + x[0] * x[1]) };
        let out = minimize(&mut f, &[0.0, 0.0], &settings()).unwrap();
        assert!(out.converged);
        let grad = [2.0 * (out.x[0] - 1.0) + out.x[1], 6.0 * (out.x[1] + 0.5) + out.x[0]];
        assert!(grad.iter().all(|g| g.abs() < 1e-5), "{:?}", out.x);
    }

    #[test]
    fn cosine_landscape() {
        let mut f = |x: &[f64]| -> Result<f64> { Ok(-(x[0] - 0.3).cos() * (2.0 * x[1] + 0.1).cos() + 0.01 * x[2] * x[2]) };
        let out = minimize(&mut f, &[0.0, 0.0, 0.5], &settings()).unwrap();
        assert!((out.f + 1.0).abs() < 1e-9, "{}", out.f);
    }

    #[test]
    fn zero_dimensional_problem_uses_one_evaluation() {
        let mut f = |_: &[f64]| -> Result<f64> { Ok(-1.5) };
        let out = minimize(&mut f, &[], &settings()).unwrap();
        assert_eq!((out.f, out.evaluations, out.converged), (-1.5, 1, true));
    }

    #[test]
    fn respects_evaluation_budget() {
        let mut f = |x: &[f64]| -> Result<f64> { Ok(x.iter().map(|v| v * v).sum()) };
        let s = OptimizerSettings { max_evaluations: 20, ..settings() };
        let out = minimize(&mut f, &[1.0, 2.0, 3.0], &s).unwrap();
        assert!(out.evaluations <= 21);
        assert!(!out.converged);
    }
}
