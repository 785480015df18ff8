//! Accelerated projected gradient (FISTA with gradient-based restart).

use nalgebra::DVector;

use crate::error::{Error, Result};

use super::registry::{BoxLsq, BoxLsqSolution, BoxQpSolver};

#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectedGradient;

fn project(y: &mut DVector<f64>, upper: &DVector<f64>) {
    for (v, u) in y.iter_mut().zip(upper.iter()) {
        *v = v.clamp(0.0, *u);
    }
}

impl BoxQpSolver for ProjectedGradient {
    fn name(&self) -> &'static str {
        "projected-gradient"
    }

    fn default_max_iter(&self, dim: usize) -> usize {
        20_000 + 1_000 * dim
    }

    fn solve(&self, problem: &BoxLsq, tol: f64, max_iter: usize) -> Result<BoxLsqSolution> {
        let n = problem.dim();
        let mut y = DVector::zeros(n);
        if n == 0 {
            return Ok(BoxLsqSolution { y, iterations: 0 });
        }
        let sigma_max = problem.a.clone().svd(false, false).singular_values.max();
        if sigma_max == 0.0 {
            return Ok(BoxLsqSolution { y, iterations: 0 });
        }
        let step = 1.0 / (2.0 * sigma_max * sigma_max);
        let mut z = y.clone();
        let mut t = 1.0f64;
        for iteration in 0..max_iter {
            let g = problem.gradient(&z);
            let mut next = &z - g * step;
            project(&mut next, &problem.upper);
            // restart momentum when it points uphill
            let uphill = (&z - &next).dot(&(&next - &y)) > 0.0;
            let t_next = if uphill { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
            z = if uphill {
                next.clone()
            } else {
                &next + (&next - &y) * ((t - 1.0) / t_next)
            };
            project(&mut z, &problem.upper);
            y = next;
            t = t_next;
            if iteration % 16 == 15 && problem.kkt_violation(&y) <= tol {
                return Ok(BoxLsqSolution {
                    y,
                    iterations: iteration + 1,
                });
            }
        }
        if problem.kkt_violation(&y) <= tol {
            return Ok(BoxLsqSolution { y, iterations: max_iter });
        }
        Err(Error::NotConverged {
            iterations: max_iter,
            kkt_residual: problem.kkt_violation(&y),
            best: y.iter().copied().collect(),
        })
    }
}
