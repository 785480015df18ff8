//! Primal active-set method for box-constrained least squares.
//!
//! Variables are either free or held at one of their bounds. Each iteration
//! minimizes the residual over the free variables (minimum-norm solution, so
//! rank-deficient free sets are fine), walks toward that minimizer until a
//! bound blocks, and otherwise releases the bound variable whose multiplier
//! has the wrong sign.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::registry::{BoxLsq, BoxLsqSolution, BoxQpSolver};

#[derive(Debug, Clone, Copy, Default)]
pub struct ActiveSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Free,
    Lower,
    Upper,
}

/// Relative singular-value cutoff for the free-set least-squares solve.
const RANK_RTOL: f64 = 1e-12;

fn min_norm_lstsq(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.svd(true, true);
    let cutoff = svd.singular_values.max() * RANK_RTOL;
    if cutoff == 0.0 {
        return DVector::zeros(svd.v_t.as_ref().map_or(0, |v| v.ncols()));
    }
    svd.solve(b, cutoff).expect("U and V were computed")
}

impl BoxQpSolver for ActiveSet {
    fn name(&self) -> &'static str {
        "active-set"
    }

    fn default_max_iter(&self, dim: usize) -> usize {
        10 * dim.max(1)
    }

    fn solve(&self, problem: &BoxLsq, tol: f64, max_iter: usize) -> Result<BoxLsqSolution> {
        let n = problem.dim();
        let upper = &problem.upper;
        let mut y = DVector::zeros(n);
        let mut state = vec![State::Lower; n];
        // Release threshold sits below the acceptance tolerance so that the
        // final point clears it with margin.
        let release_tol = 0.1 * tol;
        let mut at_subspace_min = false;

        for iteration in 0..max_iter {
            let free: Vec<usize> = (0..n).filter(|&j| state[j] == State::Free).collect();

            if !at_subspace_min && !free.is_empty() {
                let residual = problem.residual(&y);
                let a_free = problem.a.select_columns(free.iter());
                let step = min_norm_lstsq(a_free, &residual);

                let mut alpha = 1.0;
                let mut blocking = None;
                for (k, &j) in free.iter().enumerate() {
                    let p = step[k];
                    let floor = 1e-14 * (1.0 + y[j].abs());
                    let limit = if p > floor {
                        (upper[j] - y[j]) / p
                    } else if p < -floor {
                        -y[j] / p
                    } else {
                        continue;
                    };
                    if limit < alpha {
                        alpha = limit.max(0.0);
                        blocking = Some((j, p > 0.0));
                    }
                }
                for (k, &j) in free.iter().enumerate() {
                    y[j] = (y[j] + alpha * step[k]).clamp(0.0, upper[j]);
                }
                if let Some((j, to_upper)) = blocking {
                    if to_upper {
                        y[j] = upper[j];
                        state[j] = State::Upper;
                    } else {
                        y[j] = 0.0;
                        state[j] = State::Lower;
                    }
                    continue;
                }
                at_subspace_min = true;
            }

            let gradient = problem.gradient(&y);
            let release = (0..n)
                .filter_map(|j| {
                    let violation = match state[j] {
                        State::Free => return None,
                        State::Lower if upper[j] > 0.0 => -gradient[j],
                        State::Upper => gradient[j],
                        State::Lower => return None,
                    };
                    (violation > release_tol).then_some((j, violation))
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));

            match release {
                Some((j, _)) => {
                    state[j] = State::Free;
                    at_subspace_min = false;
                }
                None => {
                    if problem.kkt_violation(&y) <= tol {
                        return Ok(BoxLsqSolution {
                            y,
                            iterations: iteration + 1,
                        });
                    }
                    // free-set stationarity lost to round-off: re-solve once more
                    if at_subspace_min && free.is_empty() {
                        break;
                    }
                    at_subspace_min = false;
                }
            }
        }
        Err(Error::NotConverged {
            iterations: max_iter,
            kkt_residual: problem.kkt_violation(&y),
            best: y.iter().copied().collect(),
        })
    }
}
