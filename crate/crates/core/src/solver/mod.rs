//! Per-frame recovery of contact forces and joint actuations.
//!
//! With `τ = r − Bx` eliminated, each frame reduces to box-constrained least
//! squares over the spring-damper parameters `x`, where `r = M q̈ + C + g`
//! and `B = J_Cᵀ A`. The algorithm is looked up by name in a
//! [`SolverRegistry`].

mod active_set;
mod projected_gradient;
mod registry;

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::contact::{contact_state, default_parameter_bounds, ContactBasis};
use crate::dynamics::{DynamicsTerms, Model};
use crate::error::{Error, Result};
use crate::kinematics::{finite_difference_derivatives, MotionSequence};

pub use active_set::ActiveSet;
pub use projected_gradient::ProjectedGradient;
pub use registry::{BoxLsq, BoxLsqSolution, BoxQpSolver, SolverRegistry};

/// Number of unactuated floating-base coordinates.
pub const BASE_DOFS: usize = 6;

pub const DEFAULT_KKT_TOL: f64 = 1e-8;

/// Which rows of the equations of motion the contact forces must explain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualMode {
    /// All rows; `τ` absorbs whatever the contact forces leave.
    #[default]
    FullResidual,
    /// Only the six floating-base rows.
    BaseOnly,
}

impl ResidualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResidualMode::FullResidual => "full-residual",
            ResidualMode::BaseOnly => "base-only",
        }
    }

    fn rows(&self, n_q: usize) -> usize {
        match self {
            ResidualMode::FullResidual => n_q,
            ResidualMode::BaseOnly => BASE_DOFS.min(n_q),
        }
    }
}

impl FromStr for ResidualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full-residual" => Ok(ResidualMode::FullResidual),
            "base-only" => Ok(ResidualMode::BaseOnly),
            other => Err(Error::UnknownName {
                kind: "solver mode",
                name: other.to_string(),
                available: "full-residual, base-only".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: ResidualMode,
    /// Upper bounds on `x`, `[k_h, k_n, c]` per contact point.
    pub x_max: DVector<f64>,
    /// KKT tolerance relative to [`problem_scale`].
    pub kkt_tol: f64,
    /// Iteration cap; `None` uses the algorithm's default.
    pub max_iter: Option<usize>,
    /// Registry name of the QP algorithm.
    pub algorithm: String,
}

impl SolverConfig {
    pub fn new(mode: ResidualMode, x_max: DVector<f64>) -> Self {
        Self {
            mode,
            x_max,
            kkt_tol: DEFAULT_KKT_TOL,
            max_iter: None,
            algorithm: "active-set".to_string(),
        }
    }

    /// Default bounds for the model's contact points.
    pub fn for_model(model: &Model, mode: ResidualMode) -> Self {
        let bounds = default_parameter_bounds(model.body.contact_count(), model.total_mass(), -model.gravity.z);
        Self::new(mode, bounds)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.x_max.iter().position(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(Error::invalid(None, "x_max", format!("bound {i} must be positive")));
        }
        if self.kkt_tol.is_nan() || self.kkt_tol <= 0.0 {
            return Err(Error::invalid(None, "kkt_tol", "tolerance must be positive"));
        }
        Ok(())
    }
}

/// Result of one box-constrained solve.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub tau: DVector<f64>,
    pub residual_full: f64,
    pub residual_base: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Column scaling and the scaled least-squares problem for one frame.
struct Scaled {
    problem: BoxLsq,
    /// Original index and norm of each kept column.
    columns: Vec<(usize, f64)>,
    scale: f64,
}

/// Columns below this norm cannot influence the objective and are pinned at zero.
const NEGLIGIBLE_COLUMN: f64 = 1.5e-154;

fn scaled_problem(r: &DVector<f64>, b: &DMatrix<f64>, config: &SolverConfig) -> Result<Scaled> {
    if b.nrows() != r.len() {
        return Err(Error::Dimension {
            what: "generalized contact basis rows",
            expected: r.len(),
            got: b.nrows(),
        });
    }
    if config.x_max.len() != b.ncols() {
        return Err(Error::Dimension {
            what: "x_max",
            expected: b.ncols(),
            got: config.x_max.len(),
        });
    }
    let rows = config.mode.rows(r.len());
    let target = r.rows(0, rows).into_owned();
    let mut columns = Vec::new();
    for j in 0..b.ncols() {
        let norm = b.view((0, j), (rows, 1)).norm();
        if norm > NEGLIGIBLE_COLUMN && norm.is_finite() {
            columns.push((j, norm));
        }
    }
    let mut a = DMatrix::zeros(rows, columns.len());
    let mut upper = DVector::zeros(columns.len());
    for (k, &(j, norm)) in columns.iter().enumerate() {
        a.set_column(k, &(b.view((0, j), (rows, 1)).column(0) / norm));
        upper[k] = config.x_max[j] * norm;
    }
    let scale = (2.0 * target.norm()).max(1.0);
    Ok(Scaled {
        problem: BoxLsq { a, b: target, upper },
        columns,
        scale,
    })
}

/// Gradient scale used to make KKT residuals dimensionless.
pub fn problem_scale(r: &DVector<f64>, mode: ResidualMode) -> f64 {
    (2.0 * r.rows(0, mode.rows(r.len())).norm()).max(1.0)
}

/// `‖S(r − Bx)‖²` with `S` selecting the rows of `mode`.
pub fn objective(r: &DVector<f64>, b: &DMatrix<f64>, x: &DVector<f64>, mode: ResidualMode) -> f64 {
    let rows = mode.rows(r.len());
    (r - b * x).rows(0, rows).norm_squared()
}

fn to_scaled(scaled: &Scaled, x: &DVector<f64>, x_max: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        scaled.columns.len(),
        scaled.columns.iter().enumerate().map(|(k, &(j, norm))| {
            // keep exact bound hits exact
            if x[j] == x_max[j] {
                scaled.problem.upper[k]
            } else {
                x[j] * norm
            }
        }),
    )
}

/// Maximum KKT violation of `x` divided by the problem scale. Infeasible
/// points report infinity.
pub fn kkt_check(x: &DVector<f64>, r: &DVector<f64>, b: &DMatrix<f64>, config: &SolverConfig) -> Result<f64> {
    let scaled = scaled_problem(r, b, config)?;
    if x.len() != b.ncols() {
        return Err(Error::Dimension {
            what: "spring-damper parameters",
            expected: b.ncols(),
            got: x.len(),
        });
    }
    if x.iter().zip(config.x_max.iter()).any(|(v, u)| !(*v >= 0.0 && v <= u)) {
        return Ok(f64::INFINITY);
    }
    let y = to_scaled(&scaled, x, &config.x_max);
    Ok(scaled.problem.kkt_violation(&y) / scaled.scale)
}

/// Solves one frame with the algorithm named in `config`.
pub fn solve_frame(r: &DVector<f64>, b: &DMatrix<f64>, config: &SolverConfig) -> Result<QpSolution> {
    let solver = SolverRegistry::builtin().get(&config.algorithm)?;
    solve_frame_with(solver.as_ref(), r, b, config)
}

pub fn solve_frame_with(
    solver: &dyn BoxQpSolver,
    r: &DVector<f64>,
    b: &DMatrix<f64>,
    config: &SolverConfig,
) -> Result<QpSolution> {
    config.validate()?;
    let scaled = scaled_problem(r, b, config)?;
    let tol = config.kkt_tol * scaled.scale;
    let max_iter = config
        .max_iter
        .unwrap_or_else(|| solver.default_max_iter(scaled.problem.dim()));
    let unscale = |y: &[f64]| {
        let mut x = DVector::zeros(b.ncols());
        for (k, &(j, norm)) in scaled.columns.iter().enumerate() {
            x[j] = if y[k] >= scaled.problem.upper[k] {
                config.x_max[j]
            } else {
                (y[k] / norm).clamp(0.0, config.x_max[j])
            };
        }
        x
    };
    let solution = match solver.solve(&scaled.problem, tol, max_iter) {
        Ok(s) => s,
        Err(Error::NotConverged {
            iterations,
            kkt_residual,
            best,
        }) => {
            return Err(Error::NotConverged {
                iterations,
                kkt_residual: kkt_residual / scaled.scale,
                best: unscale(&best).iter().copied().collect(),
            })
        }
        Err(e) => return Err(e),
    };
    let x = unscale(solution.y.as_slice());
    let y = to_scaled(&scaled, &x, &config.x_max);
    let kkt_residual = scaled.problem.kkt_violation(&y) / scaled.scale;
    let remainder = r - b * &x;
    let tau = remainder.clone();
    Ok(QpSolution {
        residual_full: (&remainder - &tau).norm(),
        residual_base: remainder.rows(0, BASE_DOFS.min(r.len())).norm(),
        x,
        tau,
        kkt_residual,
        iterations: solution.iterations,
    })
}

/// Forces recovered for one frame of a motion.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSolution {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub tau: DVector<f64>,
    pub residual_full: f64,
    pub residual_base: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Solves the force recovery problem at one state.
pub fn solve_state(
    model: &Model,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    config: &SolverConfig,
) -> Result<ForceSolution> {
    let terms = DynamicsTerms::compute(model, q, qd)?;
    let required = terms.required_force(qdd)?;
    let states = contact_state(&terms.pose.contacts, &terms.contact_jacobian, qd)?;
    let basis = ContactBasis::from_states(&states);
    let b = basis.generalized(&terms.contact_jacobian);
    let qp = solve_frame(&required, &b, config)?;
    let lambda = basis.force(&qp.x)?;
    // Recompute τ through J_Cᵀλ so that the residual closes exactly.
    let tau = terms.closing_actuation(&required, &lambda)?;
    let residual_full = terms.el_residual(qdd, &lambda, &tau)?.norm();
    let contact = terms.contact_generalized_force(&lambda)?;
    let residual_base = (&required - contact).rows(0, BASE_DOFS.min(required.len())).norm();
    Ok(ForceSolution {
        x: qp.x,
        lambda,
        tau,
        residual_full,
        residual_base,
        kkt_residual: qp.kkt_residual,
        iterations: qp.iterations,
    })
}

/// Outcome for one frame of a sequence.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub frame: usize,
    /// First or last frame, whose derivatives are one-sided.
    pub endpoint: bool,
    pub near_gimbal: bool,
    pub result: std::result::Result<ForceSolution, String>,
}

/// Solves every frame independently. Frames run on the current rayon pool;
/// per-frame failures are recorded rather than aborting the sequence.
pub fn solve_sequence(seq: &MotionSequence, model: &Model, config: &SolverConfig) -> Result<Vec<FrameOutcome>> {
    seq.check_for(&model.body.tree)?;
    config.validate()?;
    SolverRegistry::builtin().get(&config.algorithm)?;
    let derivatives = finite_difference_derivatives(seq)?;
    let gimbal = seq.near_gimbal_frames(&model.body.tree);
    Ok((0..seq.len())
        .into_par_iter()
        .map(|t| FrameOutcome {
            frame: t,
            endpoint: derivatives.is_endpoint(t),
            near_gimbal: gimbal[t],
            result: solve_state(
                model,
                &seq.frames[t],
                &derivatives.velocity[t],
                &derivatives.acceleration[t],
                config,
            )
            .map_err(|e| e.to_string()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_dim() -> (DVector<f64>, DMatrix<f64>, SolverConfig) {
        let r = DVector::from_element(1, 1.0);
        let b = DMatrix::from_element(1, 1, 2.0);
        let config = SolverConfig::new(ResidualMode::FullResidual, DVector::from_element(1, 0.25));
        (r, b, config)
    }

    #[test]
    fn empty_contact_set_passes_everything_to_tau() {
        let r = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let b = DMatrix::zeros(3, 0);
        let config = SolverConfig::new(ResidualMode::FullResidual, DVector::zeros(0));
        let sol = solve_frame(&r, &b, &config).unwrap();
        assert_eq!(sol.x.len(), 0);
        assert_eq!(sol.tau, r);
        assert_eq!(kkt_check(&sol.x, &r, &b, &config).unwrap(), 0.0);
    }

    #[test]
    fn clamped_one_dimensional_instance() {
        let (r, b, config) = one_dim();
        for algorithm in ["active-set", "projected-gradient"] {
            let config = SolverConfig {
                algorithm: algorithm.into(),
                ..config.clone()
            };
            let sol = solve_frame(&r, &b, &config).unwrap();
            assert_eq!(sol.x[0], 0.25, "{algorithm}");
            assert_relative_eq!(objective(&r, &b, &sol.x, config.mode), 0.25, epsilon = 1e-15);
            assert!(sol.kkt_residual <= 1e-12);
        }
        assert!(kkt_check(&DVector::from_element(1, 0.25), &r, &b, &config).unwrap() <= 1e-12);
    }

    #[test]
    fn perturbed_interior_solution_fails_kkt() {
        let r = DVector::from_vec(vec![0.6, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[2.0, 1.0]);
        let config = SolverConfig::new(ResidualMode::FullResidual, DVector::from_element(1, 1.0));
        let sol = solve_frame(&r, &b, &config).unwrap();
        assert_relative_eq!(sol.x[0], 0.3, epsilon = 1e-14);
        let perturbed = &sol.x * 1.1;
        assert!(kkt_check(&perturbed, &r, &b, &config).unwrap() > config.kkt_tol);
        assert_eq!(kkt_check(&DVector::from_element(1, 2.0), &r, &b, &config).unwrap(), f64::INFINITY);
    }

    #[test]
    fn base_only_mode_ignores_actuated_rows() {
        let mut r = DVector::zeros(9);
        r[2] = 4.0;
        r[7] = 100.0;
        let mut b = DMatrix::zeros(9, 2);
        b[(2, 0)] = 2.0;
        b[(7, 1)] = 1.0;
        let config = SolverConfig::new(ResidualMode::BaseOnly, DVector::from_element(2, 10.0));
        let sol = solve_frame(&r, &b, &config).unwrap();
        assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-14);
        // column 1 only touches actuated rows, so it is pinned at zero
        assert_eq!(sol.x[1], 0.0);
        assert!(sol.residual_base < 1e-12);
        assert_relative_eq!(sol.tau[7], 100.0);
    }

    #[test]
    fn unknown_algorithm_and_bad_bounds_are_rejected() {
        let (r, b, config) = one_dim();
        let bad = SolverConfig {
            algorithm: "magic".into(),
            ..config.clone()
        };
        assert!(matches!(solve_frame(&r, &b, &bad), Err(Error::UnknownName { .. })));
        let bad = SolverConfig {
            x_max: DVector::from_element(1, 0.0),
            ..config
        };
        assert!(solve_frame(&r, &b, &bad).is_err());
        assert_eq!("base-only".parse::<ResidualMode>().unwrap(), ResidualMode::BaseOnly);
        assert!("both".parse::<ResidualMode>().is_err());
    }
}
