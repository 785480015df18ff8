//! Named box-constrained least-squares algorithms.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::active_set::ActiveSet;
use super::projected_gradient::ProjectedGradient;

/// `min ‖b − A y‖²` subject to `0 ≤ y ≤ upper`.
#[derive(Debug, Clone)]
pub struct BoxLsq {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub upper: DVector<f64>,
}

impl BoxLsq {
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn residual(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.a * y
    }

    pub fn objective(&self, y: &DVector<f64>) -> f64 {
        self.residual(y).norm_squared()
    }

    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&self.residual(y)) * -2.0
    }

    /// Largest violation of the first-order optimality conditions, in
    /// absolute gradient units. Infeasible points report infinity.
    pub fn kkt_violation(&self, y: &DVector<f64>) -> f64 {
        let g = self.gradient(y);
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            let (yj, uj, gj) = (y[j], self.upper[j], g[j]);
            let v = if yj < 0.0 || yj > uj || !yj.is_finite() {
                f64::INFINITY
            } else if yj == 0.0 && uj == 0.0 {
                0.0
            } else if yj == 0.0 {
                (-gj).max(0.0)
            } else if yj == uj {
                gj.max(0.0)
            } else {
                gj.abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxLsqSolution {
    pub y: DVector<f64>,
    pub iterations: usize,
}

/// A box-constrained least-squares algorithm.
///
/// `tol` is the absolute gradient tolerance the returned point must satisfy
/// in [`BoxLsq::kkt_violation`]; implementations return
/// [`Error::NotConverged`] with their best iterate when they cannot reach it.
pub trait BoxQpSolver: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn default_max_iter(&self, dim: usize) -> usize;

    fn solve(&self, problem: &BoxLsq, tol: f64, max_iter: usize) -> Result<BoxLsqSolution>;
}

#[derive(Debug, Clone, Default)]
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Arc<dyn BoxQpSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the built-in algorithms.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(ActiveSet));
        registry.register(Arc::new(ProjectedGradient));
        registry
    }

    /// Shared registry of built-in algorithms.
    pub fn builtin() -> &'static SolverRegistry {
        static REGISTRY: OnceLock<SolverRegistry> = OnceLock::new();
        REGISTRY.get_or_init(SolverRegistry::with_builtins)
    }

    /// Adds a solver, replacing any previous one with the same name.
    pub fn register(&mut self, solver: Arc<dyn BoxQpSolver>) -> Option<Arc<dyn BoxQpSolver>> {
        self.solvers.insert(solver.name(), solver)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn BoxQpSolver>> {
        self.solvers.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "QP solver",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Zero;

    impl BoxQpSolver for Zero {
        fn name(&self) -> &'static str {
            "zero"
        }
        fn default_max_iter(&self, _dim: usize) -> usize {
            1
        }
        fn solve(&self, problem: &BoxLsq, _tol: f64, _max_iter: usize) -> Result<BoxLsqSolution> {
            Ok(BoxLsqSolution {
                y: DVector::zeros(problem.dim()),
                iterations: 0,
            })
        }
    }

    #[test]
    fn builtins_are_registered_by_name() {
        let registry = SolverRegistry::builtin();
        assert_eq!(registry.names(), vec!["active-set", "projected-gradient"]);
        assert_eq!(registry.get("active-set").unwrap().name(), "active-set");
        let err = registry.get("simplex").unwrap_err();
        assert!(err.to_string().contains("active-set, projected-gradient"), "{err}");
    }

    #[test]
    fn custom_solvers_can_be_added() {
        let mut registry = SolverRegistry::with_builtins();
        assert!(registry.register(Arc::new(Zero)).is_none());
        assert_eq!(registry.names().len(), 3);
        let problem = BoxLsq {
            a: DMatrix::identity(2, 2),
            b: DVector::from_vec(vec![1.0, -1.0]),
            upper: DVector::from_vec(vec![1.0, 1.0]),
        };
        let sol = registry.get("zero").unwrap().solve(&problem, 1e-9, 10).unwrap();
        assert_eq!(problem.kkt_violation(&sol.y), 2.0);
    }
}
