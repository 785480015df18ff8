//! Articulated-body dynamics from meshes and motion: mass properties,
//! kinematics, Euler-Lagrange terms, ground contact, per-frame force
//! recovery, and physical-plausibility metrics and losses.

pub mod body;
pub mod contact;
pub mod dynamics;
pub mod error;
pub mod humanoid;
pub mod kinematics;
pub mod losses;
pub mod mass;
pub mod mesh;
pub mod metrics;
pub mod primitives;
pub mod rotation;
pub mod solver;

pub use body::{Dof, KinematicTree, MassConfig, MassMode, RestBody};
pub use dynamics::{DynamicsTerms, Model, STANDARD_GRAVITY};
pub use error::{Error, Result};
pub use kinematics::{forward_kinematics, MotionSequence, Pose};
pub use mass::{body_mass_properties, PartMassProperties};
pub use mesh::PartMesh;
pub use solver::{solve_sequence, solve_state, ResidualMode, SolverConfig, SolverRegistry};
