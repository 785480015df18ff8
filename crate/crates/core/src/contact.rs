//! Continuous spring-damper ground contact. Each contact point carries a
//! force `λ = s · (−k_h b_h − k_n b_n − c v)` gated by its height and speed,
//! which is linear in the parameters `x = [k_h, k_n, c]`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Fixed constants of the force law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactConstants {
    /// Sharpness of both sigmoid gates (1/m and s/m).
    pub sharpness: f64,
    /// Horizontal reference offset (m).
    pub horizontal_offset: f64,
    /// Normal reference offset (m).
    pub normal_offset: f64,
}

pub const CONTACT_CONSTANTS: ContactConstants = ContactConstants {
    sharpness: 60.0,
    horizontal_offset: 0.5,
    normal_offset: 2.0,
};

/// Default damping bound per point (N·s/m).
pub const DEFAULT_DAMPING_MAX: f64 = 200.0;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPointState {
    /// Signed height above the ground plane `z = 0`.
    pub d: f64,
    pub d_x: f64,
    pub d_y: f64,
    pub velocity: Vector3<f64>,
    /// Magnitude gate `2σ(−60d)σ(−60‖v‖)`.
    pub s: f64,
    pub b_h: Vector3<f64>,
    pub b_n: Vector3<f64>,
}

impl ContactPointState {
    pub fn new(position: &Vector3<f64>, velocity: &Vector3<f64>) -> Self {
        let k = CONTACT_CONSTANTS;
        let d = position.z;
        // The flat ground's normal is +z, so the horizontal projections vanish.
        let normal = Vector3::<f64>::z();
        let (d_x, d_y) = (d * normal.x, d * normal.y);
        let s = 2.0 * sigmoid(-k.sharpness * d) * sigmoid(-k.sharpness * velocity.norm());
        Self {
            d,
            d_x,
            d_y,
            velocity: *velocity,
            s,
            b_h: Vector3::new(d_x - k.horizontal_offset, d_y - k.horizontal_offset, 0.0),
            b_n: Vector3::new(0.0, 0.0, d - k.normal_offset),
        }
    }

    /// `A_p = s · [−b_h, −b_n, −v]`.
    pub fn basis_block(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[-self.b_h, -self.b_n, -self.velocity]) * self.s
    }
}

/// Contact states from world positions and velocities of the contact points.
pub fn contact_states(positions: &[Vector3<f64>], velocities: &[Vector3<f64>]) -> Result<Vec<ContactPointState>> {
    if positions.len() != velocities.len() {
        return Err(Error::Dimension {
            what: "contact velocities",
            expected: positions.len(),
            got: velocities.len(),
        });
    }
    Ok(positions
        .iter()
        .zip(velocities)
        .map(|(p, v)| ContactPointState::new(p, v))
        .collect())
}

/// Contact states at a pose, with velocities `v_C = J_C q̇`.
pub fn contact_state(
    contact_positions: &[Vector3<f64>],
    contact_jacobian: &DMatrix<f64>,
    qd: &DVector<f64>,
) -> Result<Vec<ContactPointState>> {
    if contact_jacobian.nrows() != 3 * contact_positions.len() || contact_jacobian.ncols() != qd.len() {
        return Err(Error::Dimension {
            what: "contact Jacobian",
            expected: 3 * contact_positions.len(),
            got: contact_jacobian.nrows(),
        });
    }
    let v = contact_jacobian * qd;
    let velocities: Vec<_> = (0..contact_positions.len())
        .map(|i| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]))
        .collect();
    contact_states(contact_positions, &velocities)
}

/// Block-diagonal map from spring-damper parameters to contact forces.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactBasis {
    pub blocks: Vec<Matrix3<f64>>,
}

impl ContactBasis {
    pub fn from_states(states: &[ContactPointState]) -> Self {
        Self {
            blocks: states.iter().map(ContactPointState::basis_block).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        3 * self.blocks.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for (i, b) in self.blocks.iter().enumerate() {
            a.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(b);
        }
        a
    }

    /// `λ = A x`.
    pub fn force(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                what: "spring-damper parameters",
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut lambda = DVector::zeros(self.dim());
        for (i, b) in self.blocks.iter().enumerate() {
            let f = b * x.fixed_rows::<3>(3 * i);
            lambda.fixed_rows_mut::<3>(3 * i).copy_from(&f);
        }
        Ok(lambda)
    }

    /// `B = J_Cᵀ A`, the generalized force per unit of each parameter.
    pub fn generalized(&self, contact_jacobian: &DMatrix<f64>) -> DMatrix<f64> {
        let n_q = contact_jacobian.ncols();
        let mut b = DMatrix::zeros(n_q, self.dim());
        for (i, block) in self.blocks.iter().enumerate() {
            let jc = contact_jacobian.rows(3 * i, 3);
            b.columns_mut(3 * i, 3).copy_from(&(jc.transpose() * block));
        }
        b
    }
}

pub fn contact_basis(states: &[ContactPointState]) -> ContactBasis {
    ContactBasis::from_states(states)
}

pub fn contact_force(basis: &ContactBasis, x: &DVector<f64>) -> Result<DVector<f64>> {
    basis.force(x)
}

/// Default per-point bounds `[k_h, k_n, c]`: stiffnesses capped at half the
/// body weight, damping at [`DEFAULT_DAMPING_MAX`].
pub fn default_parameter_bounds(contact_count: usize, total_mass: f64, gravity: f64) -> DVector<f64> {
    let k_max = total_mass * gravity / 2.0;
    DVector::from_fn(3 * contact_count, |i, _| if i % 3 == 2 { DEFAULT_DAMPING_MAX } else { k_max })
}
