//! Conversions between axis-angle vectors, intrinsic X-Y-Z Euler angles and
//! rotation matrices.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Largest accepted `‖RᵀR − I‖∞` (and `|det R − 1|`) for matrix inputs.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// `|cos β|` below which the X-Y-Z decomposition is treated as gimbal-locked.
const GIMBAL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationKind {
    AxisAngle,
    EulerXyz,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationRepr {
    AxisAngle(Vector3<f64>),
    EulerXyz(Vector3<f64>),
    Matrix(Matrix3<f64>),
}

impl RotationRepr {
    pub fn to_matrix(&self) -> Result<Matrix3<f64>> {
        match *self {
            RotationRepr::AxisAngle(v) => Ok(axis_angle_to_matrix(&v)),
            RotationRepr::EulerXyz(e) => Ok(euler_xyz_to_matrix(&e)),
            RotationRepr::Matrix(m) => {
                check_orthonormal(&m)?;
                Ok(m)
            }
        }
    }

    pub fn convert(&self, target: RotationKind) -> Result<RotationRepr> {
        let m = self.to_matrix()?;
        Ok(match target {
            RotationKind::AxisAngle => RotationRepr::AxisAngle(matrix_to_axis_angle(&m)?),
            RotationKind::EulerXyz => RotationRepr::EulerXyz(matrix_to_euler_xyz(&m)?),
            RotationKind::Matrix => RotationRepr::Matrix(m),
        })
    }
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rx(α) · Ry(β) · Rz(γ)`.
pub fn euler_xyz_to_matrix(e: &Vector3<f64>) -> Matrix3<f64> {
    rot_x(e.x) * rot_y(e.y) * rot_z(e.z)
}

pub fn orthonormality_error(m: &Matrix3<f64>) -> f64 {
    let gram = (m.transpose() * m - Matrix3::identity()).abs().max();
    gram.max((m.determinant() - 1.0).abs())
}

pub fn check_orthonormal(m: &Matrix3<f64>) -> Result<()> {
    let deviation = orthonormality_error(m);
    if deviation.is_nan() || deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Inverse of [`euler_xyz_to_matrix`] with `β ∈ [−π/2, π/2]`. At gimbal lock
/// the third angle is set to zero.
pub fn matrix_to_euler_xyz(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    check_orthonormal(m)?;
    let beta = m[(0, 2)].clamp(-1.0, 1.0).asin();
    let cos_beta = (m[(0, 0)].powi(2) + m[(0, 1)].powi(2)).sqrt();
    if cos_beta < GIMBAL_EPS {
        let alpha = m[(2, 1)].atan2(m[(1, 1)]);
        return Ok(Vector3::new(alpha, beta, 0.0));
    }
    let alpha = (-m[(1, 2)]).atan2(m[(2, 2)]);
    let gamma = (-m[(0, 1)]).atan2(m[(0, 0)]);
    Ok(Vector3::new(alpha, beta, gamma))
}

pub fn axis_angle_to_matrix(v: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::from_scaled_axis(*v).into_inner()
}

pub fn matrix_to_axis_angle(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    check_orthonormal(m)?;
    Ok(Rotation3::from_matrix_unchecked(*m).scaled_axis())
}

pub fn axis_angle_to_euler_xyz(v: &Vector3<f64>) -> Vector3<f64> {
    matrix_to_euler_xyz(&axis_angle_to_matrix(v)).expect("axis-angle matrices are orthonormal")
}

/// `v^×`, so that `skew(a) * b = a × b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] applied to the antisymmetric part of `m`.
pub fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}
