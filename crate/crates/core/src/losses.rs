//! Training losses: reconstruction, force supervision, contact behaviour and
//! Euler-Lagrange consistency, plus their weighted total.

use nalgebra::{DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsTerms, Model};
use crate::error::{Error, Result};
use crate::kinematics::{finite_difference_derivatives, forward_kinematics, MotionSequence};

/// A contact point counts as active when its force exceeds this (N).
pub const ACTIVE_FORCE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub gamma_q: f64,
    pub gamma_j: f64,
    pub gamma_tau: f64,
    pub gamma_lambda: f64,
    pub gamma_v: f64,
    pub gamma_z: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            gamma_q: 2e3,
            gamma_j: 1e5,
            gamma_tau: 5.0,
            gamma_lambda: 1.0,
            gamma_v: 100.0,
            gamma_z: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub l_recon: f64,
    pub l_force: f64,
    pub l_contact: f64,
    pub l_euler: f64,
    pub l_total: f64,
    pub weights: LossWeights,
}

impl LossReport {
    pub fn new(l_recon: f64, l_force: f64, l_contact: f64, l_euler: f64, weights: LossWeights) -> Self {
        Self {
            l_recon,
            l_force,
            l_contact,
            l_euler,
            l_total: total_loss(l_recon, l_force, l_contact, l_euler),
            weights,
        }
    }
}

pub fn total_loss(l_recon: f64, l_force: f64, l_contact: f64, l_euler: f64) -> f64 {
    l_recon + l_force + l_contact + l_euler
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { what, expected, got });
    }
    Ok(())
}

fn l1(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// `Σ_t γ_q‖q_t − q̄_t‖² + γ_J‖J_t − J̄_t‖²` with joints in metres.
pub fn reconstruction_loss(
    model: &Model,
    pred: &MotionSequence,
    gt: &MotionSequence,
    weights: &LossWeights,
) -> Result<f64> {
    check_len("ground-truth frames", pred.len(), gt.len())?;
    pred.check_for(&model.body.tree)?;
    gt.check_for(&model.body.tree)?;
    let per_frame = pred
        .frames
        .par_iter()
        .zip(&gt.frames)
        .map(|(q, q_gt)| {
            let joints = forward_kinematics(q, &model.body)?.joints;
            let joints_gt = forward_kinematics(q_gt, &model.body)?.joints;
            let dj: f64 = joints.iter().zip(&joints_gt).map(|(a, b)| (a - b).norm_squared()).sum();
            Ok(weights.gamma_q * (q - q_gt).norm_squared() + weights.gamma_j * dj)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_frame.iter().sum())
}

/// `Σ_t γ_τ‖τ_t − τ̄_t‖₁ + γ_λ‖λ_t − λ̄_t‖₁`.
pub fn force_loss(
    lambda: &[DVector<f64>],
    tau: &[DVector<f64>],
    lambda_label: &[DVector<f64>],
    tau_label: &[DVector<f64>],
    weights: &LossWeights,
) -> Result<f64> {
    check_len("force frames", lambda.len(), tau.len())?;
    check_len("label force frames", lambda.len(), lambda_label.len())?;
    check_len("label actuation frames", tau.len(), tau_label.len())?;
    let mut total = 0.0;
    for t in 0..lambda.len() {
        check_len("contact forces", lambda_label[t].len(), lambda[t].len())?;
        check_len("joint actuations", tau_label[t].len(), tau[t].len())?;
        total += weights.gamma_tau * l1(&tau[t], &tau_label[t]) + weights.gamma_lambda * l1(&lambda[t], &lambda_label[t]);
    }
    Ok(total)
}

/// Contact points of one frame with the subset that is in contact.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactFrame {
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    pub active: Vec<bool>,
}

/// `Σ_t (1/n_C) Σ_{i∈C_t} γ_v‖v_i‖₁ + γ_z|z_i|`; frames without active
/// points contribute nothing.
pub fn contact_loss(frames: &[ContactFrame], weights: &LossWeights) -> Result<f64> {
    let mut total = 0.0;
    for frame in frames {
        check_len("contact velocities", frame.positions.len(), frame.velocities.len())?;
        check_len("contact flags", frame.positions.len(), frame.active.len())?;
        let n = frame.active.iter().filter(|&&a| a).count();
        if n == 0 {
            continue;
        }
        let sum: f64 = (0..frame.positions.len())
            .filter(|&i| frame.active[i])
            .map(|i| weights.gamma_v * frame.velocities[i].abs().sum() + weights.gamma_z * frame.positions[i].z.abs())
            .sum();
        total += sum / n as f64;
    }
    Ok(total)
}

/// Active flags per contact point from stacked per-point forces.
pub fn contact_sets_from_forces(lambda: &[DVector<f64>]) -> Vec<Vec<bool>> {
    lambda
        .iter()
        .map(|l| {
            (0..l.len() / 3)
                .map(|i| l.fixed_rows::<3>(3 * i).norm() > ACTIVE_FORCE_THRESHOLD)
                .collect()
        })
        .collect()
}

/// Contact point positions and velocities `J_C q̇` along a motion.
pub fn contact_frames(model: &Model, seq: &MotionSequence, active: &[Vec<bool>]) -> Result<Vec<ContactFrame>> {
    seq.check_for(&model.body.tree)?;
    check_len("contact sets", seq.len(), active.len())?;
    let derivatives = finite_difference_derivatives(seq)?;
    (0..seq.len())
        .into_par_iter()
        .map(|t| {
            check_len("contact flags", model.body.contact_count(), active[t].len())?;
            let terms = DynamicsTerms::compute(model, &seq.frames[t], &derivatives.velocity[t])?;
            let v = &terms.contact_jacobian * &derivatives.velocity[t];
            let velocities = (0..terms.pose.contacts.len())
                .map(|i| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]))
                .collect();
            Ok(ContactFrame {
                positions: terms.pose.contacts.clone(),
                velocities,
                active: active[t].clone(),
            })
        })
        .collect()
}

/// `Σ_t ‖M q̈ + C + g − J_Cᵀλ̄ − τ̄‖₁` with finite-difference derivatives.
pub fn euler_lagrange_loss(
    model: &Model,
    seq: &MotionSequence,
    lambda_label: &[DVector<f64>],
    tau_label: &[DVector<f64>],
) -> Result<f64> {
    seq.check_for(&model.body.tree)?;
    check_len("label force frames", seq.len(), lambda_label.len())?;
    check_len("label actuation frames", seq.len(), tau_label.len())?;
    let derivatives = finite_difference_derivatives(seq)?;
    let per_frame = (0..seq.len())
        .into_par_iter()
        .map(|t| {
            let terms = DynamicsTerms::compute(model, &seq.frames[t], &derivatives.velocity[t])?;
            let r = terms.el_residual(&derivatives.acceleration[t], &lambda_label[t], &tau_label[t])?;
            Ok(r.abs().sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_frame.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn total_is_the_plain_sum() {
        assert_eq!(total_loss(1.0, 2.0, 3.0, 4.0), 10.0);
        assert_eq!(LossReport::new(0.0, 0.0, 0.0, 0.0, LossWeights::default()).l_total, 0.0);
    }

    #[test]
    fn force_loss_is_l1() {
        let w = LossWeights::default();
        let lambda = vec![DVector::from_vec(vec![1.0, 2.0, 3.0])];
        let tau = vec![DVector::from_vec(vec![0.5, -0.5])];
        assert_eq!(force_loss(&lambda, &tau, &lambda, &tau, &w).unwrap(), 0.0);
        let mut off = tau.clone();
        off[0][1] += 2.0;
        assert_relative_eq!(force_loss(&lambda, &off, &lambda, &tau, &w).unwrap(), 10.0);
        let mut lam_off = lambda.clone();
        lam_off[0][0] -= 3.0;
        assert_relative_eq!(force_loss(&lam_off, &tau, &lambda, &tau, &w).unwrap(), 3.0);
    }

    #[test]
    fn force_loss_rejects_shape_mismatch() {
        let w = LossWeights::default();
        let a = vec![DVector::zeros(3)];
        let b = vec![DVector::zeros(6)];
        assert!(force_loss(&a, &a, &b, &a, &w).is_err());
        assert!(force_loss(&a, &a, &[], &a, &w).is_err());
    }

    #[test]
    fn contact_loss_examples() {
        let w = LossWeights::default();
        let frame = |z: f64, v: Vector3<f64>, active: bool| ContactFrame {
            positions: vec![Vector3::new(0.3, 0.1, z)],
            velocities: vec![v],
            active: vec![active],
        };
        assert_eq!(contact_loss(&[frame(0.0, Vector3::zeros(), true)], &w).unwrap(), 0.0);
        assert_relative_eq!(contact_loss(&[frame(0.01, Vector3::zeros(), true)], &w).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(contact_loss(&[frame(0.5, Vector3::new(1.0, 0.0, 0.0), false)], &w).unwrap(), 0.0);
        assert_relative_eq!(
            contact_loss(&[frame(0.0, Vector3::new(0.1, -0.2, 0.0), true)], &w).unwrap(),
            30.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn active_sets_follow_force_magnitude() {
        let lambda = vec![DVector::from_vec(vec![0.0, 0.0, 5.0, 0.0, 0.0, 1e-9])];
        assert_eq!(contact_sets_from_forces(&lambda), vec![vec![true, false]]);
    }
}
