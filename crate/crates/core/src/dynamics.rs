//! Euler-Lagrange terms of the articulated body: Jacobians, mass matrix,
//! gravity and bias forces, and the equation-of-motion residual.
//!
//! Every part contributes through the Jacobian of its centre of mass and its
//! COM-referenced inertia rotated into the world frame.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};

use crate::body::RestBody;
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, Pose};
use crate::mass::{body_mass_properties, PartMassProperties};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// A body together with its mass properties and gravity.
#[derive(Debug, Clone)]
pub struct Model {
    pub body: RestBody,
    pub props: Vec<PartMassProperties>,
    /// Gravitational acceleration vector, `(0, 0, −g)` in a z-up world.
    pub gravity: Vector3<f64>,
}

impl Model {
    /// Computes mass properties from the body's (closed) part meshes.
    pub fn new(body: RestBody, gravity: f64) -> Result<Self> {
        let props = body_mass_properties(&body)?;
        Ok(Self::with_props(body, props, gravity))
    }

    pub fn with_props(body: RestBody, props: Vec<PartMassProperties>, gravity: f64) -> Self {
        Self {
            body,
            props,
            gravity: Vector3::new(0.0, 0.0, -gravity),
        }
    }

    pub fn dof_count(&self) -> usize {
        self.body.dof_count()
    }

    pub fn total_mass(&self) -> f64 {
        crate::mass::total_mass(&self.props)
    }

    pub fn pose(&self, q: &DVector<f64>) -> Result<Pose> {
        forward_kinematics(q, &self.body)
    }
}

/// Linear Jacobian of a world point rigidly attached to `part`.
pub fn point_jacobian(pose: &Pose, body: &RestBody, part: usize, point: &Vector3<f64>) -> Matrix3xX<f64> {
    let tree = &body.tree;
    let mut j = Matrix3xX::zeros(tree.dof_count());
    j.fixed_columns_mut::<3>(0).fill_with_identity();
    for m in tree.chain(part) {
        let k = tree.rotation_dof_start(m);
        let lever = point - pose.joints[m];
        for (a, axis) in pose.axes[m].iter().enumerate() {
            j.set_column(k + a, &axis.cross(&lever));
        }
    }
    j
}

/// Angular Jacobian of `part`: `J_R q̇` is its world angular velocity.
pub fn angular_jacobian(pose: &Pose, body: &RestBody, part: usize) -> Matrix3xX<f64> {
    let tree = &body.tree;
    let mut j = Matrix3xX::zeros(tree.dof_count());
    for m in tree.chain(part) {
        let k = tree.rotation_dof_start(m);
        for (a, axis) in pose.axes[m].iter().enumerate() {
            j.set_column(k + a, axis);
        }
    }
    j
}

/// Point Jacobians of all contact vertices stacked in body order (3n_c × n_q).
pub fn contact_jacobian(pose: &Pose, body: &RestBody) -> DMatrix<f64> {
    let points = body.contact_points();
    let mut jc = DMatrix::zeros(3 * points.len(), body.dof_count());
    for (i, c) in points.iter().enumerate() {
        let j = point_jacobian(pose, body, c.part, &pose.contacts[i]);
        jc.fixed_rows_mut::<3>(3 * i).copy_from(&j);
    }
    jc
}

/// What a Jacobian time derivative is taken of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianTarget {
    /// A point given by its rest-pose world position, attached to `part`.
    Point { part: usize, rest_point: Vector3<f64> },
    Angular { part: usize },
}

fn target_jacobian(pose: &Pose, body: &RestBody, target: &JacobianTarget) -> Matrix3xX<f64> {
    match *target {
        JacobianTarget::Point { part, rest_point } => {
            point_jacobian(pose, body, part, &pose.map_point(part, &rest_point))
        }
        JacobianTarget::Angular { part } => angular_jacobian(pose, body, part),
    }
}

/// Step used for the symmetric directional difference along `q̇`.
pub fn directional_step(q: &DVector<f64>) -> f64 {
    1e-6 * (1.0 + q.amax())
}

/// `J̇ = (J(q + εq̇) − J(q − εq̇)) / 2ε`.
pub fn jacobian_time_derivative(
    q: &DVector<f64>,
    qd: &DVector<f64>,
    body: &RestBody,
    target: &JacobianTarget,
) -> Result<Matrix3xX<f64>> {
    check_dim("generalized velocity", q.len(), qd.len())?;
    let eps = directional_step(q);
    let plus = forward_kinematics(&(q + qd * eps), body)?;
    let minus = forward_kinematics(&(q - qd * eps), body)?;
    Ok((target_jacobian(&plus, body, target) - target_jacobian(&minus, body, target)) / (2.0 * eps))
}

fn world_inertia(pose: &Pose, props: &PartMassProperties, part: usize) -> Matrix3<f64> {
    let r = &pose.rotations[part];
    r * props.inertia * r.transpose()
}

pub fn mass_matrix(model: &Model, pose: &Pose) -> DMatrix<f64> {
    let body = &model.body;
    let n_q = body.dof_count();
    let mut m = DMatrix::zeros(n_q, n_q);
    for (n, p) in model.props.iter().enumerate() {
        let js = point_jacobian(pose, body, n, &pose.map_point(n, &p.com));
        let jr = angular_jacobian(pose, body, n);
        m += js.transpose() * &js * p.mass + jr.transpose() * world_inertia(pose, p, n) * &jr;
    }
    (&m + m.transpose()) * 0.5
}

/// `g(q) = −Σ J_Sᵀ m g⃗`, the gradient of the potential energy.
pub fn gravity_vector(model: &Model, pose: &Pose) -> DVector<f64> {
    let body = &model.body;
    let mut g = DVector::zeros(body.dof_count());
    for (n, p) in model.props.iter().enumerate() {
        let js = point_jacobian(pose, body, n, &pose.map_point(n, &p.com));
        g -= js.transpose() * (model.gravity * p.mass);
    }
    g
}

/// Coriolis and centrifugal generalized force.
pub fn bias_force(model: &Model, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("generalized velocity", q.len(), qd.len())?;
    let pose = model.pose(q)?;
    bias_force_at(model, &pose, q, qd)
}

fn bias_force_at(model: &Model, pose: &Pose, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
    let body = &model.body;
    let eps = directional_step(q);
    let plus = forward_kinematics(&(q + qd * eps), body)?;
    let minus = forward_kinematics(&(q - qd * eps), body)?;
    let mut c = DVector::zeros(body.dof_count());
    for (n, p) in model.props.iter().enumerate() {
        let js = point_jacobian(pose, body, n, &pose.map_point(n, &p.com));
        let jr = angular_jacobian(pose, body, n);
        let js_dot = (point_jacobian(&plus, body, n, &plus.map_point(n, &p.com))
            - point_jacobian(&minus, body, n, &minus.map_point(n, &p.com)))
            / (2.0 * eps);
        let jr_dot = (angular_jacobian(&plus, body, n) - angular_jacobian(&minus, body, n)) / (2.0 * eps);
        let inertia = world_inertia(pose, p, n);
        let omega = &jr * qd;
        let linear = &js_dot * qd * p.mass;
        let angular = inertia * (&jr_dot * qd) + omega.cross(&(inertia * omega));
        c += js.transpose() * linear + jr.transpose() * angular;
    }
    Ok(c)
}

pub fn potential_energy(model: &Model, pose: &Pose) -> f64 {
    pose.coms(&model.props)
        .iter()
        .zip(&model.props)
        .map(|(com, p)| -p.mass * model.gravity.dot(com))
        .sum()
}

pub fn kinetic_energy(model: &Model, pose: &Pose, qd: &DVector<f64>) -> f64 {
    0.5 * qd.dot(&(mass_matrix(model, pose) * qd))
}

/// Total linear momentum `Σ m v_com`.
pub fn linear_momentum(model: &Model, pose: &Pose, qd: &DVector<f64>) -> Vector3<f64> {
    model
        .props
        .iter()
        .enumerate()
        .map(|(n, p)| point_jacobian(pose, &model.body, n, &pose.map_point(n, &p.com)) * qd * p.mass)
        .sum()
}

/// Left-hand side terms of the Euler-Lagrange equations at one state.
#[derive(Debug, Clone)]
pub struct DynamicsTerms {
    pub mass_matrix: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub gravity: DVector<f64>,
    pub contact_jacobian: DMatrix<f64>,
    pub pose: Pose,
}

impl DynamicsTerms {
    pub fn compute(model: &Model, q: &DVector<f64>, qd: &DVector<f64>) -> Result<Self> {
        check_dim("generalized position", model.dof_count(), q.len())?;
        check_dim("generalized velocity", q.len(), qd.len())?;
        let pose = model.pose(q)?;
        Ok(Self {
            mass_matrix: mass_matrix(model, &pose),
            bias: bias_force_at(model, &pose, q, qd)?,
            gravity: gravity_vector(model, &pose),
            contact_jacobian: contact_jacobian(&pose, &model.body),
            pose,
        })
    }

    /// `M q̈ + C + g`, the generalized force the motion requires.
    pub fn required_force(&self, qdd: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("generalized acceleration", self.bias.len(), qdd.len())?;
        Ok(&self.mass_matrix * qdd + &self.bias + &self.gravity)
    }

    /// `J_Cᵀ λ`.
    pub fn contact_generalized_force(&self, lambda: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("contact forces", self.contact_jacobian.nrows(), lambda.len())?;
        Ok(self.contact_jacobian.tr_mul(lambda))
    }

    /// `τ` that closes the equations exactly for the given contact forces.
    pub fn closing_actuation(&self, required: &DVector<f64>, lambda: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(required - self.contact_generalized_force(lambda)?)
    }

    /// `r = M q̈ + C + g − J_Cᵀ λ − τ`.
    pub fn el_residual(&self, qdd: &DVector<f64>, lambda: &DVector<f64>, tau: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("joint actuations", self.bias.len(), tau.len())?;
        let required = self.required_force(qdd)?;
        Ok(self.closing_actuation(&required, lambda)? - tau)
    }
}

/// Convenience wrapper computing the terms and the residual in one call.
pub fn el_residual(
    model: &Model,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    lambda: &DVector<f64>,
    tau: &DVector<f64>,
) -> Result<DVector<f64>> {
    DynamicsTerms::compute(model, q, qd)?.el_residual(qdd, lambda, tau)
}

fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { what, expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{KinematicTree, MassConfig};
    use crate::primitives;
    use crate::rotation::unskew;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_cube() -> Model {
        let tree = KinematicTree::new(vec![None], vec![Vector3::new(0.0, 0.0, 1.0)]).unwrap();
        let body = RestBody::new(
            tree,
            vec![primitives::cube(0, Vector3::new(0.0, 0.0, 1.0), 1.0)],
            vec![vec![0, 7]],
            MassConfig::fraction_table(6.0, vec![1.0]),
        )
        .unwrap();
        Model::new(body, STANDARD_GRAVITY).unwrap()
    }

    /// Three-part chain with off-axis joints and boxes.
    fn chain() -> Model {
        let tree = KinematicTree::new(
            vec![None, Some(0), Some(1)],
            vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.3, 0.0, -0.1), Vector3::new(0.0, 0.4, 0.05)],
        )
        .unwrap();
        let body = RestBody::new(
            tree,
            vec![
                primitives::cuboid(0, Vector3::new(-0.1, -0.1, 0.8), Vector3::new(0.2, 0.15, 1.1)),
                primitives::cuboid(1, Vector3::new(0.25, -0.05, 0.85), Vector3::new(0.35, 0.4, 0.95)),
                primitives::cuboid(2, Vector3::new(0.28, 0.4, 0.9), Vector3::new(0.34, 0.7, 0.98)),
            ],
            vec![vec![0, 3], vec![], vec![5]],
            MassConfig::fraction_table(10.0, vec![0.6, 0.3, 0.1]),
        )
        .unwrap();
        Model::new(body, STANDARD_GRAVITY).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
    }

    #[test]
    fn free_body_translation_block_is_identity() {
        let model = single_cube();
        let pose = model.pose(&DVector::zeros(6)).unwrap();
        let j = point_jacobian(&pose, &model.body, 0, &Vector3::new(0.3, -0.2, 0.5));
        assert_eq!(j.fixed_columns::<3>(0).into_owned(), Matrix3::identity());
        // zero lever arm
        let at_joint = point_jacobian(&pose, &model.body, 0, &pose.joints[0]);
        assert!(at_joint.columns(3, 3).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn point_jacobian_matches_finite_differences() {
        let model = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rest = model.body.meshes[2].vertices[3];
        for _ in 0..10 {
            let q = random_vec(&mut rng, 12, 1.0);
            let pose = model.pose(&q).unwrap();
            let j = point_jacobian(&pose, &model.body, 2, &pose.map_point(2, &rest));
            for k in 0..12 {
                let mut dq = DVector::zeros(12);
                dq[k] = 1e-6;
                let fd = (model.pose(&(&q + &dq)).unwrap().map_point(2, &rest)
                    - model.pose(&(&q - &dq)).unwrap().map_point(2, &rest))
                    / 2e-6;
                assert!((j.column(k) - fd).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn angular_jacobian_matches_rotation_rate() {
        let model = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_vec(&mut rng, 12, 1.0);
        let qd = random_vec(&mut rng, 12, 1.0);
        let pose = model.pose(&q).unwrap();
        for part in 0..3 {
            let omega = angular_jacobian(&pose, &model.body, part) * &qd;
            let h = 1e-6;
            let r_dot = (model.pose(&(&q + &qd * h)).unwrap().rotations[part]
                - model.pose(&(&q - &qd * h)).unwrap().rotations[part])
                / (2.0 * h);
            let fd = unskew(&(r_dot * pose.rotations[part].transpose()));
            assert!((omega - fd).amax() < 1e-5);
        }
        // part 1's DOFs do not move part 0
        let jr0 = angular_jacobian(&pose, &model.body, 0);
        assert!(jr0.columns(6, 6).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_axis_spin() {
        let model = single_cube();
        let pose = model.pose(&DVector::zeros(6)).unwrap();
        let qd = DVector::from_vec(vec![0.0, 0.0, 0.0, 2.5, 0.0, 0.0]);
        assert_eq!(angular_jacobian(&pose, &model.body, 0) * qd, Vector3::new(2.5, 0.0, 0.0));
    }

    #[test]
    fn contact_jacobian_shape_and_static_velocity() {
        let model = chain();
        let pose = model.pose(&DVector::zeros(12)).unwrap();
        let jc = contact_jacobian(&pose, &model.body);
        assert_eq!(jc.shape(), (9, 12));
        assert!((jc * DVector::zeros(12)).iter().all(|&x| x == 0.0));

        let mut no_contacts = model.body.clone();
        no_contacts.contact_vertices = vec![vec![]; 3];
        assert_eq!(contact_jacobian(&pose, &no_contacts).shape(), (0, 12));
    }

    #[test]
    fn jacobian_derivative_vanishes_without_motion_and_for_translation() {
        let model = chain();
        let q = DVector::from_element(12, 0.3);
        let target = JacobianTarget::Point { part: 2, rest_point: Vector3::new(0.3, 0.5, 0.9) };
        let jd = jacobian_time_derivative(&q, &DVector::zeros(12), &model.body, &target).unwrap();
        assert!(jd.iter().all(|&x| x == 0.0));

        let mut qd = DVector::zeros(12);
        qd[0] = 1.0;
        qd[2] = -2.0;
        let jd = jacobian_time_derivative(&q, &qd, &model.body, &target).unwrap();
        assert!(jd.amax() < 1e-9);
    }

    #[test]
    fn jacobian_derivative_matches_trajectory_differences() {
        let model = chain();
        let q_of = |t: f64| DVector::from_fn(12, |i, _| 0.4 * (1.3 * t + i as f64).sin());
        let qd_of = |t: f64| DVector::from_fn(12, |i, _| 0.4 * 1.3 * (1.3 * t + i as f64).cos());
        let target = JacobianTarget::Angular { part: 2 };
        let t = 0.7;
        let h = 1e-5;
        let j_at = |t: f64| target_jacobian(&model.pose(&q_of(t)).unwrap(), &model.body, &target);
        let fd = (j_at(t + h) - j_at(t - h)) / (2.0 * h);
        let jd = jacobian_time_derivative(&q_of(t), &qd_of(t), &model.body, &target).unwrap();
        assert!((fd - jd).amax() < 1e-4);
    }

    #[test]
    fn free_body_mass_matrix_blocks() {
        let model = single_cube();
        let m = mass_matrix(&model, &model.pose(&DVector::zeros(6)).unwrap());
        assert_relative_eq!(m.view((0, 0), (3, 3)).into_owned(), DMatrix::identity(3, 3) * 6.0, epsilon = 1e-12);
        assert_relative_eq!(m.view((3, 3), (3, 3)).into_owned(), DMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn mass_matrix_is_spd_with_total_mass_base_block() {
        let model = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let q = random_vec(&mut rng, 12, 1.2);
            let m = mass_matrix(&model, &model.pose(&q).unwrap());
            assert!((&m - m.transpose()).amax() <= 1e-10 * m.amax());
            assert!(m.clone().symmetric_eigen().eigenvalues.min() > 0.0);
            assert_relative_eq!(m.view((0, 0), (3, 3)).into_owned(), DMatrix::identity(3, 3) * 10.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn gravity_is_potential_gradient() {
        let model = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_vec(&mut rng, 12, 1.0);
        let g = gravity_vector(&model, &model.pose(&q).unwrap());
        assert_relative_eq!(g[2], 9.81 * 10.0, epsilon = 1e-10);
        assert_eq!((g[0], g[1]), (0.0, 0.0));
        for k in 0..12 {
            let mut dq = DVector::zeros(12);
            dq[k] = 1e-6;
            let fd = (potential_energy(&model, &model.pose(&(&q + &dq)).unwrap())
                - potential_energy(&model, &model.pose(&(&q - &dq)).unwrap()))
                / 2e-6;
            assert!((g[k] - fd).abs() < 1e-5, "dof {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn bias_force_is_quadratic_in_velocity() {
        let model = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_vec(&mut rng, 12, 1.0);
        let qd = random_vec(&mut rng, 12, 1.0);
        assert!(bias_force(&model, &q, &DVector::zeros(12)).unwrap().iter().all(|&x| x == 0.0));
        let c1 = bias_force(&model, &q, &qd).unwrap();
        let c2 = bias_force(&model, &q, &(&qd * 2.0)).unwrap();
        assert!((c2 - &c1 * 4.0).amax() <= 1e-8 * c1.amax() * 4.0);
    }

    #[test]
    fn residual_vanishes_for_gravity_compensation() {
        let model = chain();
        let q = DVector::from_element(12, 0.2);
        let zero = DVector::zeros(12);
        let terms = DynamicsTerms::compute(&model, &q, &zero).unwrap();
        let lambda = DVector::zeros(9);
        let r = terms.el_residual(&zero, &lambda, &terms.gravity).unwrap();
        assert!(r.amax() < 1e-12);
        assert!(terms.el_residual(&zero, &DVector::zeros(3), &terms.gravity).is_err());
    }

    #[test]
    fn residual_vanishes_for_constructed_actuation() {
        let model = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (q, qd, qdd) = (random_vec(&mut rng, 12, 1.0), random_vec(&mut rng, 12, 1.0), random_vec(&mut rng, 12, 1.0));
        let lambda = random_vec(&mut rng, 9, 50.0);
        let terms = DynamicsTerms::compute(&model, &q, &qd).unwrap();
        let tau = terms.closing_actuation(&terms.required_force(&qdd).unwrap(), &lambda).unwrap();
        let r = terms.el_residual(&qdd, &lambda, &tau).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }
}
