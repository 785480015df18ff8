//! A 24-part humanoid with the usual SMPL joint hierarchy, built from boxes,
//! plus synthetic motions used by the examples and tests.
//!
//! The world is z-up with x forward and y to the body's left. At `q = 0` the
//! body stands in a T-pose with its soles on the ground plane.

use nalgebra::{DVector, Vector3};

use crate::body::{KinematicTree, MassConfig, RestBody};
use crate::error::Result;
use crate::kinematics::MotionSequence;
use crate::primitives::cuboid;

pub const PART_NAMES: [&str; 24] = [
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow", "left_wrist", "right_wrist", "left_hand", "right_hand",
];

pub const PARENTS: [Option<usize>; 24] = [
    None, Some(0), Some(0), Some(0), Some(1), Some(2),
    Some(3), Some(4), Some(5), Some(6), Some(7), Some(8),
    Some(9), Some(9), Some(9), Some(12), Some(13), Some(14),
    Some(16), Some(17), Some(18), Some(19), Some(20), Some(21),
];

/// Segment mass fractions of a 70 kg adult.
pub const MASS_FRACTIONS: [f64; 24] = [
    0.14, 0.10, 0.10, 0.085, 0.045, 0.045,
    0.085, 0.011, 0.011, 0.15, 0.003, 0.003,
    0.02, 0.02, 0.02, 0.06, 0.027, 0.027,
    0.016, 0.016, 0.005, 0.005, 0.003, 0.003,
];

pub const TOTAL_MASS_KG: f64 = 70.0;

/// Parts whose sole vertices are modelled as contact points.
pub const CONTACT_PARTS: [usize; 6] = [7, 8, 10, 11, 20, 21];

const SHOULDER_Z: f64 = 1.42;

fn mirrored(y: f64, side: usize) -> f64 {
    if side == 0 { y } else { -y }
}

/// World rest position of every joint.
pub fn rest_joints() -> [Vector3<f64>; 24] {
    let v = Vector3::new;
    let mut j = [Vector3::zeros(); 24];
    j[0] = v(0.0, 0.0, 0.94);
    j[3] = v(0.0, 0.0, 1.02);
    j[6] = v(0.0, 0.0, 1.15);
    j[9] = v(0.0, 0.0, 1.24);
    j[12] = v(0.0, 0.0, SHOULDER_Z);
    j[15] = v(0.0, 0.0, 1.52);
    for side in 0..2 {
        let y = |y: f64| mirrored(y, side);
        j[1 + side] = v(0.0, y(0.10), 0.86);
        j[4 + side] = v(0.0, y(0.10), 0.50);
        j[7 + side] = v(0.0, y(0.10), 0.08);
        j[10 + side] = v(0.13, y(0.10), 0.02);
        j[13 + side] = v(0.0, y(0.05), 1.38);
        j[16 + side] = v(0.0, y(0.16), SHOULDER_Z);
        j[18 + side] = v(0.0, y(0.44), SHOULDER_Z);
        j[20 + side] = v(0.0, y(0.69), SHOULDER_Z);
        j[22 + side] = v(0.0, y(0.78), SHOULDER_Z);
    }
    j
}

/// Box extents `(min, max)` of every part at rest.
fn part_boxes() -> [(Vector3<f64>, Vector3<f64>); 24] {
    let v = Vector3::new;
    let mut b = [(Vector3::zeros(), Vector3::zeros()); 24];
    b[0] = (v(-0.10, -0.15, 0.86), v(0.10, 0.15, 1.02));
    b[3] = (v(-0.10, -0.14, 1.02), v(0.10, 0.14, 1.15));
    b[6] = (v(-0.10, -0.14, 1.15), v(0.10, 0.14, 1.24));
    b[9] = (v(-0.10, -0.16, 1.24), v(0.10, 0.16, 1.42));
    b[12] = (v(-0.05, -0.05, 1.42), v(0.05, 0.05, 1.52));
    b[15] = (v(-0.09, -0.08, 1.52), v(0.11, 0.08, 1.75));
    for side in 0..2 {
        // Lateral span [a, b] mirrored to the body's right for side 1.
        let span = |a: f64, c: f64| {
            if side == 0 { (a, c) } else { (-c, -a) }
        };
        let bx = |x: (f64, f64), y: (f64, f64), z: (f64, f64)| (v(x.0, y.0, z.0), v(x.1, y.1, z.1));
        b[1 + side] = bx((-0.07, 0.07), span(0.035, 0.165), (0.50, 0.86));
        b[4 + side] = bx((-0.05, 0.05), span(0.05, 0.15), (0.10, 0.50));
        b[7 + side] = bx((-0.06, 0.13), span(0.055, 0.145), (0.0, 0.10));
        b[10 + side] = bx((0.13, 0.20), span(0.055, 0.145), (0.0, 0.04));
        b[13 + side] = bx((-0.05, 0.05), span(0.02, 0.16), (1.36, 1.44));
        b[16 + side] = bx((-0.045, 0.045), span(0.16, 0.44), (1.375, 1.465));
        b[18 + side] = bx((-0.04, 0.04), span(0.44, 0.69), (1.38, 1.46));
        b[20 + side] = bx((-0.045, 0.045), span(0.69, 0.78), (1.40, 1.44));
        b[22 + side] = bx((-0.04, 0.04), span(0.78, 0.86), (1.41, 1.43));
    }
    b
}

pub fn humanoid_tree() -> KinematicTree {
    let joints = rest_joints();
    let offsets = (0..24)
        .map(|p| match PARENTS[p] {
            None => joints[p],
            Some(parent) => joints[p] - joints[parent],
        })
        .collect();
    KinematicTree::new(PARENTS.to_vec(), offsets).expect("humanoid tree is valid")
}

/// The default humanoid with fraction-table masses totalling 70 kg.
pub fn humanoid_body() -> RestBody {
    let meshes = part_boxes()
        .iter()
        .enumerate()
        .map(|(p, (lo, hi))| cuboid(p, *lo, *hi))
        .collect();
    // The four bottom corners of a cuboid are its first four vertices.
    let contacts = (0..24)
        .map(|p| if CONTACT_PARTS.contains(&p) { vec![0, 1, 2, 3] } else { Vec::new() })
        .collect();
    RestBody::new(
        humanoid_tree(),
        meshes,
        contacts,
        MassConfig::fraction_table(TOTAL_MASS_KG, MASS_FRACTIONS.to_vec()),
    )
    .expect("humanoid body is valid")
}

/// Motionless rest pose repeated for `frames` frames.
pub fn standing_motion(body: &RestBody, frames: usize, fps: f64) -> Result<MotionSequence> {
    MotionSequence::new(fps, vec![DVector::zeros(body.dof_count()); frames])
}

/// A free unit-density cube of side `side` centred at `center`, without
/// contact points.
pub fn free_cube(center: Vector3<f64>, side: f64, mass_kg: f64) -> RestBody {
    let tree = KinematicTree::new(vec![None], vec![center]).expect("single part tree");
    RestBody::new(
        tree,
        vec![crate::primitives::cube(0, center, side)],
        vec![Vec::new()],
        MassConfig::fraction_table(mass_kg, vec![1.0]),
    )
    .expect("cube body is valid")
}

/// Projectile flight: constant velocity `v0` under gravity `g` along −z and a
/// constant spin `spin` (rad/s) about the body x axis, sampled at `fps`.
pub fn ballistic_motion(v0: Vector3<f64>, spin: f64, gravity: f64, frames: usize, fps: f64) -> Result<MotionSequence> {
    let frames = (0..frames)
        .map(|k| {
            let t = k as f64 / fps;
            let p = v0 * t - Vector3::new(0.0, 0.0, 0.5 * gravity * t * t);
            DVector::from_vec(vec![p.x, p.y, p.z, spin * t, 0.0, 0.0])
        })
        .collect();
    MotionSequence::new(fps, frames)
}
