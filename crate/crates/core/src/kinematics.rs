//! Generalized coordinates, forward kinematics and finite-difference
//! derivatives of motion sequences.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::body::{KinematicTree, RestBody};
use crate::error::{Error, Result};
use crate::mass::PartMassProperties;
use crate::rotation::{axis_angle_to_euler_xyz, rot_x, rot_y, rot_z};

/// `|cos β|` of a joint's middle Euler angle below which a frame is reported
/// as near gimbal lock.
pub const GIMBAL_WARN_COS: f64 = 0.05;

/// World-frame configuration of every part for one generalized position.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    /// Part orientation `R_{0,n}`.
    pub rotations: Vec<Matrix3<f64>>,
    /// World position of each part's joint (the root joint for part 0).
    pub joints: Vec<Vector3<f64>>,
    /// World rotation axes of the three Euler DOFs driving each part.
    pub axes: Vec<[Vector3<f64>; 3]>,
    /// World positions of the body's contact vertices, in body order.
    pub contacts: Vec<Vector3<f64>>,
    rest_joints: Vec<Vector3<f64>>,
}

impl Pose {
    /// Maps a rest-pose world point rigidly attached to `part`.
    pub fn map_point(&self, part: usize, rest_point: &Vector3<f64>) -> Vector3<f64> {
        self.rotations[part] * (rest_point - self.rest_joints[part]) + self.joints[part]
    }

    pub fn coms(&self, props: &[PartMassProperties]) -> Vec<Vector3<f64>> {
        props.iter().enumerate().map(|(n, p)| self.map_point(n, &p.com)).collect()
    }

    /// World positions of all mesh vertices, per part.
    pub fn vertices(&self, body: &RestBody) -> Vec<Vec<Vector3<f64>>> {
        body.meshes
            .iter()
            .enumerate()
            .map(|(n, mesh)| mesh.vertices.iter().map(|v| self.map_point(n, v)).collect())
            .collect()
    }
}

fn check_len(q: &DVector<f64>, tree: &KinematicTree) -> Result<()> {
    if q.len() != tree.dof_count() {
        return Err(Error::Dimension {
            what: "generalized position",
            expected: tree.dof_count(),
            got: q.len(),
        });
    }
    Ok(())
}

/// Forward kinematics with intrinsic X-Y-Z Euler joints.
pub fn forward_kinematics(q: &DVector<f64>, body: &RestBody) -> Result<Pose> {
    let tree = &body.tree;
    check_len(q, tree)?;
    let n = tree.part_count();
    let rest_joints = tree.rest_joint_positions();
    let mut rotations: Vec<Matrix3<f64>> = Vec::with_capacity(n);
    let mut joints: Vec<Vector3<f64>> = Vec::with_capacity(n);
    let mut axes = Vec::with_capacity(n);
    for part in 0..n {
        let (parent_rot, joint) = match tree.parent(part) {
            None => (Matrix3::identity(), rest_joints[0] + Vector3::new(q[0], q[1], q[2])),
            Some(p) => (rotations[p], joints[p] + rotations[p] * tree.joint_offset(part)),
        };
        let k = tree.rotation_dof_start(part);
        let after_x = parent_rot * rot_x(q[k]);
        let after_y = after_x * rot_y(q[k + 1]);
        axes.push([parent_rot.column(0).into(), after_x.column(1).into(), after_y.column(2).into()]);
        rotations.push(after_y * rot_z(q[k + 2]));
        joints.push(joint);
    }
    let mut pose = Pose {
        rotations,
        joints,
        axes,
        contacts: Vec::new(),
        rest_joints,
    };
    pose.contacts = body
        .contact_points()
        .iter()
        .map(|c| pose.map_point(c.part, &body.meshes[c.part].vertices[c.vertex]))
        .collect();
    Ok(pose)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleFormat {
    EulerXyz,
    AxisAngle,
}

/// Sampled generalized positions. Rotation tracks are stored as Euler angles.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub fps: f64,
    pub frames: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionFile {
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dof_names: Vec<String>,
    pub frames: Vec<Vec<f64>>,
    #[serde(default = "default_angles")]
    pub angles: AngleFormat,
}

fn default_angles() -> AngleFormat {
    AngleFormat::EulerXyz
}

impl MotionSequence {
    pub fn new(fps: f64, frames: Vec<DVector<f64>>) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::invalid(None, "fps", format!("fps must be positive, got {fps}")));
        }
        if let Some(first) = frames.first() {
            for (t, f) in frames.iter().enumerate() {
                if f.len() != first.len() {
                    return Err(Error::invalid(None, "frames", format!("frame {t} has {} values", f.len())));
                }
                if !f.iter().all(|x| x.is_finite()) {
                    return Err(Error::invalid(None, "frames", format!("frame {t} is not finite")));
                }
            }
        }
        Ok(Self { fps, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn check_for(&self, tree: &KinematicTree) -> Result<()> {
        match self.frames.first() {
            Some(f) if f.len() != tree.dof_count() => Err(Error::Dimension {
                what: "motion frame",
                expected: tree.dof_count(),
                got: f.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Shifts every rotation track by multiples of 2π so that no
    /// frame-to-frame jump exceeds π.
    pub fn unwrap_angles(&mut self, tree: &KinematicTree) {
        for dof in 3..tree.dof_count() {
            for t in 1..self.frames.len() {
                let prev = self.frames[t - 1][dof];
                let jump = self.frames[t][dof] - prev;
                if jump.abs() > PI {
                    let turns = (jump / TAU).round();
                    self.frames[t][dof] -= turns * TAU;
                }
            }
        }
    }

    /// Frames in which some joint's middle Euler angle is near ±π/2.
    pub fn near_gimbal_frames(&self, tree: &KinematicTree) -> Vec<bool> {
        self.frames
            .iter()
            .map(|q| {
                (0..tree.part_count()).any(|p| q[tree.rotation_dof_start(p) + 1].cos().abs() < GIMBAL_WARN_COS)
            })
            .collect()
    }

    pub fn from_file(file: MotionFile, tree: &KinematicTree) -> Result<Self> {
        let n_q = tree.dof_count();
        let mut frames = Vec::with_capacity(file.frames.len());
        for (t, raw) in file.frames.into_iter().enumerate() {
            if raw.len() != n_q {
                return Err(Error::invalid(
                    None,
                    "frames",
                    format!("frame {t} has {} values, body has {n_q} DOFs", raw.len()),
                ));
            }
            let mut q = DVector::from_vec(raw);
            if file.angles == AngleFormat::AxisAngle {
                for part in 0..tree.part_count() {
                    let k = tree.rotation_dof_start(part);
                    let e = axis_angle_to_euler_xyz(&Vector3::new(q[k], q[k + 1], q[k + 2]));
                    q.fixed_rows_mut::<3>(k).copy_from(&e);
                }
            }
            frames.push(q);
        }
        let mut seq = MotionSequence::new(file.fps, frames)?;
        seq.unwrap_angles(tree);
        Ok(seq)
    }

    pub fn load(path: &Path, tree: &KinematicTree) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: MotionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: format!("motion file {}", path.display()),
            message: e.to_string(),
        })?;
        Self::from_file(file, tree)
    }

    pub fn to_file(&self, tree: &KinematicTree) -> MotionFile {
        MotionFile {
            fps: self.fps,
            dof_names: tree.dof_names(),
            frames: self.frames.iter().map(|q| q.iter().copied().collect()).collect(),
            angles: AngleFormat::EulerXyz,
        }
    }
}

/// Generalized velocities and accelerations by finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub velocity: Vec<DVector<f64>>,
    pub acceleration: Vec<DVector<f64>>,
}

impl Derivatives {
    /// True for the first and last frame, which use one-sided differences.
    pub fn is_endpoint(&self, t: usize) -> bool {
        t == 0 || t + 1 == self.velocity.len()
    }
}

/// Central differences at interior frames, one-sided differences at the two
/// endpoints.
pub fn finite_difference_derivatives(seq: &MotionSequence) -> Result<Derivatives> {
    let t_len = seq.len();
    if t_len < 3 {
        return Err(Error::TooFewFrames(t_len));
    }
    let f = &seq.frames;
    let (fps, fps2) = (seq.fps, seq.fps * seq.fps);
    let mut velocity = Vec::with_capacity(t_len);
    let mut acceleration = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let (v, a) = if t == 0 {
            ((&f[1] - &f[0]) * fps, (&f[2] - &f[1] * 2.0 + &f[0]) * fps2)
        } else if t + 1 == t_len {
            (
                (&f[t] - &f[t - 1]) * fps,
                (&f[t] - &f[t - 1] * 2.0 + &f[t - 2]) * fps2,
            )
        } else {
            (
                (&f[t + 1] - &f[t - 1]) * (fps / 2.0),
                (&f[t + 1] - &f[t] * 2.0 + &f[t - 1]) * fps2,
            )
        };
        velocity.push(v);
        acceleration.push(a);
    }
    Ok(Derivatives { velocity, acceleration })
}
