//! JSON documents written and read by the command line.

use std::path::Path;

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use physdyn_core::kinematics::MotionFile;
use physdyn_core::{Error, Result};

#[derive(Debug, Serialize)]
pub struct MassPropsFile {
    pub units: MassUnits,
    pub parts: Vec<PartRecord>,
    pub total_mass_kg: f64,
    pub total_volume_m3: f64,
    pub com_m: [f64; 3],
}

#[derive(Debug, Serialize)]
pub struct MassUnits {
    pub volume: &'static str,
    pub mass: &'static str,
    pub com: &'static str,
    pub inertia: &'static str,
}

pub const MASS_UNITS: MassUnits = MassUnits {
    volume: "m^3",
    mass: "kg",
    com: "m",
    inertia: "kg*m^2, about the part centre of mass, row-major",
};

#[derive(Debug, Serialize)]
pub struct PartRecord {
    pub part: usize,
    pub volume: f64,
    pub mass: f64,
    pub com: [f64; 3],
    pub inertia: [f64; 9],
}

#[derive(Debug, Serialize)]
pub struct PoseDump {
    #[serde(flatten)]
    pub motion: MotionFile,
    pub units: &'static str,
    /// Per frame, world joint positions in part order.
    pub joints: Vec<Vec<[f64; 3]>>,
    /// Per frame, world contact-point positions.
    pub contacts: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForcesFile {
    pub mode: String,
    pub algorithm: String,
    pub gravity: f64,
    pub fps: f64,
    pub dof_count: usize,
    pub contact_count: usize,
    pub units: ForceUnits,
    pub frames: Vec<ForceRecord>,
    pub warnings: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForceUnits {
    pub lambda: String,
    pub tau: String,
    pub x: String,
}

impl Default for ForceUnits {
    fn default() -> Self {
        Self {
            lambda: "N, stacked per contact point".into(),
            tau: "generalized force (N for translations, N*m for rotations)".into(),
            x: "[k_h N, k_n N, c N*s/m] per contact point".into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ForceRecord {
    pub frame: usize,
    #[serde(default, skip_serializing_if = "is_false")]
    pub endpoint: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub near_gimbal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Label contact forces and actuations, one vector per frame.
pub type Labels = (Vec<DVector<f64>>, Vec<DVector<f64>>);

impl ForcesFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: format!("forces file {}", path.display()),
            message: e.to_string(),
        })
    }

    /// Per-frame `(λ, τ)`; every frame must carry a solution.
    pub fn labels(&self) -> Result<Labels> {
        let mut lambda = Vec::with_capacity(self.frames.len());
        let mut tau = Vec::with_capacity(self.frames.len());
        for rec in &self.frames {
            match (&rec.lambda, &rec.tau) {
                (Some(l), Some(t)) => {
                    lambda.push(DVector::from_column_slice(l));
                    tau.push(DVector::from_column_slice(t));
                }
                _ => {
                    return Err(Error::invalid(
                        None,
                        "forces",
                        format!("frame {} has no solution", rec.frame),
                    ))
                }
            }
        }
        Ok((lambda, tau))
    }
}

pub fn arr3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn row_major(m: &Matrix3<f64>) -> [f64; 9] {
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

pub fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Pretty JSON with a trailing newline; floats use the shortest
/// representation that round-trips.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        what: "output".into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
