//! Volume, centre of mass and inertia of closed part meshes, assuming uniform
//! density within each part.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::body::{MassMode, RestBody};
use crate::error::{Error, Result};
use crate::mesh::PartMesh;

/// Meshes enclosing less than this volume (m³) cannot carry inertia.
pub const MIN_VOLUME: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct PartMassProperties {
    pub volume: f64,
    pub mass: f64,
    /// Rest-pose centre of mass, world frame.
    pub com: Vector3<f64>,
    /// Inertia about the COM in the part's rest frame.
    pub inertia: Matrix3<f64>,
}

impl PartMassProperties {
    pub fn principal_moments(&self) -> Vector3<f64> {
        SymmetricEigen::new(self.inertia).eigenvalues
    }
}

fn require_watertight(mesh: &PartMesh) -> Result<()> {
    if !mesh.is_watertight() {
        return Err(Error::geometry(Some(mesh.part_id), "mesh is not watertight"));
    }
    Ok(())
}

/// Enclosed volume and centroid, by signed tetrahedra with apex at the origin.
pub fn part_volume_com(mesh: &PartMesh) -> Result<(f64, Vector3<f64>)> {
    require_watertight(mesh)?;
    // Sum the raw determinants and divide once, so integer-valued meshes
    // give exact volumes.
    let dets: Vec<f64> = mesh
        .triangles
        .iter()
        .map(|tri| {
            let [a, b, c] = tri.map(|i| mesh.vertices[i]);
            a.dot(&b.cross(&c))
        })
        .collect();
    let det_sum = compensated_sum(dets.iter().copied());
    let volume = det_sum / 6.0;
    if volume.abs() <= MIN_VOLUME {
        return Err(Error::geometry(
            Some(mesh.part_id),
            format!("enclosed volume {volume:e} m³ is degenerate"),
        ));
    }
    let moment: Vector3<f64> = mesh
        .triangles
        .iter()
        .zip(&dets)
        .map(|(tri, det)| tri.iter().map(|&i| mesh.vertices[i]).sum::<Vector3<f64>>() * *det)
        .sum();
    Ok((volume, moment / (4.0 * det_sum)))
}

/// Second moment `∫ r rᵀ dV` about `origin`, summed over tetrahedra formed by
/// each triangle and `origin`. Each tetrahedron uses the exact rule for
/// quadratics, `v/20 · (f(P1) + f(P2) + f(P3) + f(P1 + P2 + P3))`.
pub fn second_moment(mesh: &PartMesh, origin: &Vector3<f64>) -> Matrix3<f64> {
    let mut s = Matrix3::zeros();
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.vertices[i] - origin);
        let v = a.dot(&b.cross(&c)) / 6.0;
        let sum = a + b + c;
        s += (a * a.transpose() + b * b.transpose() + c * c.transpose() + sum * sum.transpose()) * (v / 20.0);
    }
    s
}

/// Inertia tensor about the COM for a uniform solid of the given mass.
pub fn part_inertia(mesh: &PartMesh, mass: f64) -> Result<Matrix3<f64>> {
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::invalid(Some(mesh.part_id), "mass", "mass must be positive"));
    }
    let (volume, com) = part_volume_com(mesh)?;
    let s = second_moment(mesh, &com);
    let inertia = (Matrix3::identity() * s.trace() - s) * (mass / volume);
    // symmetric by construction up to summation order
    Ok((inertia + inertia.transpose()) * 0.5)
}

fn part_properties(mesh: &PartMesh, mass_of: impl Fn(f64) -> f64) -> Result<PartMassProperties> {
    let (volume, com) = part_volume_com(mesh)?;
    let mass = mass_of(volume);
    let inertia = part_inertia(mesh, mass)?;
    Ok(PartMassProperties {
        volume,
        mass,
        com,
        inertia,
    })
}

/// Mass properties of every part, in part order.
pub fn body_mass_properties(body: &RestBody) -> Result<Vec<PartMassProperties>> {
    let cfg = &body.mass;
    body.meshes
        .par_iter()
        .enumerate()
        .map(|(i, mesh)| match cfg.mode {
            MassMode::FractionTable => part_properties(mesh, |_| cfg.total_kg * cfg.fractions[i]),
            MassMode::UniformDensity => {
                part_properties(mesh, |v| cfg.density_kg_m3 * cfg.density_scale[i] * v)
            }
        })
        .collect()
}

/// Total mass with compensated summation, so a fraction table that sums to
/// one reproduces the configured total to the last bit.
pub fn total_mass(props: &[PartMassProperties]) -> f64 {
    compensated_sum(props.iter().map(|p| p.mass))
}

/// Neumaier summation in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}
