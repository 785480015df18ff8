//! Articulated body definition: kinematic tree, part meshes, contact
//! vertices and mass configuration, plus the JSON body file format.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{parse_obj, MeshReport, PartMesh};

/// Tolerance on the sum of mass fractions.
pub const FRACTION_SUM_TOL: f64 = 1e-9;

/// One generalized coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    /// Root translation along world axis 0..3.
    Translation(usize),
    /// Intrinsic X-Y-Z Euler angle `axis` of the joint driving `part`.
    Rotation { part: usize, axis: usize },
}

/// Parent links and rest joint offsets of a tree of rigid parts.
///
/// Parts are stored in topological order: every non-root part has a parent
/// with a smaller index, and part 0 is the single root. The root's offset is
/// the rest position of the root joint in world coordinates; every other
/// offset is the joint position relative to the parent joint (rest frames are
/// all aligned with the world axes).
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    parent: Vec<Option<usize>>,
    joint_offset: Vec<Vector3<f64>>,
}

impl KinematicTree {
    pub fn new(parent: Vec<Option<usize>>, joint_offset: Vec<Vector3<f64>>) -> Result<Self> {
        if parent.is_empty() {
            return Err(Error::invalid(None, "parts", "body has no parts"));
        }
        if parent.len() != joint_offset.len() {
            return Err(Error::Dimension {
                what: "joint offsets",
                expected: parent.len(),
                got: joint_offset.len(),
            });
        }
        for (i, p) in parent.iter().enumerate() {
            match (i, p) {
                (0, None) => {}
                (0, Some(_)) => return Err(Error::invalid(Some(0), "parent", "part 0 must be the root")),
                (_, None) => return Err(Error::invalid(Some(i), "parent", "more than one root")),
                (_, Some(p)) if *p >= i => {
                    return Err(Error::invalid(
                        Some(i),
                        "parent",
                        format!("parent {p} does not precede the part (cycle or bad ordering)"),
                    ))
                }
                _ => {}
            }
        }
        if let Some(i) = joint_offset.iter().position(|o| !o.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(Some(i), "joint_offset", "offset is not finite"));
        }
        Ok(Self { parent, joint_offset })
    }

    pub fn part_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, part: usize) -> Option<usize> {
        self.parent[part]
    }

    pub fn joint_offset(&self, part: usize) -> &Vector3<f64> {
        &self.joint_offset[part]
    }

    /// Number of generalized coordinates: 6 for the floating root plus three
    /// Euler angles per joint.
    pub fn dof_count(&self) -> usize {
        6 + 3 * (self.part_count() - 1)
    }

    /// First coordinate index of the three rotation DOFs driving `part`.
    pub fn rotation_dof_start(&self, part: usize) -> usize {
        if part == 0 {
            3
        } else {
            6 + 3 * (part - 1)
        }
    }

    pub fn index_of(&self, dof: Dof) -> usize {
        match dof {
            Dof::Translation(axis) => axis,
            Dof::Rotation { part, axis } => self.rotation_dof_start(part) + axis,
        }
    }

    pub fn dof_at(&self, index: usize) -> Option<Dof> {
        match index {
            i if i < 3 => Some(Dof::Translation(i)),
            i if i < 6 => Some(Dof::Rotation { part: 0, axis: i - 3 }),
            i if i < self.dof_count() => Some(Dof::Rotation {
                part: 1 + (i - 6) / 3,
                axis: (i - 6) % 3,
            }),
            _ => None,
        }
    }

    /// Parts from the root down to and including `part`.
    pub fn chain(&self, part: usize) -> Vec<usize> {
        let mut chain = vec![part];
        let mut p = part;
        while let Some(parent) = self.parent[p] {
            chain.push(parent);
            p = parent;
        }
        chain.reverse();
        chain
    }

    pub fn is_ancestor_or_self(&self, ancestor: usize, part: usize) -> bool {
        let mut p = Some(part);
        while let Some(q) = p {
            if q == ancestor {
                return true;
            }
            p = self.parent[q];
        }
        false
    }

    /// Rest joint positions in world coordinates.
    pub fn rest_joint_positions(&self) -> Vec<Vector3<f64>> {
        let mut pos: Vec<Vector3<f64>> = Vec::with_capacity(self.part_count());
        for i in 0..self.part_count() {
            let base = self.parent[i].map_or_else(Vector3::zeros, |p| pos[p]);
            pos.push(base + self.joint_offset[i]);
        }
        pos
    }

    pub fn dof_names(&self) -> Vec<String> {
        (0..self.dof_count())
            .map(|i| match self.dof_at(i).expect("index in range") {
                Dof::Translation(a) => format!("root_t{}", ["x", "y", "z"][a]),
                Dof::Rotation { part, axis } => format!("part{part}_r{}", ["x", "y", "z"][axis]),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassMode {
    FractionTable,
    UniformDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassConfig {
    pub total_kg: f64,
    pub fractions: Vec<f64>,
    pub mode: MassMode,
    pub density_kg_m3: f64,
    /// Per-part density multiplier for tissue differences (default 1).
    pub density_scale: Vec<f64>,
}

impl MassConfig {
    pub fn uniform_density(parts: usize, density_kg_m3: f64) -> Self {
        Self {
            total_kg: 0.0,
            fractions: Vec::new(),
            mode: MassMode::UniformDensity,
            density_kg_m3,
            density_scale: vec![1.0; parts],
        }
    }

    pub fn fraction_table(total_kg: f64, fractions: Vec<f64>) -> Self {
        let n = fractions.len();
        Self {
            total_kg,
            fractions,
            mode: MassMode::FractionTable,
            density_kg_m3: 1000.0,
            density_scale: vec![1.0; n],
        }
    }
}

/// An articulated body at rest: immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RestBody {
    pub tree: KinematicTree,
    pub meshes: Vec<PartMesh>,
    pub contact_vertices: Vec<Vec<usize>>,
    pub mass: MassConfig,
}

/// One modelled contact point: a vertex of a part mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactPoint {
    pub part: usize,
    pub vertex: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BodyReport {
    pub parts: Vec<MeshReport>,
}

impl BodyReport {
    pub fn all_pass(&self) -> bool {
        self.parts.iter().all(MeshReport::passes)
    }
}

impl RestBody {
    pub fn new(
        tree: KinematicTree,
        meshes: Vec<PartMesh>,
        contact_vertices: Vec<Vec<usize>>,
        mass: MassConfig,
    ) -> Result<Self> {
        let body = Self {
            tree,
            meshes,
            contact_vertices,
            mass,
        };
        body.check()?;
        Ok(body)
    }

    fn check(&self) -> Result<()> {
        let n = self.tree.part_count();
        if self.meshes.len() != n {
            return Err(Error::Dimension {
                what: "part meshes",
                expected: n,
                got: self.meshes.len(),
            });
        }
        if self.contact_vertices.len() != n {
            return Err(Error::Dimension {
                what: "contact vertex lists",
                expected: n,
                got: self.contact_vertices.len(),
            });
        }
        for (i, mesh) in self.meshes.iter().enumerate() {
            if mesh.part_id != i {
                return Err(Error::invalid(Some(i), "id", format!("mesh carries part id {}", mesh.part_id)));
            }
            mesh.check_indices()?;
            if let Some(&v) = self.contact_vertices[i].iter().find(|&&v| v >= mesh.vertices.len()) {
                return Err(Error::invalid(
                    Some(i),
                    "contact_vertices",
                    format!("vertex {v} out of range 0..{}", mesh.vertices.len()),
                ));
            }
        }
        let m = &self.mass;
        match m.mode {
            MassMode::FractionTable => {
                if !(m.total_kg > 0.0 && m.total_kg.is_finite()) {
                    return Err(Error::invalid(None, "mass.total_kg", "total mass must be positive"));
                }
                if m.fractions.len() != n {
                    return Err(Error::invalid(
                        None,
                        "mass.fractions",
                        format!("expected {n} fractions, got {}", m.fractions.len()),
                    ));
                }
                if let Some(i) = m.fractions.iter().position(|f| !(*f > 0.0 && f.is_finite())) {
                    return Err(Error::invalid(Some(i), "mass.fractions", "fraction must be positive"));
                }
                let sum: f64 = m.fractions.iter().sum();
                if (sum - 1.0).abs() > FRACTION_SUM_TOL {
                    return Err(Error::invalid(
                        None,
                        "mass.fractions",
                        format!("fractions sum to {sum}, expected 1"),
                    ));
                }
            }
            MassMode::UniformDensity => {
                if !(m.density_kg_m3 > 0.0 && m.density_kg_m3.is_finite()) {
                    return Err(Error::invalid(None, "mass.density_kg_m3", "density must be positive"));
                }
            }
        }
        if m.density_scale.len() != n {
            return Err(Error::invalid(
                None,
                "mass.density_scale",
                format!("expected {n} entries, got {}", m.density_scale.len()),
            ));
        }
        if let Some(i) = m.density_scale.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(Some(i), "mass.density_scale", "scale must be positive"));
        }
        Ok(())
    }

    pub fn part_count(&self) -> usize {
        self.tree.part_count()
    }

    pub fn dof_count(&self) -> usize {
        self.tree.dof_count()
    }

    /// Contact points in body order (by part, then list order).
    pub fn contact_points(&self) -> Vec<ContactPoint> {
        self.contact_vertices
            .iter()
            .enumerate()
            .flat_map(|(part, verts)| verts.iter().map(move |&vertex| ContactPoint { part, vertex }))
            .collect()
    }

    pub fn contact_count(&self) -> usize {
        self.contact_vertices.iter().map(Vec::len).sum()
    }

    /// Returns a copy with every part mesh closed along its boundary.
    pub fn closed(&self) -> Result<RestBody> {
        let meshes = self.meshes.iter().map(PartMesh::close).collect::<Result<Vec<_>>>()?;
        Ok(RestBody {
            meshes,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> BodyReport {
        BodyReport {
            parts: self.meshes.iter().map(PartMesh::inspect).collect(),
        }
    }

    /// Loads a body JSON file. Parts may reference OBJ meshes by path,
    /// resolved relative to the body file.
    pub fn load(path: &Path) -> Result<RestBody> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: BodyFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: format!("body file {}", path.display()),
            message: e.to_string(),
        })?;
        file.into_body(path.parent())
    }

    pub fn from_json_str(text: &str) -> Result<RestBody> {
        let file: BodyFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "body JSON".into(),
            message: e.to_string(),
        })?;
        file.into_body(None)
    }

    pub fn to_file(&self) -> BodyFile {
        let parts = (0..self.part_count())
            .map(|i| PartFile {
                id: i,
                parent: self.tree.parent(i),
                joint_offset: vec3(self.tree.joint_offset(i)),
                vertices: Some(self.meshes[i].vertices.iter().map(vec3).collect()),
                triangles: Some(self.meshes[i].triangles.clone()),
                mesh_obj: None,
                contact_vertices: self.contact_vertices[i].clone(),
            })
            .collect();
        let m = &self.mass;
        BodyFile {
            parts,
            mass: MassFile {
                total_kg: m.total_kg,
                fractions: m.fractions.clone(),
                mode: m.mode,
                density_kg_m3: m.density_kg_m3,
                density_scale: Some(m.density_scale.clone()),
            },
        }
    }
}

fn vec3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub parts: Vec<PartFile>,
    pub mass: MassFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartFile {
    pub id: usize,
    pub parent: Option<usize>,
    pub joint_offset: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangles: Option<Vec<[usize; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_obj: Option<String>,
    #[serde(default)]
    pub contact_vertices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassFile {
    #[serde(default = "default_total_kg")]
    pub total_kg: f64,
    #[serde(default)]
    pub fractions: Vec<f64>,
    pub mode: MassMode,
    #[serde(default = "default_density")]
    pub density_kg_m3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_scale: Option<Vec<f64>>,
}

fn default_total_kg() -> f64 {
    70.0
}

fn default_density() -> f64 {
    1000.0
}

impl BodyFile {
    pub fn into_body(mut self, base_dir: Option<&Path>) -> Result<RestBody> {
        let n = self.parts.len();
        self.parts.sort_by_key(|p| p.id);
        for (i, p) in self.parts.iter().enumerate() {
            if p.id != i {
                return Err(Error::invalid(
                    Some(p.id),
                    "id",
                    format!("part ids must be exactly 0..{n}"),
                ));
            }
        }
        let tree = KinematicTree::new(
            self.parts.iter().map(|p| p.parent).collect(),
            self.parts.iter().map(|p| Vector3::from(p.joint_offset)).collect(),
        )?;
        let mut meshes = Vec::with_capacity(n);
        let mut contacts = Vec::with_capacity(n);
        for p in self.parts {
            let mesh = match (p.vertices, p.triangles, p.mesh_obj) {
                (Some(v), Some(t), None) => {
                    PartMesh::new(p.id, v.into_iter().map(Vector3::from).collect(), t)
                }
                (None, None, Some(obj)) => {
                    let path = base_dir.map_or_else(|| Path::new(&obj).to_path_buf(), |d| d.join(&obj));
                    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                    parse_obj(p.id, &text)?
                }
                _ => {
                    return Err(Error::invalid(
                        Some(p.id),
                        "vertices",
                        "give either vertices and triangles or mesh_obj",
                    ))
                }
            };
            meshes.push(mesh);
            contacts.push(p.contact_vertices);
        }
        let mass = MassConfig {
            total_kg: self.mass.total_kg,
            fractions: self.mass.fractions,
            mode: self.mass.mode,
            density_kg_m3: self.mass.density_kg_m3,
            density_scale: self.mass.density_scale.unwrap_or_else(|| vec![1.0; n]),
        };
        RestBody::new(tree, meshes, contacts, mass)
    }
}
