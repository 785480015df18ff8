//! Triangle meshes for body parts: edge analysis, boundary closing and
//! watertightness checks.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};

/// Triangles with area below this are reported as degenerate (m²).
pub const DEGENERATE_AREA: f64 = 1e-12;

/// A rest-pose triangle mesh attached rigidly to one body part.
#[derive(Debug, Clone, PartialEq)]
pub struct PartMesh {
    pub part_id: usize,
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Per-mesh result of [`PartMesh::inspect`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshReport {
    pub part_id: usize,
    pub watertight: bool,
    pub winding_consistent: bool,
    pub signed_volume: f64,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub degenerate_triangles: Vec<usize>,
}

impl MeshReport {
    pub fn passes(&self) -> bool {
        self.watertight && self.winding_consistent && self.degenerate_triangles.is_empty()
    }
}

fn undirected(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl PartMesh {
    pub fn new(part_id: usize, vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Self {
        Self {
            part_id,
            vertices,
            triangles,
        }
    }

    /// Checks that every triangle references existing, pairwise distinct vertices.
    pub fn check_indices(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::invalid(
                    Some(self.part_id),
                    "triangles",
                    format!("triangle {t} references a vertex outside 0..{n}"),
                ));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::invalid(
                    Some(self.part_id),
                    "triangles",
                    format!("triangle {t} repeats a vertex index"),
                ));
            }
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid(
                Some(self.part_id),
                "vertices",
                format!("vertex {i} is not finite"),
            ));
        }
        Ok(())
    }

    /// Number of incident triangles per undirected edge.
    pub fn edge_incidence(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *counts.entry(undirected(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    fn directed_edges(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *counts.entry((tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.edge_incidence().values().all(|&c| c == 2)
    }

    /// Volume enclosed by the mesh as a sum of signed tetrahedra with apex at
    /// the coordinate origin. Positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn inspect(&self) -> MeshReport {
        let incidence = self.edge_incidence();
        let boundary_edges = incidence.values().filter(|&&c| c == 1).count();
        let non_manifold_edges = incidence.values().filter(|&&c| c > 2).count();
        let watertight = !self.triangles.is_empty() && boundary_edges == 0 && non_manifold_edges == 0;
        let signed_volume = self.signed_volume();
        // An oriented closed surface uses each directed edge exactly once.
        let oriented = self.directed_edges().values().all(|&c| c == 1);
        let degenerate_triangles = (0..self.triangles.len())
            .filter(|&t| self.triangle_area(t) < DEGENERATE_AREA)
            .collect();
        MeshReport {
            part_id: self.part_id,
            watertight,
            winding_consistent: oriented && signed_volume > 0.0,
            signed_volume,
            boundary_edges,
            non_manifold_edges,
            degenerate_triangles,
        }
    }

    /// Fills every boundary loop with a triangle fan to the loop centroid.
    ///
    /// Existing vertex indices are preserved; one vertex is appended per loop.
    /// A watertight mesh is returned unchanged.
    pub fn close(&self) -> Result<PartMesh> {
        let incidence = self.edge_incidence();
        if let Some((&(a, b), &c)) = incidence.iter().find(|(_, &c)| c > 2) {
            return Err(Error::geometry(
                Some(self.part_id),
                format!("non-manifold edge ({a}, {b}) shared by {c} triangles"),
            ));
        }

        // Boundary edges keep the direction they have in their triangle.
        let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if incidence[&undirected(a, b)] == 1 {
                    outgoing.entry(a).or_default().push(b);
                }
            }
        }
        if outgoing.is_empty() {
            return Ok(self.clone());
        }
        for targets in outgoing.values_mut() {
            targets.sort_unstable_by(|x, y| y.cmp(x));
        }

        let mut closed = self.clone();
        while let Some((&start, _)) = outgoing.iter().find(|(_, v)| !v.is_empty()) {
            let mut loop_edges = Vec::new();
            let mut current = start;
            loop {
                let next = match outgoing.get_mut(&current).and_then(|v| v.pop()) {
                    Some(n) => n,
                    None => {
                        return Err(Error::geometry(
                            Some(self.part_id),
                            format!("boundary loop through vertex {start} does not close"),
                        ))
                    }
                };
                loop_edges.push((current, next));
                current = next;
                if current == start {
                    break;
                }
            }
            let centroid = loop_edges
                .iter()
                .map(|&(a, _)| self.vertices[a])
                .sum::<Vector3<f64>>()
                / loop_edges.len() as f64;
            let apex = closed.vertices.len();
            closed.vertices.push(centroid);
            for (a, b) in loop_edges {
                closed.triangles.push([b, a, apex]);
            }
        }
        Ok(closed)
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> PartMesh {
        PartMesh {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            ..self.clone()
        }
    }

    pub fn transformed(&self, rotation: &nalgebra::Matrix3<f64>, offset: &Vector3<f64>) -> PartMesh {
        PartMesh {
            vertices: self.vertices.iter().map(|v| rotation * v + offset).collect(),
            ..self.clone()
        }
    }
}

/// Parses an ASCII Wavefront OBJ file. Only `v` and `f` records are used;
/// polygons are fan-triangulated and negative (relative) indices are accepted.
pub fn parse_obj(part_id: usize, text: &str) -> Result<PartMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let bad = |line: usize, msg: &str| Error::Parse {
        what: format!("OBJ mesh for part {part_id}"),
        message: format!("line {}: {msg}", line + 1),
    };
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(ln, "invalid vertex coordinate"))?;
                if coords.len() != 3 {
                    return Err(bad(ln, "vertex needs three coordinates"));
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for field in fields {
                    let idx: i64 = field
                        .split('/')
                        .next()
                        .unwrap_or("")
                        .parse()
                        .map_err(|_| bad(ln, "invalid face index"))?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(bad(ln, "face index 0 is not valid"));
                    };
                    if resolved < 0 {
                        return Err(bad(ln, "face index out of range"));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(bad(ln, "face needs at least three vertices"));
                }
                for k in 1..poly.len() - 1 {
                    triangles.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mesh = PartMesh::new(part_id, vertices, triangles);
    mesh.check_indices()?;
    Ok(mesh)
}
