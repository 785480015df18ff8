//! Closed and open reference shapes with outward winding.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::mesh::PartMesh;

/// Axis-aligned box spanning `min..max`.
pub fn cuboid(part_id: usize, min: Vector3<f64>, max: Vector3<f64>) -> PartMesh {
    let corner = |i: usize| {
        Vector3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices = (0..8).map(corner).collect();
    let triangles = vec![
        [0, 2, 1], [1, 2, 3], // z = min
        [4, 5, 6], [5, 7, 6], // z = max
        [0, 1, 4], [1, 5, 4], // y = min
        [2, 6, 3], [3, 6, 7], // y = max
        [0, 4, 2], [2, 4, 6], // x = min
        [1, 3, 5], [3, 7, 5], // x = max
    ];
    PartMesh::new(part_id, vertices, triangles)
}

/// Cube of side `side` centred at `center`.
pub fn cube(part_id: usize, center: Vector3<f64>, side: f64) -> PartMesh {
    let h = Vector3::repeat(side / 2.0);
    cuboid(part_id, center - h, center + h)
}

pub fn tetrahedron(part_id: usize, corners: [Vector3<f64>; 4]) -> PartMesh {
    let mut triangles = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    let [a, b, c, d] = corners;
    if (b - a).dot(&(c - a).cross(&(d - a))) < 0.0 {
        for t in &mut triangles {
            t.swap(1, 2);
        }
    }
    PartMesh::new(part_id, corners.to_vec(), triangles)
}

/// Icosahedron refined `subdivisions` times, vertices projected onto the sphere.
pub fn icosphere(part_id: usize, center: Vector3<f64>, radius: f64, subdivisions: usize) -> PartMesh {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, p, 0.0), (1.0, p, 0.0), (-1.0, -p, 0.0), (1.0, -p, 0.0),
        (0.0, -1.0, p), (0.0, 1.0, p), (0.0, -1.0, -p), (0.0, 1.0, -p),
        (p, 0.0, -1.0), (p, 0.0, 1.0), (-p, 0.0, -1.0), (-p, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut refined = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            refined.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = refined;
    }
    let vertices = vertices.into_iter().map(|v| center + v * radius).collect();
    PartMesh::new(part_id, vertices, triangles)
}

/// Side wall of a cylinder along +z from `z = 0` to `z = height`, without caps.
pub fn open_cylinder(part_id: usize, radius: f64, height: f64, segments: usize) -> PartMesh {
    let mut vertices = Vec::with_capacity(2 * segments);
    for k in 0..segments {
        let a = std::f64::consts::TAU * k as f64 / segments as f64;
        vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), 0.0));
        vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), height));
    }
    let mut triangles = Vec::with_capacity(2 * segments);
    for k in 0..segments {
        let (b0, t0) = (2 * k, 2 * k + 1);
        let (b1, t1) = (2 * ((k + 1) % segments), 2 * ((k + 1) % segments) + 1);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
    }
    PartMesh::new(part_id, vertices, triangles)
}
