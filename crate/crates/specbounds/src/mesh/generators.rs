//! Canonical test surfaces.

use super::{MeshError, TriMesh};
use nalgebra::{Matrix3, Point3, Vector3};
use std::collections::HashMap;

/// Geodesic sphere: subdivided icosahedron with all vertices projected to
/// the sphere of the given radius. `F = 20 * 4^subdivisions`, genus 0.
pub fn gen_icosphere(subdivisions: u32, radius: f64) -> Result<TriMesh, MeshError> {
    if subdivisions > 9 {
        return Err(MeshError::Degenerate(format!(
            "subdivisions {subdivisions} > 9 (memory guard)"
        )));
    }
    if !(radius > 0.0) {
        return Err(MeshError::Degenerate(format!("radius {radius} must be positive")));
    }

    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(Vector3::new(x, y, z).normalize() * radius))
    .collect();

    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mids = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[e] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a].coords + vertices[b].coords) / 2.0;
                    vertices.push(Point3::from(m.normalize() * radius));
                    vertices.len() - 1
                });
            }
            next_faces.push([f[0], mids[0], mids[2]]);
            next_faces.push([f[1], mids[1], mids[0]]);
            next_faces.push([f[2], mids[2], mids[1]]);
            next_faces.push([mids[0], mids[1], mids[2]]);
        }
        faces = next_faces;
    }

    TriMesh::new(vertices, faces)
}

/// Torus of revolution with major radius `big_r`, tube radius `small_r`,
/// `nu` segments around the axis and `nv` around the tube. Genus 1; total
/// area tends to `4 pi^2 R r` under refinement.
pub fn gen_torus(big_r: f64, small_r: f64, nu: usize, nv: usize) -> Result<TriMesh, MeshError> {
    if !(big_r > small_r && small_r > 0.0) {
        return Err(MeshError::Degenerate(format!(
            "need R > r > 0, got R = {big_r}, r = {small_r}"
        )));
    }
    if nu < 3 || nv < 3 {
        return Err(MeshError::Degenerate(format!("need nu, nv >= 3, got {nu}, {nv}")));
    }

    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let theta = 2.0 * std::f64::consts::PI * (i as f64) / (nu as f64);
        for j in 0..nv {
            let phi = 2.0 * std::f64::consts::PI * (j as f64) / (nv as f64);
            let ring = big_r + small_r * phi.cos();
            vertices.push(Point3::new(ring * theta.cos(), ring * theta.sin(), small_r * phi.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, faces)
}

/// Ellipsoid with semi-axes `(a, b, c)`: an anisotropically scaled icosphere.
pub fn gen_ellipsoid(subdivisions: u32, a: f64, b: f64, c: f64) -> Result<TriMesh, MeshError> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(MeshError::Degenerate(format!("semi-axes must be positive, got {a}, {b}, {c}")));
    }
    let sphere = gen_icosphere(subdivisions, 1.0)?;
    sphere.transformed(&Matrix3::from_diagonal(&Vector3::new(a, b, c)), &Vector3::zeros())
}

/// Disjoint union of two meshes. Each component is validated separately, so
/// the result is a valid (disconnected) closed surface.
pub fn merge_disjoint(a: &TriMesh, b: &TriMesh) -> Result<TriMesh, MeshError> {
    let offset = a.vertex_count();
    let mut vertices = a.vertices().to_vec();
    vertices.extend_from_slice(b.vertices());
    let mut faces = a.faces().to_vec();
    faces.extend(b.faces().iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
    TriMesh::new(vertices, faces)
}
