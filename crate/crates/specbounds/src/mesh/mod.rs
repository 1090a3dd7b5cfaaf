//! Closed triangulated surfaces embedded in `R^3`.
//!
//! A [`TriMesh`] is immutable after construction: [`TriMesh::new`] validates
//! the closed-manifold invariants once and every later stage relies on them.

mod generators;
mod implicit;
mod io;

pub use generators::{gen_ellipsoid, gen_icosphere, gen_torus, merge_disjoint};
pub use implicit::{gen_implicit, Polynomial};
pub use io::{load_mesh, load_off, load_obj, save_off, MeshFormat};

use nalgebra::{Matrix3, Point3, Vector3};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Faces whose area falls below `DEGENERATE_AREA_FACTOR * diag^2` are
/// rejected at validation; cotangent weights blow up on slivers.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(ValidationReport),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("zero set touches bbox boundary")]
    ZeroSetTouchesBoundary,
    #[error("empty zero set inside bbox")]
    EmptyZeroSet,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One violated mesh invariant. Validation collects every violation it finds
/// rather than stopping at the first.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IndexOutOfRange { face: usize, index: usize },
    RepeatedVertexInFace { face: usize },
    IsolatedVertex { vertex: usize },
    BoundaryEdge { a: usize, b: usize },
    NonManifoldEdge { a: usize, b: usize, incident: usize },
    InconsistentOrientation { a: usize, b: usize },
    DegenerateFace { face: usize, area: f64 },
    OddEulerCharacteristic { chi: i64 },
    ComponentNotSurface { component: usize, chi: i64 },
    EmptyMesh,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { face, index } => {
                write!(f, "face {face} references out-of-range vertex {index}")
            }
            Violation::RepeatedVertexInFace { face } => {
                write!(f, "face {face} repeats a vertex")
            }
            Violation::IsolatedVertex { vertex } => {
                write!(f, "vertex {vertex} belongs to no face")
            }
            Violation::BoundaryEdge { a, b } => {
                write!(f, "boundary edge ({a}, {b}): only one incident face")
            }
            Violation::NonManifoldEdge { a, b, incident } => {
                write!(f, "non-manifold edge ({a}, {b}): {incident} incident faces")
            }
            Violation::InconsistentOrientation { a, b } => {
                write!(f, "inconsistent orientation across edge ({a}, {b})")
            }
            Violation::DegenerateFace { face, area } => {
                write!(f, "degenerate face {face} with area {area:e}")
            }
            Violation::OddEulerCharacteristic { chi } => {
                write!(f, "odd Euler characteristic {chi}")
            }
            Violation::ComponentNotSurface { component, chi } => {
                write!(f, "component {component} has Euler characteristic {chi} > 2")
            }
            Violation::EmptyMesh => write!(f, "mesh has no faces"),
        }
    }
}

/// Structured rejection: every invariant the candidate mesh violates.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mesh validation failed ({} violations):", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

/// Immutable validated triangulated closed orientable surface in `R^3`.
///
/// Invariants established by [`TriMesh::new`]:
/// - every edge is shared by exactly two faces, with opposite directions
///   (closed, consistently oriented);
/// - every face has positive area and the areas sum to `total_area`;
/// - each connected component has even Euler characteristic `<= 2`.
///
/// Self-intersections are permitted (immersed surfaces); validation is purely
/// combinatorial plus the area threshold.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    total_area: f64,
}

impl TriMesh {
    /// Validates and constructs. Returns a [`ValidationReport`] listing every
    /// violated invariant on failure.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut violations = Vec::new();
        if faces.is_empty() {
            violations.push(Violation::EmptyMesh);
            return Err(MeshError::Invalid(ValidationReport { violations }));
        }

        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= nv {
                    violations.push(Violation::IndexOutOfRange { face: fi, index: v });
                } else {
                    used[v] = true;
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                violations.push(Violation::RepeatedVertexInFace { face: fi });
            }
        }
        if !violations.is_empty() {
            // Index errors make the remaining checks meaningless.
            return Err(MeshError::Invalid(ValidationReport { violations }));
        }
        for (v, &u) in used.iter().enumerate() {
            if !u {
                violations.push(Violation::IsolatedVertex { vertex: v });
            }
        }

        // Directed-edge census: a closed consistently oriented mesh has every
        // directed edge exactly once and its reverse exactly once.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for f in &faces {
            for e in 0..3 {
                *directed.entry((f[e], f[(e + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut undirected_seen: HashMap<(usize, usize), ()> = HashMap::new();
        for (&(a, b), &cnt) in &directed {
            let key = (a.min(b), a.max(b));
            if undirected_seen.insert(key, ()).is_some() {
                continue;
            }
            let rev = directed.get(&(b, a)).copied().unwrap_or(0);
            let incident = cnt + rev;
            match (cnt, rev) {
                (1, 1) => {}
                (1, 0) | (0, 1) => violations.push(Violation::BoundaryEdge { a: key.0, b: key.1 }),
                _ if incident == 2 => {
                    violations.push(Violation::InconsistentOrientation { a: key.0, b: key.1 })
                }
                _ => violations.push(Violation::NonManifoldEdge { a: key.0, b: key.1, incident }),
            }
        }

        // Areas come after topology so the degeneracy threshold can use the
        // bounding box of the full vertex set.
        let (lo, hi) = bounding_box_of(&vertices);
        let diag = (hi - lo).norm();
        let area_floor = DEGENERATE_AREA_FACTOR * diag * diag;
        let mut face_areas = Vec::with_capacity(faces.len());
        let mut total_area = 0.0;
        for (fi, f) in faces.iter().enumerate() {
            let a = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if !(a > area_floor) {
                violations.push(Violation::DegenerateFace { face: fi, area: a });
            }
            face_areas.push(a);
            total_area += a;
        }

        let chi = nv as i64 - (undirected_seen.len() as i64) + faces.len() as i64;
        if chi.rem_euclid(2) != 0 {
            violations.push(Violation::OddEulerCharacteristic { chi });
        }

        // Per-component Euler characteristic: each component must look like a
        // closed orientable surface (chi even, <= 2). The total can exceed 2
        // when the mesh has several components.
        if violations.is_empty() {
            let comp = components(nv, &faces);
            for c in 0..comp.count {
                let chi_c = comp.chi[c];
                if chi_c > 2 || chi_c.rem_euclid(2) != 0 {
                    violations.push(Violation::ComponentNotSurface { component: c, chi: chi_c });
                }
            }
        }

        if violations.is_empty() {
            Ok(TriMesh { vertices, faces, face_areas, total_area })
        } else {
            Err(MeshError::Invalid(ValidationReport { violations }))
        }
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Total surface area; this is `Vol(M)` for a surface.
    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        // Closed manifold: 2E = 3F.
        3 * self.faces.len() / 2
    }

    /// Dimension of the ambient Euclidean space.
    pub fn ambient_dim(&self) -> usize {
        3
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    pub fn face_points(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_centroid(&self, f: usize) -> Point3<f64> {
        let [a, b, c] = self.face_points(f);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Unit normal of face `f` (right-handed from the stored winding).
    pub fn face_unit_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_points(f);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        bounding_box_of(&self.vertices)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Applies `x -> linear * x + translation` and revalidates.
    pub fn transformed(&self, linear: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<Self, MeshError> {
        let vertices = self
            .vertices
            .iter()
            .map(|p| Point3::from(linear * p.coords + translation))
            .collect();
        TriMesh::new(vertices, self.faces.clone())
    }

    pub fn translated(&self, t: &Vector3<f64>) -> Self {
        // Translation preserves every validated invariant and all areas.
        let vertices = self.vertices.iter().map(|p| p + t).collect();
        TriMesh {
            vertices,
            faces: self.faces.clone(),
            face_areas: self.face_areas.clone(),
            total_area: self.total_area,
        }
    }

    pub fn scaled(&self, t: f64) -> Result<Self, MeshError> {
        if !(t > 0.0) {
            return Err(MeshError::Degenerate(format!("scale factor {t} must be positive")));
        }
        let vertices = self.vertices.iter().map(|p| Point3::from(p.coords * t)).collect();
        let face_areas: Vec<f64> = self.face_areas.iter().map(|a| a * t * t).collect();
        let total_area = face_areas.iter().sum();
        Ok(TriMesh { vertices, faces: self.faces.clone(), face_areas, total_area })
    }
}

/// Area, topology and first moments of a validated mesh.
#[derive(Debug, Clone)]
pub struct MeshStats {
    pub area: f64,
    /// Sum of the genera of the connected components.
    pub genus: usize,
    /// Area-weighted centroid: exact surface integral of `x` divided by area.
    pub barycenter: Point3<f64>,
    pub bounding_box: (Point3<f64>, Point3<f64>),
    pub euler_char: i64,
    pub components: usize,
}

/// Computes [`MeshStats`]. Genus comes purely from the Euler characteristic.
pub fn mesh_stats(mesh: &TriMesh) -> MeshStats {
    let comp = components(mesh.vertex_count(), mesh.faces());
    let chi = mesh.euler_characteristic();
    // Per component chi_c = 2 - 2 genus_c; both are validated invariants.
    let genus = comp.count as i64 - chi / 2;
    debug_assert!(genus >= 0);

    let mut weighted = Vector3::zeros();
    for (f, &area) in mesh.face_areas().iter().enumerate() {
        weighted += mesh.face_centroid(f).coords * area;
    }
    MeshStats {
        area: mesh.total_area(),
        genus: genus as usize,
        barycenter: Point3::from(weighted / mesh.total_area()),
        bounding_box: mesh.bounding_box(),
        euler_char: chi,
        components: comp.count,
    }
}

/// Translates the barycenter to the origin and dilates to unit area.
/// The result is a translate + dilation of the input, nothing else.
pub fn recenter_unit_area(mesh: &TriMesh) -> TriMesh {
    let stats = mesh_stats(mesh);
    let centered = mesh.translated(&(-stats.barycenter.coords));
    centered
        .scaled(1.0 / stats.area.sqrt())
        .expect("area of a valid mesh is positive")
}

pub(crate) fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub(crate) fn bounding_box_of(points: &[Point3<f64>]) -> (Point3<f64>, Point3<f64>) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

struct ComponentInfo {
    count: usize,
    /// Euler characteristic per component.
    chi: Vec<i64>,
}

/// Connected components of the face-edge graph with per-component V - E + F.
fn components(nv: usize, faces: &[[usize; 3]]) -> ComponentInfo {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for f in faces {
        let ra = find(&mut parent, f[0]);
        let rb = find(&mut parent, f[1]);
        let rc = find(&mut parent, f[2]);
        parent[rb] = ra;
        parent[rc] = find(&mut parent, ra);
    }
    let mut root_to_comp: HashMap<usize, usize> = HashMap::new();
    let mut comp_of_vertex = vec![usize::MAX; nv];
    for v in 0..nv {
        let r = find(&mut parent, v);
        let next = root_to_comp.len();
        let c = *root_to_comp.entry(r).or_insert(next);
        comp_of_vertex[v] = c;
    }
    let count = root_to_comp.len();
    let mut v_cnt = vec![0i64; count];
    let mut f_cnt = vec![0i64; count];
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for v in 0..nv {
        v_cnt[comp_of_vertex[v]] += 1;
    }
    for f in faces {
        f_cnt[comp_of_vertex[f[0]]] += 1;
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            edges.insert((a.min(b), a.max(b)), comp_of_vertex[a]);
        }
    }
    let mut e_cnt = vec![0i64; count];
    for (_, c) in edges {
        e_cnt[c] += 1;
    }
    let chi = (0..count).map(|c| v_cnt[c] - e_cnt[c] + f_cnt[c]).collect();
    ComponentInfo { count, chi }
}

#[cfg(test)]
pub(crate) mod tests;
