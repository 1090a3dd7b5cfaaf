//! Bounding volume hierarchy over mesh triangles.
//!
//! Supports the two query shapes the estimators need: all intersections of
//! an (infinite) line with the surface, and the exact area of the surface
//! inside a Euclidean ball. Nodes carry their subtree area so that a ball
//! query can take whole subtrees that are strictly inside without visiting
//! their triangles.

use super::ball::triangle_ball_area;
use crate::mesh::TriMesh;
use nalgebra::{Point3, Vector3};

#[derive(Debug, Clone, Copy)]
pub struct LineHit {
    pub face: usize,
    pub t: f64,
    /// Barycentric weights of the hit in its face, `(w_a, w_b, w_c)`.
    pub bary: (f64, f64, f64),
}

#[derive(Debug, Clone)]
struct Node {
    lo: Point3<f64>,
    hi: Point3<f64>,
    /// Total triangle area below this node.
    area: f64,
    /// Leaf: range into `order`. Internal: `children` indices.
    start: usize,
    len: usize,
    left: usize,
    right: usize,
}

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    tris: Vec<[Point3<f64>; 3]>,
    areas: Vec<f64>,
    total_area: f64,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Bvh {
        let nf = mesh.face_count();
        let tris: Vec<[Point3<f64>; 3]> = (0..nf).map(|f| mesh.face_points(f)).collect();
        let areas = mesh.face_areas().to_vec();
        let centroids: Vec<Point3<f64>> = (0..nf).map(|f| mesh.face_centroid(f)).collect();
        let mut order: Vec<usize> = (0..nf).collect();
        let mut nodes = Vec::with_capacity(2 * nf / LEAF_SIZE + 2);
        build_node(&tris, &areas, &centroids, &mut order, 0, nf, &mut nodes);
        Bvh { nodes, order, tris, areas, total_area: mesh.total_area() }
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// All intersections of the infinite line `origin + t * dir` with the
    /// surface. `dir` need not be normalized.
    pub fn line_hits(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Vec<LineHit> {
        let mut hits = Vec::new();
        let inv = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        self.line_hits_rec(0, origin, dir, &inv, &mut hits);
        hits
    }

    fn line_hits_rec(
        &self,
        node: usize,
        origin: &Point3<f64>,
        dir: &Vector3<f64>,
        inv_dir: &Vector3<f64>,
        hits: &mut Vec<LineHit>,
    ) {
        let nd = &self.nodes[node];
        if !line_hits_aabb(origin, inv_dir, &nd.lo, &nd.hi) {
            return;
        }
        if nd.len > 0 {
            for &f in &self.order[nd.start..nd.start + nd.len] {
                if let Some((t, u, v)) = line_triangle(origin, dir, &self.tris[f]) {
                    hits.push(LineHit { face: f, t, bary: (1.0 - u - v, u, v) });
                }
            }
        } else {
            self.line_hits_rec(nd.left, origin, dir, inv_dir, hits);
            self.line_hits_rec(nd.right, origin, dir, inv_dir, hits);
        }
    }

    /// Exact area of `mesh ∩ B(center, r)` up to roundoff.
    pub fn ball_area(&self, center: &Point3<f64>, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.ball_area_rec(0, center, r)
    }

    fn ball_area_rec(&self, node: usize, center: &Point3<f64>, r: f64) -> f64 {
        let nd = &self.nodes[node];
        let dmin = aabb_dist_min(center, &nd.lo, &nd.hi);
        if dmin >= r {
            return 0.0;
        }
        let dmax = aabb_dist_max(center, &nd.lo, &nd.hi);
        if dmax <= r {
            return nd.area;
        }
        if nd.len > 0 {
            let mut acc = 0.0;
            for &f in &self.order[nd.start..nd.start + nd.len] {
                acc += triangle_ball_area(&self.tris[f], center, r);
            }
            acc
        } else {
            self.ball_area_rec(nd.left, center, r) + self.ball_area_rec(nd.right, center, r)
        }
    }

    pub fn triangle(&self, face: usize) -> &[Point3<f64>; 3] {
        &self.tris[face]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        self.areas[face]
    }
}

fn build_node(
    tris: &[[Point3<f64>; 3]],
    areas: &[f64],
    centroids: &[Point3<f64>],
    order: &mut [usize],
    start: usize,
    _total: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut clo = lo;
    let mut chi = hi;
    let mut area = 0.0;
    for &f in order.iter() {
        for p in &tris[f] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        for a in 0..3 {
            clo[a] = clo[a].min(centroids[f][a]);
            chi[a] = chi[a].max(centroids[f][a]);
        }
        area += areas[f];
    }

    let id = nodes.len();
    nodes.push(Node { lo, hi, area, start, len: order.len(), left: 0, right: 0 });
    if order.len() <= LEAF_SIZE {
        return id;
    }

    let ext = chi - clo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis].partial_cmp(&centroids[b][axis]).unwrap().then(a.cmp(&b))
    });
    if ext[axis] == 0.0 {
        // All centroids coincide; keep the leaf rather than recurse forever.
        return id;
    }

    let (left_slice, right_slice) = order.split_at_mut(mid);
    let left = build_node(tris, areas, centroids, left_slice, start, 0, nodes);
    let right = build_node(tris, areas, centroids, right_slice, start + mid, 0, nodes);
    nodes[id].len = 0;
    nodes[id].left = left;
    nodes[id].right = right;
    id
}

fn line_hits_aabb(origin: &Point3<f64>, inv_dir: &Vector3<f64>, lo: &Point3<f64>, hi: &Point3<f64>) -> bool {
    // Slab test over the full line (t unbounded on both sides).
    let mut tmin = f64::NEG_INFINITY;
    let mut tmax = f64::INFINITY;
    for a in 0..3 {
        if inv_dir[a].is_finite() {
            let t0 = (lo[a] - origin[a]) * inv_dir[a];
            let t1 = (hi[a] - origin[a]) * inv_dir[a];
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            tmin = tmin.max(t0);
            tmax = tmax.min(t1);
            if tmin > tmax {
                return false;
            }
        } else if origin[a] < lo[a] || origin[a] > hi[a] {
            return false;
        }
    }
    true
}

/// Moller-Trumbore for the full line (no `t >= 0` restriction). Returns
/// `(t, u, v)`; hits with barycentrics marginally outside `[0, 1]` are
/// reported so callers can apply their own edge-proximity policy.
fn line_triangle(origin: &Point3<f64>, dir: &Vector3<f64>, tri: &[Point3<f64>; 3]) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - tri[0];
    let u = tvec.dot(&pvec) * inv_det;
    if !(-1e-9..=1.0 + 1e-9).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < -1e-9 || u + v > 1.0 + 1e-9 {
        return None;
    }
    let t = e2.dot(&qvec) * inv_det;
    Some((t, u, v))
}

fn aabb_dist_min(p: &Point3<f64>, lo: &Point3<f64>, hi: &Point3<f64>) -> f64 {
    let mut d2 = 0.0;
    for a in 0..3 {
        let d = if p[a] < lo[a] {
            lo[a] - p[a]
        } else if p[a] > hi[a] {
            p[a] - hi[a]
        } else {
            0.0
        };
        d2 += d * d;
    }
    d2.sqrt()
}

fn aabb_dist_max(p: &Point3<f64>, lo: &Point3<f64>, hi: &Point3<f64>) -> f64 {
    let mut d2 = 0.0;
    for a in 0..3 {
        let d = (p[a] - lo[a]).abs().max((p[a] - hi[a]).abs());
        d2 += d * d;
    }
    d2.sqrt()
}
