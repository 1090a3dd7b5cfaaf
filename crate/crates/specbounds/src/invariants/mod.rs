//! Extrinsic invariants of an embedded surface: intersection index of lines
//! with the surface, volume concentration, shadow (projection) areas and
//! their average over directions, moment of inertia, and the rearrangement
//! comparison for planar cell sets.
//!
//! All estimators are deterministic functions of `(mesh, seed, counts)`:
//! parallel workers draw from per-sample RNG streams and reductions are
//! order-independent, so repeated runs agree bit for bit.

mod ball;
mod bvh;

pub use ball::{polygon_circle_area, triangle_ball_area};
pub use bvh::{Bvh, LineHit};

use crate::mesh::{mesh_stats, TriMesh};
use crate::report::json_f64;
use crate::rng::stream;
use nalgebra::{Point3, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

const DOMAIN_LINES: u64 = 0x11;
const DOMAIN_CENTERS: u64 = 0x22;
const DOMAIN_PLANES: u64 = 0x33;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("n_lines must be at least 1")]
    NoSamples,
    #[error("all line samples were rejected (eps too aggressive?)")]
    AllSamplesRejected,
    #[error("degenerate direction (norm {0:e})")]
    DegenerateDirection(f64),
    #[error("mesh barycenter is {0:e} away from the origin; recenter first")]
    NotRecentered(f64),
    #[error("empty cell set")]
    EmptyCellSet,
    #[error("grid resolution {0} below minimum 64")]
    GridTooCoarse(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// Extrinsic estimates consumed by the bound checks, with the sampling
/// metadata needed to reproduce them.
#[derive(Debug, Clone)]
pub struct GeometricInvariants {
    /// Largest observed transversal line intersection count (a certified
    /// lower bound for the intersection index).
    pub i_hat: usize,
    /// Crossing count -> number of sampled lines with that count.
    pub i_histogram: BTreeMap<usize, usize>,
    /// Largest observed `area(mesh ∩ B(x, r)) / r^2`.
    pub l_hat: f64,
    /// Probe attaining `l_hat`.
    pub l_witness: (Point3<f64>, f64),
    /// `∫_M |x|^2` over the recentered mesh.
    pub moment_of_inertia: f64,
    pub seed: u64,
    pub n_lines: usize,
    pub n_centers: usize,
    pub n_radii: usize,
    /// Line samples that exhausted their retry budget.
    pub rejected_lines: usize,
}

impl GeometricInvariants {
    pub fn to_json(&self) -> String {
        let mut hist = String::from("{");
        for (i, (k, v)) in self.i_histogram.iter().enumerate() {
            if i > 0 {
                hist.push(',');
            }
            let _ = write!(hist, "\"{k}\":{v}");
        }
        hist.push('}');
        format!(
            "{{\"i_hat\":{},\"i_histogram\":{},\"l_hat\":{},\"l_witness\":{{\"center\":[{},{},{}],\"radius\":{}}},\"moment_of_inertia\":{},\"seed\":{},\"n_lines\":{},\"n_centers\":{},\"n_radii\":{},\"rejected_lines\":{}}}",
            self.i_hat,
            hist,
            json_f64(self.l_hat),
            json_f64(self.l_witness.0.x),
            json_f64(self.l_witness.0.y),
            json_f64(self.l_witness.0.z),
            json_f64(self.l_witness.1),
            json_f64(self.moment_of_inertia),
            self.seed,
            self.n_lines,
            self.n_centers,
            self.n_radii,
            self.rejected_lines,
        )
    }
}

/// Shadow of the surface on the plane orthogonal to `direction`.
#[derive(Debug, Clone)]
pub struct ShadowResult {
    pub direction: Vector3<f64>,
    /// Area of the projection counted once (raster estimate).
    pub shadow_area: f64,
    /// `∫_M |cos|` of the projection: each point counted with multiplicity.
    pub signed_mass: f64,
    pub grid_resolution: usize,
    /// Conservative raster error: total projected edge length x cell size.
    pub error_bound: f64,
}

impl ShadowResult {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"direction\":[{},{},{}],\"shadow_area\":{},\"signed_mass\":{},\"grid_resolution\":{},\"error_bound\":{}}}",
            json_f64(self.direction.x),
            json_f64(self.direction.y),
            json_f64(self.direction.z),
            json_f64(self.shadow_area),
            json_f64(self.signed_mass),
            self.grid_resolution,
            json_f64(self.error_bound),
        )
    }
}

#[derive(Debug, Clone)]
pub struct IndexEstimate {
    pub i_hat: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub rejected: usize,
}

/// Samples `n_lines` uniform lines (direction uniform on the sphere, offset
/// uniform in the projected bounding disk) and counts transversal crossings
/// with the surface.
///
/// A sample is redrawn when a hit comes within `eps` of a triangle edge,
/// when a crossing is tangential (`|dir . normal| < eps / diag`), or when
/// the total count is odd -- an odd count against a closed surface means a
/// grazing crossing slipped through the other two tests.
pub fn intersection_index(
    mesh: &TriMesh,
    n_lines: usize,
    seed: u64,
    eps: Option<f64>,
) -> Result<IndexEstimate, InvariantError> {
    let bvh = Bvh::build(mesh);
    intersection_index_with(mesh, &bvh, n_lines, seed, eps)
}

pub fn intersection_index_with(
    mesh: &TriMesh,
    bvh: &Bvh,
    n_lines: usize,
    seed: u64,
    eps: Option<f64>,
) -> Result<IndexEstimate, InvariantError> {
    if n_lines == 0 {
        return Err(InvariantError::NoSamples);
    }
    let (lo, hi) = mesh.bounding_box();
    let diag = (hi - lo).norm();
    let center = Point3::from((lo.coords + hi.coords) / 2.0);
    let eps_len = eps.unwrap_or(1e-9 * diag);
    let eps_ang = (eps_len / diag).max(1e-14);
    let disk_radius = diag / 2.0;

    let counts: Vec<Option<usize>> = (0..n_lines)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, DOMAIN_LINES, i as u64);
            'attempt: for _ in 0..1000 {
                let dir = random_unit(&mut rng);
                let (e1, e2) = orthonormal_complement(&dir);
                let radius = disk_radius * rng.gen::<f64>().sqrt();
                let angle = 2.0 * PI * rng.gen::<f64>();
                let origin = center + e1 * (radius * angle.cos()) + e2 * (radius * angle.sin());

                let hits = bvh.line_hits(&origin, &dir);
                for h in &hits {
                    let tri = bvh.triangle(h.face);
                    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
                    let n_norm = n.norm();
                    if (dir.dot(&n) / n_norm).abs() < eps_ang {
                        continue 'attempt;
                    }
                    let area2 = n_norm; // twice the face area
                    let (wa, wb, wc) = h.bary;
                    let d_bc = wa * area2 / (tri[2] - tri[1]).norm();
                    let d_ca = wb * area2 / (tri[0] - tri[2]).norm();
                    let d_ab = wc * area2 / (tri[1] - tri[0]).norm();
                    if d_bc.min(d_ca).min(d_ab) < eps_len {
                        continue 'attempt;
                    }
                }
                if hits.len() % 2 == 1 {
                    continue 'attempt;
                }
                return Some(hits.len());
            }
            None
        })
        .collect();

    let mut histogram = BTreeMap::new();
    let mut rejected = 0usize;
    for c in counts {
        match c {
            Some(k) => *histogram.entry(k).or_insert(0) += 1,
            None => rejected += 1,
        }
    }
    if rejected == n_lines {
        return Err(InvariantError::AllSamplesRejected);
    }
    let i_hat = histogram.keys().copied().max().unwrap_or(0);
    Ok(IndexEstimate { i_hat, histogram, rejected })
}

/// Exact area of `mesh ∩ B(center, r)`.
pub fn ball_area(mesh: &TriMesh, center: &Point3<f64>, r: f64) -> f64 {
    Bvh::build(mesh).ball_area(center, r)
}

#[derive(Debug, Clone)]
pub struct ConcentrationEstimate {
    pub l_hat: f64,
    pub witness: (Point3<f64>, f64),
}

/// Largest observed `area(mesh ∩ B(x, r)) / r^2` over the probe set:
/// all mesh vertices, the barycenter, the origin and `n_centers` random
/// surface points, against a geometric radius grid from `diag / 1000` to
/// `diag`.
///
/// The probe maximum is a lower bound for the true concentration constant;
/// the returned witness attains it.
pub fn concentration(
    mesh: &TriMesh,
    n_centers: usize,
    n_radii: usize,
    seed: u64,
) -> ConcentrationEstimate {
    let bvh = Bvh::build(mesh);
    concentration_with(mesh, &bvh, n_centers, n_radii, seed)
}

pub fn concentration_with(
    mesh: &TriMesh,
    bvh: &Bvh,
    n_centers: usize,
    n_radii: usize,
    seed: u64,
) -> ConcentrationEstimate {
    let stats = mesh_stats(mesh);
    let (lo, hi) = stats.bounding_box;
    let diag = (hi - lo).norm();
    let n_radii = n_radii.max(1);
    let radii: Vec<f64> = if n_radii == 1 {
        vec![diag]
    } else {
        (0..n_radii)
            .map(|j| diag / 1000.0 * 1000f64.powf(j as f64 / (n_radii - 1) as f64))
            .collect()
    };

    let mut probes: Vec<Point3<f64>> = mesh.vertices().to_vec();
    probes.push(stats.barycenter);
    probes.push(Point3::origin());
    probes.extend(random_surface_points(mesh, n_centers, seed));

    let total = mesh.total_area();
    let best = probes
        .par_iter()
        .map(|&p| {
            let far = farthest_corner_distance(&p, &lo, &hi);
            let mut local: (f64, f64) = (f64::NEG_INFINITY, radii[0]);
            for &r in &radii {
                // No larger radius at this probe can beat the running max.
                if total / (r * r) < local.0 {
                    break;
                }
                let area = if r >= far { total } else { bvh.ball_area(&p, r) };
                let ratio = area / (r * r);
                if ratio > local.0 {
                    local = (ratio, r);
                }
                if r >= far {
                    break;
                }
            }
            (local.0, p, local.1)
        })
        .collect::<Vec<_>>()
        .into_iter()
        // Sequential reduction keeps the witness deterministic under ties.
        .fold((f64::NEG_INFINITY, Point3::origin(), 0.0), |acc, cand| {
            if cand.0 > acc.0 {
                cand
            } else {
                acc
            }
        });

    ConcentrationEstimate { l_hat: best.0, witness: (best.1, best.2) }
}

/// Shadow of the surface on the plane orthogonal to `direction`:
/// `signed_mass` is the exact sum of unsigned projected triangle areas,
/// `shadow_area` rasterizes the union of projected triangles on a
/// `grid_resolution`-squared grid over the projection's bounding square and
/// counts cells whose center is covered at least once.
pub fn shadow(
    mesh: &TriMesh,
    direction: &Vector3<f64>,
    grid_resolution: usize,
) -> Result<ShadowResult, InvariantError> {
    if grid_resolution < 64 {
        return Err(InvariantError::GridTooCoarse(grid_resolution));
    }
    let norm = direction.norm();
    if norm < 1e-300 {
        return Err(InvariantError::DegenerateDirection(norm));
    }
    let d = direction / norm;
    let (e1, e2) = orthonormal_complement(&d);

    let proj: Vec<Vector2<f64>> = mesh
        .vertices()
        .iter()
        .map(|p| Vector2::new(p.coords.dot(&e1), p.coords.dot(&e2)))
        .collect();

    let mut lo = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &proj {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let side = (hi.x - lo.x).max(hi.y - lo.y).max(1e-300);
    let cell = side / grid_resolution as f64;
    let origin = Vector2::new(
        (lo.x + hi.x) / 2.0 - side / 2.0,
        (lo.y + hi.y) / 2.0 - side / 2.0,
    );

    let mut covered = vec![false; grid_resolution * grid_resolution];
    let mut signed_mass = 0.0;
    let mut edge_len = 0.0;
    for f in mesh.faces() {
        let (a, b, c) = (proj[f[0]], proj[f[1]], proj[f[2]]);
        let s = (b - a).perp(&(c - a));
        signed_mass += 0.5 * s.abs();
        edge_len += 0.5 * ((b - a).norm() + (c - b).norm() + (a - c).norm());
        if s == 0.0 {
            continue;
        }
        rasterize_triangle(&a, &b, &c, s.signum(), &origin, cell, grid_resolution, &mut covered);
    }
    let shadow_area = covered.iter().filter(|&&x| x).count() as f64 * cell * cell;
    Ok(ShadowResult {
        direction: d,
        shadow_area,
        signed_mass,
        grid_resolution,
        error_bound: edge_len * cell,
    })
}

#[allow(clippy::too_many_arguments)]
fn rasterize_triangle(
    a: &Vector2<f64>,
    b: &Vector2<f64>,
    c: &Vector2<f64>,
    orient: f64,
    origin: &Vector2<f64>,
    cell: f64,
    res: usize,
    covered: &mut [bool],
) {
    let min_x = a.x.min(b.x).min(c.x);
    let max_x = a.x.max(b.x).max(c.x);
    let min_y = a.y.min(b.y).min(c.y);
    let max_y = a.y.max(b.y).max(c.y);
    let i0 = (((min_x - origin.x) / cell - 0.5).floor().max(0.0)) as usize;
    let j0 = (((min_y - origin.y) / cell - 0.5).floor().max(0.0)) as usize;
    let i1 = ((((max_x - origin.x) / cell - 0.5).ceil()) as usize).min(res.saturating_sub(1));
    let j1 = ((((max_y - origin.y) / cell - 0.5).ceil()) as usize).min(res.saturating_sub(1));
    for j in j0..=j1 {
        let py = origin.y + (j as f64 + 0.5) * cell;
        for i in i0..=i1 {
            let px = origin.x + (i as f64 + 0.5) * cell;
            let p = Vector2::new(px, py);
            let w0 = (b - a).perp(&(p - a)) * orient;
            let w1 = (c - b).perp(&(p - b)) * orient;
            let w2 = (a - c).perp(&(p - c)) * orient;
            if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                covered[j * res + i] = true;
            }
        }
    }
}

/// Monte Carlo average of the shadow area over Haar-random projection
/// planes, compared to the projection lemma's lower bound
/// `(2 / i_hat) * (Vol(B^2) / Vol(S^2)) * area`.
#[derive(Debug, Clone)]
pub struct GrassmannAverage {
    pub avg_shadow: f64,
    pub lemma_rhs: f64,
    /// Relative three-sigma standard error of the mean.
    pub mc_error: f64,
    pub pass: bool,
    pub n_planes: usize,
    pub i_hat_used: usize,
    /// Mean per-direction raster error bound.
    pub raster_error: f64,
}

impl GrassmannAverage {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"avg_shadow\":{},\"lemma_rhs\":{},\"mc_error\":{},\"pass\":{},\"n_planes\":{},\"i_hat_used\":{},\"raster_error\":{}}}",
            json_f64(self.avg_shadow),
            json_f64(self.lemma_rhs),
            json_f64(self.mc_error),
            self.pass,
            self.n_planes,
            self.i_hat_used,
            json_f64(self.raster_error),
        )
    }
}

/// For surfaces in `R^3` a plane through the origin is the orthogonal
/// complement of its unit normal, so Haar sampling reduces to uniform
/// directions on the sphere.
pub fn grassmann_average(
    mesh: &TriMesh,
    i_hat: usize,
    n_planes: usize,
    seed: u64,
    grid_resolution: usize,
) -> Result<GrassmannAverage, InvariantError> {
    if n_planes < 10 {
        return Err(InvariantError::TooFewSamples { needed: 10, got: n_planes });
    }
    let shadows: Vec<ShadowResult> = (0..n_planes)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, DOMAIN_PLANES, i as u64);
            let dir = random_unit(&mut rng);
            shadow(mesh, &dir, grid_resolution)
        })
        .collect::<Result<_, _>>()?;

    let n = n_planes as f64;
    let mean = shadows.iter().map(|s| s.shadow_area).sum::<f64>() / n;
    let var = shadows.iter().map(|s| (s.shadow_area - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let mc_error = 3.0 * se / mean.max(f64::MIN_POSITIVE);
    let raster_error = shadows.iter().map(|s| s.error_bound).sum::<f64>() / n;

    let lemma_rhs = (2.0 / i_hat as f64) * (PI / (4.0 * PI)) * mesh.total_area();
    let pass = mean >= lemma_rhs * (1.0 - mc_error);
    Ok(GrassmannAverage {
        avg_shadow: mean,
        lemma_rhs,
        mc_error,
        pass,
        n_planes,
        i_hat_used: i_hat,
        raster_error,
    })
}

/// `∫_M |x|^2` by exact quadratic quadrature per face (vertex values with
/// weight 1/12 plus the centroid with weight 3/4 integrate quadratics
/// exactly on a flat triangle).
///
/// The mesh must be recentered: the bound chain this feeds assumes the
/// center of mass sits at the origin.
pub fn moment_of_inertia(mesh: &TriMesh) -> Result<f64, InvariantError> {
    let stats = mesh_stats(mesh);
    let diag = (stats.bounding_box.1 - stats.bounding_box.0).norm();
    let off = stats.barycenter.coords.norm();
    if off > 1e-9 * diag {
        return Err(InvariantError::NotRecentered(off));
    }
    let mut acc = 0.0;
    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = mesh.face_points(fi);
        let g = (p[0].coords + p[1].coords + p[2].coords) / 3.0;
        let vertex_part: f64 = p.iter().map(|q| q.coords.norm_squared()).sum::<f64>() / 12.0;
        acc += mesh.face_areas()[fi] * (vertex_part + 0.75 * g.norm_squared());
        let _ = f;
    }
    Ok(acc)
}

/// Planar grid cell for [`rearrangement_check`].
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub center: [f64; 2],
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct RearrangementCheck {
    pub integral_omega: f64,
    pub integral_star: f64,
    /// Midpoint-rule error budget of the cell discretization.
    pub discretization_bound: f64,
    pub pass: bool,
}

/// Compares `∫_Omega |x|^2` (midpoint rule over the cells) against the same
/// integral over the origin-centered disk of equal total area. The disk
/// minimizes the second moment, so the cell integral must dominate up to
/// the midpoint-rule error.
pub fn rearrangement_check(cells: &[Cell]) -> Result<RearrangementCheck, InvariantError> {
    if cells.is_empty() {
        return Err(InvariantError::EmptyCellSet);
    }
    let mut integral_omega = 0.0;
    let mut total = 0.0;
    let mut bound = 0.0;
    for c in cells {
        let d2 = c.center[0] * c.center[0] + c.center[1] * c.center[1];
        integral_omega += d2 * c.area;
        total += c.area;
        // Midpoint rule on a square cell of side s underestimates the
        // second moment by s^4 / 6 = area^2 / 6.
        bound += c.area * c.area / 6.0;
    }
    let rho = (total / PI).sqrt();
    let integral_star = PI * rho.powi(4) / 2.0;
    Ok(RearrangementCheck {
        integral_omega,
        integral_star,
        discretization_bound: bound,
        pass: integral_omega >= integral_star - bound,
    })
}

/// Parameters of [`estimate_invariants`].
#[derive(Debug, Clone, Copy)]
pub struct InvariantParams {
    pub n_lines: usize,
    pub n_centers: usize,
    pub n_radii: usize,
    pub seed: u64,
}

impl Default for InvariantParams {
    fn default() -> Self {
        InvariantParams { n_lines: 10_000, n_centers: 64, n_radii: 1024, seed: 0 }
    }
}

/// Runs the line, concentration and moment estimators on one mesh. The
/// moment is taken over the recentered translate of the mesh (the other
/// estimates are translation invariant).
pub fn estimate_invariants(
    mesh: &TriMesh,
    params: &InvariantParams,
) -> Result<GeometricInvariants, InvariantError> {
    let bvh = Bvh::build(mesh);
    let idx = intersection_index_with(mesh, &bvh, params.n_lines, params.seed, None)?;
    let conc = concentration_with(mesh, &bvh, params.n_centers, params.n_radii, params.seed);
    let stats = mesh_stats(mesh);
    let centered = mesh.translated(&(-stats.barycenter.coords));
    let moment = moment_of_inertia(&centered)?;
    Ok(GeometricInvariants {
        i_hat: idx.i_hat,
        i_histogram: idx.histogram,
        l_hat: conc.l_hat,
        l_witness: conc.witness,
        moment_of_inertia: moment,
        seed: params.seed,
        n_lines: params.n_lines,
        n_centers: params.n_centers,
        n_radii: params.n_radii,
        rejected_lines: idx.rejected,
    })
}

fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Orthonormal basis of the plane orthogonal to a unit vector.
fn orthonormal_complement(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let pick = if d.x.abs() <= d.y.abs() && d.x.abs() <= d.z.abs() {
        Vector3::x()
    } else if d.y.abs() <= d.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = d.cross(&pick).normalize();
    let e2 = d.cross(&e1);
    (e1, e2)
}

/// Area-uniform random points on the surface.
fn random_surface_points(mesh: &TriMesh, n: usize, seed: u64) -> Vec<Point3<f64>> {
    if n == 0 {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(mesh.face_count());
    let mut acc = 0.0;
    for &a in mesh.face_areas() {
        acc += a;
        cumulative.push(acc);
    }
    let total = acc;
    (0..n)
        .map(|i| {
            let mut rng = stream(seed, DOMAIN_CENTERS, i as u64);
            let target = rng.gen::<f64>() * total;
            let f = cumulative.partition_point(|&c| c < target).min(mesh.face_count() - 1);
            let p = mesh.face_points(f);
            let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            let s = r1.sqrt();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
            Point3::from(p[0].coords * wa + p[1].coords * wb + p[2].coords * wc)
        })
        .collect()
}

fn farthest_corner_distance(p: &Point3<f64>, lo: &Point3<f64>, hi: &Point3<f64>) -> f64 {
    let mut d2 = 0.0;
    for a in 0..3 {
        let d = (p[a] - lo[a]).abs().max((p[a] - hi[a]).abs());
        d2 += d * d;
    }
    d2.sqrt()
}

#[cfg(test)]
mod tests;
