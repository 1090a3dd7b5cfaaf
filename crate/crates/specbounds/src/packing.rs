//! Disjointly supported test functions from a measure-packing construction.
//!
//! The surface carries the Borel measure `mu(A) = area(M ∩ A)`, atomized at
//! face centroids. A greedy construction produces `K` well-separated sets of
//! prescribed measure; distance-cutoff functions supported on their
//! neighborhoods then bound eigenvalues from above through the min-max
//! principle, replaying the mechanism behind the concentration bound.
//!
//! All constants use the true embedding dimension (`m + p = 3`): the
//! universal-constant substitution of a dimension-only codimension matters
//! for the closed-form constants, not for the construction itself.

use crate::invariants::Bvh;
use crate::laplace::{eigs, rayleigh, SpectralPair, SpectralError};
use crate::mesh::TriMesh;
use crate::report::{fmt_f64, json_f64, json_f64_array};
use nalgebra::Point3;
use serde::Deserialize;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use thiserror::Error;

/// Embedding dimension exponent used in all packing constants.
pub const AMBIENT_EXP: usize = 3;

#[derive(Debug, Error)]
pub enum PackingError {
    #[error("alpha = {alpha:e} violates the hypothesis alpha <= omega / (2 * 8^{ambient} * K) = {limit:e}")]
    AlphaTooLarge { alpha: f64, limit: f64, ambient: usize },
    #[error("no admissible r on the grid: even r = {smallest:e} gives ball mass {mass:e} > alpha / (2 * 8^{ambient}) = {limit:e}")]
    NoAdmissibleR { smallest: f64, mass: f64, limit: f64, ambient: usize },
    #[error("greedy packing exhausted the measure after {completed} of {requested} sets")]
    GreedyExhausted { completed: usize, requested: usize },
    #[error("test function {set} has empty support")]
    ZeroTestFunction { set: usize },
    #[error("supports of sets {a} and {b} overlap or are coupled by a mesh edge")]
    OverlappingSupports { a: usize, b: usize },
    #[error("spectral solve inside packing failed: {0}")]
    Spectral(#[from] SpectralError),
    #[error("packing replay parse error: {0}")]
    Parse(String),
}

/// Surface measure atomized at face centroids: atom `i` carries the area of
/// face `i` at its centroid. The mesh's triangle hierarchy rides along so
/// that ball masses of the underlying continuous measure can be evaluated
/// exactly.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    positions: Vec<Point3<f64>>,
    weights: Vec<f64>,
    total: f64,
    diameter: f64,
    bvh: Bvh,
}

impl DiscreteMeasure {
    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `omega = mu(R^3) = Vol(M)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn atom_count(&self) -> usize {
        self.positions.len()
    }

    /// Exact `mu(B(x, r)) = area(M ∩ B(x, r))`.
    pub fn ball_mass(&self, center: &Point3<f64>, r: f64) -> f64 {
        self.bvh.ball_area(center, r)
    }

    /// Sum of atom weights within distance `r` of `center`.
    pub fn atom_ball_mass(&self, center: &Point3<f64>, r: f64) -> f64 {
        let r2 = r * r;
        self.positions
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| (*p - center).norm_squared() <= r2)
            .map(|(_, w)| w)
            .sum()
    }
}

/// One atom per face at its centroid, weighted by face area.
pub fn build_measure(mesh: &TriMesh) -> DiscreteMeasure {
    let positions: Vec<Point3<f64>> = (0..mesh.face_count()).map(|f| mesh.face_centroid(f)).collect();
    let weights = mesh.face_areas().to_vec();
    DiscreteMeasure {
        positions,
        weights,
        total: mesh.total_area(),
        diameter: mesh.bbox_diagonal(),
        bvh: Bvh::build(mesh),
    }
}

/// Largest radius on a 64-step geometric grid with
/// `2 * 8^ambient_exp * sup_x mu(B(x, r)) <= alpha`, probing the supremum at
/// the atom positions.
///
/// The ball mass is the exact area of the surface inside the ball: at the
/// radii the hypothesis produces, balls are far smaller than any sensible
/// face, so atom sums would see single atoms instead of the `r^m` growth of
/// the measure the hypothesis is about.
pub fn admissible_r(
    measure: &DiscreteMeasure,
    alpha: f64,
    ambient_exp: usize,
) -> Result<f64, PackingError> {
    let limit = alpha / (2.0 * 8f64.powi(ambient_exp as i32));
    let diag = measure.diameter;
    let r_min = diag * 1e-5;
    let r_max = diag / 3.0;
    let steps = 64usize;
    let ratio = (r_max / r_min).powf(1.0 / (steps - 1) as f64);

    let admissible = |r: f64| {
        measure.positions.iter().all(|p| measure.ball_mass(p, r) <= limit)
    };

    for j in (0..steps).rev() {
        let r = r_min * ratio.powi(j as i32);
        if admissible(r) {
            return Ok(r);
        }
    }
    let worst = measure
        .positions
        .iter()
        .map(|p| measure.ball_mass(p, r_min))
        .fold(0.0f64, f64::max);
    Err(PackingError::NoAdmissibleR { smallest: r_min, mass: worst, limit, ambient: ambient_exp })
}

/// `K` disjoint atom sets with per-set measure at least `alpha` and pairwise
/// distance at least `3r`.
#[derive(Debug, Clone, Deserialize)]
pub struct PackingResult {
    /// Atom (= face) indices per set.
    pub sets: Vec<Vec<usize>>,
    pub r: f64,
    pub alpha: f64,
    pub k: usize,
    /// `mu(A_i)` per set.
    pub measures: Vec<f64>,
    /// Minimum Euclidean distance between atom positions of distinct sets.
    pub min_pairwise_distance: f64,
    pub ambient_dim_exponent: usize,
}

impl PackingResult {
    pub fn to_json(&self) -> String {
        let mut sets = String::from("[");
        for (i, s) in self.sets.iter().enumerate() {
            if i > 0 {
                sets.push(',');
            }
            let ids: Vec<String> = s.iter().map(|x| x.to_string()).collect();
            let _ = write!(sets, "[{}]", ids.join(","));
        }
        sets.push(']');
        format!(
            "{{\"sets\":{},\"r\":{},\"alpha\":{},\"k\":{},\"measures\":{},\"min_pairwise_distance\":{},\"ambient_dim_exponent\":{}}}",
            sets,
            json_f64(self.r),
            json_f64(self.alpha),
            self.k,
            json_f64_array(&self.measures),
            json_f64(self.min_pairwise_distance),
            self.ambient_dim_exponent,
        )
    }

    /// Replays a packing serialized by [`PackingResult::to_json`].
    pub fn from_json(text: &str) -> Result<PackingResult, PackingError> {
        serde_json::from_str(text).map_err(|e| PackingError::Parse(e.to_string()))
    }
}

/// Greedy packing: repeatedly grow a ball around the live atom with the
/// largest local measure until it captures measure `alpha`, claim it, then
/// retire everything within `3r` of the claimed atoms plus the one-ring of
/// claimed faces (the ring keeps the later test-function supports decoupled
/// in the discrete quadratic form).
///
/// The existence of such sets is guaranteed under the `alpha` hypothesis;
/// this greedy is not, so exhaustion is reported as a structured failure,
/// never absorbed.
pub fn construct_sets(
    measure: &DiscreteMeasure,
    mesh: &TriMesh,
    k_sets: usize,
    alpha: f64,
    r: f64,
) -> Result<PackingResult, PackingError> {
    let limit = measure.total / (2.0 * 8f64.powi(AMBIENT_EXP as i32) * k_sets as f64);
    if alpha > limit {
        return Err(PackingError::AlphaTooLarge { alpha, limit, ambient: AMBIENT_EXP });
    }

    let n = measure.atom_count();
    let mut alive = vec![true; n];

    // Vertex -> incident faces, for the one-ring buffer.
    let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertex_count()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        for &v in f {
            vertex_faces[v].push(fi);
        }
    }

    let grid = AtomGrid::build(&measure.positions, (3.0 * r).max(measure.diameter / 64.0));

    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(k_sets);
    let mut set_measures = Vec::with_capacity(k_sets);

    for cycle in 0..k_sets {
        // Seed: live atom with the largest live measure within radius r.
        let mut seed = usize::MAX;
        let mut seed_mass = f64::NEG_INFINITY;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let mut mass = 0.0;
            grid.for_each_within(&measure.positions, &measure.positions[i], r, |j| {
                if alive[j] {
                    mass += measure.weights[j];
                }
            });
            if mass > seed_mass {
                seed_mass = mass;
                seed = i;
            }
        }
        if seed == usize::MAX {
            return Err(PackingError::GreedyExhausted { completed: cycle, requested: k_sets });
        }

        // Grow a ball around the seed until it holds measure alpha.
        let seed_pos = measure.positions[seed];
        let mut by_dist: Vec<(f64, usize)> = (0..n)
            .filter(|&j| alive[j])
            .map(|j| ((measure.positions[j] - seed_pos).norm(), j))
            .collect();
        by_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut claimed = Vec::new();
        let mut mass = 0.0;
        for &(_, j) in &by_dist {
            claimed.push(j);
            mass += measure.weights[j];
            if mass >= alpha {
                break;
            }
        }
        if mass < alpha {
            return Err(PackingError::GreedyExhausted { completed: cycle, requested: k_sets });
        }

        // Retire the claimed atoms, everything within 3r of them, and the
        // one-ring of the claimed faces.
        for &j in &claimed {
            alive[j] = false;
            grid.for_each_within(&measure.positions, &measure.positions[j], 3.0 * r, |q| {
                alive[q] = false;
            });
            for &v in &mesh.faces()[j] {
                for &g in &vertex_faces[v] {
                    alive[g] = false;
                }
            }
        }

        sets.push(claimed);
        set_measures.push(mass);
    }

    let min_pairwise_distance = min_set_distance(&measure.positions, &sets);
    Ok(PackingResult {
        sets,
        r,
        alpha,
        k: k_sets,
        measures: set_measures,
        min_pairwise_distance,
        ambient_dim_exponent: AMBIENT_EXP,
    })
}

fn min_set_distance(positions: &[Point3<f64>], sets: &[Vec<usize>]) -> f64 {
    let mut best = f64::INFINITY;
    let boxes: Vec<(Point3<f64>, Point3<f64>)> = sets
        .iter()
        .map(|s| {
            let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
            let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &i in s {
                for a in 0..3 {
                    lo[a] = lo[a].min(positions[i][a]);
                    hi[a] = hi[a].max(positions[i][a]);
                }
            }
            (lo, hi)
        })
        .collect();
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            let mut box_gap2 = 0.0;
            for axis in 0..3 {
                let gap = (boxes[a].0[axis] - boxes[b].1[axis])
                    .max(boxes[b].0[axis] - boxes[a].1[axis])
                    .max(0.0);
                box_gap2 += gap * gap;
            }
            if box_gap2.sqrt() >= best {
                continue;
            }
            for &i in &sets[a] {
                for &j in &sets[b] {
                    let d = (positions[i] - positions[j]).norm();
                    if d < best {
                        best = d;
                    }
                }
            }
        }
    }
    best
}

/// Rayleigh quotients of the packing's distance-cutoff test functions plus
/// the three checks they must satisfy.
#[derive(Debug, Clone)]
pub struct TestFunctionReport {
    /// `R(phi_i)` per set.
    pub rayleigh: Vec<f64>,
    /// Per-set upper bound `(1 / r^2) * mu(A_i^r) / mu(A_i)` (with 10%
    /// discretization slack applied at verdict time).
    pub quotient_bounds: Vec<f64>,
    /// `mu(A_i^r)` per set.
    pub neighborhood_measures: Vec<f64>,
    /// Discrete Dirichlet energy per set.
    pub dirichlet: Vec<f64>,
    /// Lumped mass of each support.
    pub support_mass: Vec<f64>,
    pub quotient_bound_ok: bool,
    pub gradient_bound_ok: bool,
    /// `lambda_{K-1}` of the pair.
    pub lambda_k_minus_1: f64,
    pub max_rayleigh: f64,
    pub min_max_ok: bool,
}

impl TestFunctionReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("set,rayleigh,quotient_bound,neighborhood_measure,dirichlet,support_mass\n");
        for i in 0..self.rayleigh.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                i,
                fmt_f64(self.rayleigh[i]),
                fmt_f64(self.quotient_bounds[i]),
                fmt_f64(self.neighborhood_measures[i]),
                fmt_f64(self.dirichlet[i]),
                fmt_f64(self.support_mass[i]),
            );
        }
        s
    }
}

const QUOTIENT_SLACK: f64 = 0.10;
const MIN_MAX_TOL: f64 = 1e-6;

/// Builds the cutoff functions `phi_i(v) = clamp(1 - d(v, A_i) / r, 0, 1)`,
/// where `A_i` is the union of the claimed faces and `d` the Euclidean
/// distance to that set (zero exactly on the vertices of claimed faces).
///
/// Checks: supports pairwise uncoupled (no shared vertex, no stiffness
/// entry across), each quotient under `(1/r^2) mu(A_i^r)/mu(A_i)` with 10%
/// slack, and the min-max consequence `lambda_{K-1} <= max_i R(phi_i)`.
pub fn test_functions(
    mesh: &TriMesh,
    pair: &SpectralPair,
    packing: &PackingResult,
) -> Result<TestFunctionReport, PackingError> {
    let n = mesh.vertex_count();
    let k_sets = packing.sets.len();
    let r = packing.r;

    let mut phis: Vec<Vec<f64>> = Vec::with_capacity(k_sets);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (si, set) in packing.sets.iter().enumerate() {
        let tris: Vec<[Point3<f64>; 3]> = set.iter().map(|&f| mesh.face_points(f)).collect();
        let mut in_set = vec![false; n];
        for &f in set {
            for &v in &mesh.faces()[f] {
                in_set[v] = true;
            }
        }
        // Only vertices within r of the set's bounding box can be in the
        // support.
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in &tris {
            for p in t {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        let mut phi = vec![0.0f64; n];
        let mut support_empty = true;
        for (v, p) in mesh.vertices().iter().enumerate() {
            let val = if in_set[v] {
                1.0
            } else {
                if (0..3).any(|a| p[a] < lo[a] - r || p[a] > hi[a] + r) {
                    continue;
                }
                let d = tris.iter().map(|t| point_triangle_distance(p, t)).fold(f64::INFINITY, f64::min);
                (1.0 - d / r).clamp(0.0, 1.0)
            };
            if val > 0.0 {
                phi[v] = val;
                support_empty = false;
                if let Some(other) = owner[v] {
                    return Err(PackingError::OverlappingSupports { a: other, b: si });
                }
                owner[v] = Some(si);
            }
        }
        if support_empty {
            return Err(PackingError::ZeroTestFunction { set: si });
        }
        phis.push(phi);
    }

    // Stiffness coupling between supports would break disjointness in the
    // quadratic form even without a shared vertex.
    for v in 0..n {
        if let Some(si) = owner[v] {
            for u in pair.stiffness().neighbors(v) {
                if let Some(sj) = owner[u] {
                    if si != sj {
                        return Err(PackingError::OverlappingSupports { a: si.min(sj), b: si.max(sj) });
                    }
                }
            }
        }
    }

    let measure = build_measure(mesh);
    let mut rayleighs = Vec::with_capacity(k_sets);
    let mut bounds = Vec::with_capacity(k_sets);
    let mut neigh = Vec::with_capacity(k_sets);
    let mut dirichlet = Vec::with_capacity(k_sets);
    let mut support_mass = Vec::with_capacity(k_sets);
    let mut quotient_ok = true;
    let mut gradient_ok = true;
    for (si, phi) in phis.iter().enumerate() {
        let rq = rayleigh(pair, phi)?;
        rayleighs.push(rq);

        let tris: Vec<[Point3<f64>; 3]> = packing.sets[si].iter().map(|&f| mesh.face_points(f)).collect();
        let claimed: HashSet<usize> = packing.sets[si].iter().copied().collect();
        let mut mu_r = 0.0;
        for (ai, ap) in measure.positions().iter().enumerate() {
            let inside = claimed.contains(&ai)
                || tris.iter().any(|t| point_triangle_distance(ap, t) < r);
            if inside {
                mu_r += measure.weights()[ai];
            }
        }
        neigh.push(mu_r);
        let bound = mu_r / packing.measures[si] / (r * r);
        bounds.push(bound);
        if rq > bound * (1.0 + QUOTIENT_SLACK) {
            quotient_ok = false;
        }

        let energy = pair.stiffness().quad_form(phi);
        dirichlet.push(energy);
        let mass: f64 = phi
            .iter()
            .zip(pair.mass())
            .filter(|(&x, _)| x > 0.0)
            .map(|(_, &m)| m)
            .sum();
        support_mass.push(mass);
        if energy > mass / (r * r) * (1.0 + QUOTIENT_SLACK) {
            gradient_ok = false;
        }
    }

    let spectrum = eigs(pair, k_sets - 1, 1e-8)?;
    let lambda_last = spectrum.eigenvalues[k_sets - 1];
    let max_rayleigh = rayleighs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min_max_ok = lambda_last <= max_rayleigh * (1.0 + MIN_MAX_TOL) + MIN_MAX_TOL;

    Ok(TestFunctionReport {
        rayleigh: rayleighs,
        quotient_bounds: bounds,
        neighborhood_measures: neigh,
        dirichlet,
        support_mass,
        quotient_bound_ok: quotient_ok,
        gradient_bound_ok: gradient_ok,
        lambda_k_minus_1: lambda_last,
        max_rayleigh,
        min_max_ok,
    })
}

/// Constant `C(m, p) = 6 * 8^{m+p} * (12 * 8^{2(m+p)})^{2/m}` of the
/// quotient-to-eigenvalue chain at true codimension.
pub fn c_mp(m: usize, p: usize) -> f64 {
    let mp = (m + p) as f64;
    6.0 * 8f64.powf(mp) * (12.0 * 8f64.powf(2.0 * mp)).powf(2.0 / m as f64)
}

/// Full replay for a surface: `alpha = omega / (6 * 8^3 * k)`, `K = 2k + 1`
/// sets, `r` from [`admissible_r`], test functions, the `Q`-filter that
/// discards sets with heavy neighborhoods, and the end-to-end quotient
/// bound with the concentration estimate.
#[derive(Debug, Clone)]
pub struct Theorem3Replay {
    pub k: usize,
    pub alpha: f64,
    pub r: f64,
    pub packing: PackingResult,
    pub report: TestFunctionReport,
    /// Sets whose `mu(A_i^r)` reaches `omega / k` (discarded by the filter).
    pub q_filtered: Vec<usize>,
    /// Surviving sets used for the order-k bound.
    pub kept: Vec<usize>,
    /// `max over kept R(phi_i)`.
    pub max_kept_rayleigh: f64,
    /// `(k / omega)^{2/m} * L^{2/m} * C(m, p)` with measured concentration.
    pub end_to_end_bound: f64,
    pub end_to_end_ok: bool,
    /// `lambda_k <= max kept quotient` (order-k min-max).
    pub lambda_k: f64,
    pub lambda_k_ok: bool,
}

pub fn replay_theorem3(
    mesh: &TriMesh,
    pair: &SpectralPair,
    k: usize,
    l_hat: f64,
) -> Result<Theorem3Replay, PackingError> {
    let measure = build_measure(mesh);
    let omega = measure.total();
    let alpha = omega / (6.0 * 8f64.powi(AMBIENT_EXP as i32) * k as f64);
    let r = admissible_r(&measure, alpha, AMBIENT_EXP)?;
    let k_sets = 2 * k + 1;
    let packing = construct_sets(&measure, mesh, k_sets, alpha, r)?;
    let report = test_functions(mesh, pair, &packing)?;

    let heavy = omega / k as f64;
    let mut q_filtered = Vec::new();
    let mut kept = Vec::new();
    for (i, &mu_r) in report.neighborhood_measures.iter().enumerate() {
        if mu_r >= heavy {
            q_filtered.push(i);
        } else if kept.len() < k + 1 {
            kept.push(i);
        }
    }
    let max_kept_rayleigh = kept
        .iter()
        .map(|&i| report.rayleigh[i])
        .fold(f64::NEG_INFINITY, f64::max);

    let end_to_end_bound =
        (k as f64 / omega).powf(2.0 / 2.0) * l_hat.powf(2.0 / 2.0) * c_mp(2, AMBIENT_EXP - 2);
    let end_to_end_ok = max_kept_rayleigh <= end_to_end_bound;

    let spectrum = eigs(pair, k, 1e-8)?;
    let lambda_k = spectrum.eigenvalues[k];
    let lambda_k_ok = lambda_k <= max_kept_rayleigh * (1.0 + MIN_MAX_TOL) + MIN_MAX_TOL;

    Ok(Theorem3Replay {
        k,
        alpha,
        r,
        packing,
        report,
        q_filtered,
        kept,
        max_kept_rayleigh,
        end_to_end_bound,
        end_to_end_ok,
        lambda_k,
        lambda_k_ok,
    })
}

/// Distance from a point to a closed triangle.
fn point_triangle_distance(p: &Point3<f64>, tri: &[Point3<f64>; 3]) -> f64 {
    let (a, b, c) = (tri[0], tri[1], tri[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm()
}

/// Uniform hash grid over atom positions for neighbor sweeps.
struct AtomGrid {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl AtomGrid {
    fn build(positions: &[Point3<f64>], cell: f64) -> AtomGrid {
        let cell = cell.max(1e-12);
        let mut map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        AtomGrid { cell, map }
    }

    fn key(p: &Point3<f64>, cell: f64) -> (i64, i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64)
    }

    fn for_each_within<F: FnMut(usize)>(
        &self,
        positions: &[Point3<f64>],
        center: &Point3<f64>,
        r: f64,
        mut f: F,
    ) {
        let reach = (r / self.cell).ceil() as i64;
        let k = Self::key(center, self.cell);
        let r2 = r * r;
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(ids) = self.map.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                        for &i in ids {
                            if (positions[i] - center).norm_squared() <= r2 {
                                f(i);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
#[path = "packing_tests.rs"]
mod packing_tests;
