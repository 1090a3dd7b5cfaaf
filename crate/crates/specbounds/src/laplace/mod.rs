//! Discrete Laplace-Beltrami operator on a triangle mesh and its spectrum.
//!
//! The discretization is the standard cotangent stiffness matrix paired with
//! a lumped (diagonal) mass matrix of barycentric vertex areas. The lumped
//! mass keeps Rayleigh quotients of arbitrary vertex functions and the
//! eigensolver consistent and makes shift-invert factorization trivial to
//! set up.

mod solver;

use crate::mesh::TriMesh;
use crate::report::{json_f64_array, json_usize_array};
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("numerical failure assembling face {face}: non-finite cotangent weight")]
    NumericalFailure { face: usize },
    #[error("k too large: requested {requested} eigenpairs but the mesh has only {vertices} vertices")]
    KTooLarge { requested: usize, vertices: usize },
    #[error("tolerance {0} outside (0, 1e-4]")]
    BadTolerance(f64),
    #[error("eigensolver did not converge after {restarts} restarts; achieved relative residuals {achieved:?}")]
    NonConvergence { restarts: usize, achieved: Vec<f64> },
    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,
    #[error("factorization failed: {0}")]
    Factorization(String),
}

/// Symmetric sparse matrix in CSR form (both triangles stored).
#[derive(Debug, Clone)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSym { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_to(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            out[i] = acc;
        }
    }

    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        self.mul_to(x.as_slice(), out.as_mut_slice());
        out
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[idx] * x[self.col_idx[idx]];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[idx] == j {
                return self.values[idx];
            }
        }
        0.0
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]].iter().copied().filter(move |&j| j != i)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[idx])] = self.values[idx];
            }
        }
        m
    }
}

/// Stiffness and mass operators of the generalized eigenproblem
/// `K u = lambda M u`.
///
/// Invariants after [`assemble`]:
/// - the stiffness is symmetric positive semidefinite with zero row sums
///   (constants span its kernel);
/// - the mass diagonal is strictly positive and sums to the surface area.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    stiffness: SparseSym,
    mass: Vec<f64>,
    vertex_count: usize,
}

impl SpectralPair {
    pub fn stiffness(&self) -> &SparseSym {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn mass_total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Assembles the cotangent stiffness and lumped mass pair.
///
/// The stiffness entry for edge `(i, j)` is `-(cot a + cot b) / 2` over the
/// two angles opposite the edge; each face adds a third of its area to the
/// mass of its three vertices.
pub fn assemble(mesh: &TriMesh) -> Result<SpectralPair, SpectralError> {
    let n = mesh.vertex_count();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut diag = vec![0.0f64; n];
    let mut mass = vec![0.0f64; n];

    use std::collections::HashMap;
    let mut edge_w: HashMap<(usize, usize), f64> = HashMap::with_capacity(mesh.face_count() * 3 / 2);

    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = mesh.face_points(fi);
        for opp in 0..3 {
            let (a, b) = (f[(opp + 1) % 3], f[(opp + 2) % 3]);
            let u = p[(opp + 1) % 3] - p[opp];
            let v = p[(opp + 2) % 3] - p[opp];
            let cot = u.dot(&v) / u.cross(&v).norm();
            if !cot.is_finite() {
                return Err(SpectralError::NumericalFailure { face: fi });
            }
            let key = (a.min(b), a.max(b));
            *edge_w.entry(key).or_insert(0.0) += 0.5 * cot;
        }
        let third = mesh.face_areas()[fi] / 3.0;
        for &v in f {
            mass[v] += third;
        }
    }

    for (&(a, b), &w) in &edge_w {
        rows[a].push((b, -w));
        rows[b].push((a, -w));
        diag[a] += w;
        diag[b] += w;
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.push((i, diag[i]));
    }

    Ok(SpectralPair { stiffness: SparseSym::from_rows(rows), mass, vertex_count: n })
}

/// Ordered spectrum of the pair, with dilation-invariant normalizations
/// `lambda_j * area`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<DVector<f64>>,
    pub k_requested: usize,
    /// `lambda_j * Vol(M)` (dimensionless for surfaces).
    pub normalized: Vec<f64>,
    /// Achieved relative residuals `|K u - lambda M u| / |M u|`.
    pub residuals: Vec<f64>,
    /// Cluster id per eigenvalue; eigenvalues whose relative gap is below
    /// `1e-4` share a cluster, which makes multiplicities visible in
    /// reports.
    pub clusters: Vec<usize>,
}

impl Spectrum {
    pub fn lambda(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    pub fn to_json(&self) -> String {
        format!(
            "{{\"eigenvalues\":{},\"normalized\":{},\"residuals\":{},\"clusters\":{}}}",
            json_f64_array(&self.eigenvalues),
            json_f64_array(&self.normalized),
            json_f64_array(&self.residuals),
            json_usize_array(&self.clusters),
        )
    }
}

pub(crate) fn cluster_ids(eigenvalues: &[f64]) -> Vec<usize> {
    let scale = eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let mut ids = Vec::with_capacity(eigenvalues.len());
    let mut current = 0;
    for (i, &l) in eigenvalues.iter().enumerate() {
        if i > 0 {
            let prev = eigenvalues[i - 1];
            let gap = l - prev;
            if gap > 1e-4 * l.abs().max(prev.abs()) + 1e-12 * scale {
                current += 1;
            }
        }
        ids.push(current);
    }
    ids
}

/// First `k + 1` eigenpairs of `K u = lambda M u` by shift-invert Krylov
/// iteration at shift `-1e-8` (the slightly negative shift keeps the zero
/// eigenvalue inside the factorizable region).
///
/// Each returned pair satisfies `|K u - lambda M u| <= tol * |M u|`.
pub fn eigs(pair: &SpectralPair, k: usize, tol: f64) -> Result<Spectrum, SpectralError> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(SpectralError::BadTolerance(tol));
    }
    if k + 1 >= pair.vertex_count() {
        return Err(SpectralError::KTooLarge { requested: k + 1, vertices: pair.vertex_count() });
    }
    let out = solver::smallest_eigenpairs(pair, k + 1, tol)?;
    let vol = pair.mass_total();
    let normalized = out.eigenvalues.iter().map(|l| l * vol).collect();
    let clusters = cluster_ids(&out.eigenvalues);
    Ok(Spectrum {
        eigenvalues: out.eigenvalues,
        eigenvectors: out.eigenvectors,
        k_requested: k,
        normalized,
        residuals: out.residuals,
        clusters,
    })
}

/// Rayleigh quotient `(f^T K f) / (f^T M f)` of a vertex function.
pub fn rayleigh(pair: &SpectralPair, f: &[f64]) -> Result<f64, SpectralError> {
    assert_eq!(f.len(), pair.vertex_count());
    let num = pair.stiffness.quad_form(f);
    let den: f64 = f.iter().zip(&pair.mass).map(|(&x, &m)| m * x * x).sum();
    if !(den > 0.0) {
        return Err(SpectralError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Squared L2 norm of the mean curvature vector field, `sum_v A_v |H_v|^2`,
/// with the discrete mean curvature `H_v = (K X)_v / (2 A_v)` (cotangent
/// operator applied to the coordinate functions over twice the lumped
/// vertex area).
pub fn mean_curvature_energy(mesh: &TriMesh) -> f64 {
    let pair = assemble(mesh).expect("validated mesh assembles");
    let n = pair.vertex_count();
    let mut coord = vec![0.0f64; n];
    let mut kx = vec![0.0f64; n];
    let mut sq = vec![0.0f64; n];
    for axis in 0..3 {
        for (i, p) in mesh.vertices().iter().enumerate() {
            coord[i] = p[axis];
        }
        pair.stiffness.mul_to(&coord, &mut kx);
        for i in 0..n {
            sq[i] += kx[i] * kx[i];
        }
    }
    (0..n).map(|i| sq[i] / (4.0 * pair.mass[i])).sum()
}
