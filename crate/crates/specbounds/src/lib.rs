//! Spectra of closed triangulated surfaces in `R^3` and the extrinsic
//! eigenvalue bounds they satisfy.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`mesh`] builds, loads and validates closed orientable triangle
//!    meshes (canonical generators, OFF/OBJ files, implicit surfaces via
//!    marching cubes).
//! 2. [`laplace`] assembles the cotangent stiffness / lumped mass pair and
//!    solves the generalized eigenproblem `K u = lambda M u` by shift-invert
//!    Krylov iteration.
//! 3. [`invariants`] estimates the extrinsic quantities the bounds consume:
//!    intersection index of lines with the surface, volume concentration,
//!    shadow (projection) areas and their average over directions, moment of
//!    inertia.
//! 4. [`bounds`] evaluates the closed-form dimensional constants and checks
//!    every inequality, producing a [`bounds::BoundReport`].
//! 5. [`packing`] runs the disjoint-set / cut-off test-function machinery
//!    that underlies the higher-order bounds and cross-checks it against the
//!    computed spectrum via min-max.
//!
//! [`pipeline`] ties the stages together behind a batch front end (see the
//! `specbounds` binary), and `examples/` contains one runnable example per
//! capability.

pub mod bounds;
pub mod invariants;
pub mod laplace;
pub mod mesh;
pub mod packing;
pub mod pipeline;
pub mod report;
pub mod rng;

pub use bounds::{check_bounds, constants, weyl_scan, BoundReport, DimensionConstants};
pub use invariants::{GeometricInvariants, ShadowResult};
pub use laplace::{assemble, eigs, mean_curvature_energy, rayleigh, SpectralPair, Spectrum};
pub use mesh::{gen_icosphere, gen_implicit, gen_torus, load_mesh, mesh_stats, recenter_unit_area, MeshStats, TriMesh};
pub use packing::{admissible_r, build_measure, construct_sets, test_functions, DiscreteMeasure, PackingResult};
