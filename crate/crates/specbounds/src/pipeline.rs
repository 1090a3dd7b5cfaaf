//! Batch front end: configuration, pipeline orchestration and the file
//! artifacts behind the command-line interface.
//!
//! `run_check` chains mesh -> spectrum -> invariants -> bound report ->
//! packing replay and writes `report.json`, `bounds.csv`, `spectrum.csv`
//! and `weyl.svg` into the output directory. With a fixed seed the bytes of
//! every artifact are reproducible.

use crate::bounds::{check_bounds, constants, weyl_scan, WeylTable};
use crate::invariants::{
    estimate_invariants, grassmann_average, shadow, GrassmannAverage, InvariantParams,
};
use crate::laplace::{assemble, eigs, mean_curvature_energy, Spectrum};
use crate::mesh::{
    gen_ellipsoid, gen_icosphere, gen_implicit, gen_torus, load_mesh, mesh_stats, save_off,
    MeshFormat, Polynomial, TriMesh,
};
use crate::packing::{replay_theorem3, Theorem3Replay};
use crate::report::{fmt_f64, json_escape, json_f64, svg_line_plot};
use nalgebra::{Point3, Vector3};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
}

fn stage_err<E: std::fmt::Display>(stage: &str) -> impl Fn(E) -> PipelineError + '_ {
    move |e| PipelineError { stage: stage.to_string(), message: e.to_string() }
}

/// Where the mesh comes from: a file or a named generator.
#[derive(Debug, Clone)]
pub enum MeshSource {
    File(PathBuf),
    Icosphere { subdivisions: u32, radius: f64 },
    Torus { big_r: f64, small_r: f64, nu: usize, nv: usize },
    Ellipsoid { subdivisions: u32, a: f64, b: f64, c: f64 },
    Implicit { poly_path: PathBuf, resolution: usize, bbox: Option<(Point3<f64>, Point3<f64>)> },
}

impl MeshSource {
    /// `icosphere:5`, `icosphere:5:2.0`, `torus:2:1:128:64`,
    /// `ellipsoid:4:2:1:1`, `implicit:poly.txt:96`, otherwise a file path.
    pub fn parse(s: &str) -> Result<MeshSource, PipelineError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |msg: String| PipelineError { stage: "config".into(), message: msg };
        match parts[0] {
            "icosphere" if parts.len() >= 2 => {
                let subdivisions = parts[1].parse().map_err(|_| bad(format!("bad subdivisions in {s:?}")))?;
                let radius = if parts.len() > 2 {
                    parts[2].parse().map_err(|_| bad(format!("bad radius in {s:?}")))?
                } else {
                    1.0
                };
                Ok(MeshSource::Icosphere { subdivisions, radius })
            }
            "torus" if parts.len() == 5 => {
                let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad(format!("bad torus parameter in {s:?}")));
                let u = |i: usize| parts[i].parse::<usize>().map_err(|_| bad(format!("bad torus parameter in {s:?}")));
                Ok(MeshSource::Torus { big_r: f(1)?, small_r: f(2)?, nu: u(3)?, nv: u(4)? })
            }
            "ellipsoid" if parts.len() == 5 => {
                let subdivisions = parts[1].parse().map_err(|_| bad(format!("bad subdivisions in {s:?}")))?;
                let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad(format!("bad semi-axis in {s:?}")));
                Ok(MeshSource::Ellipsoid { subdivisions, a: f(2)?, b: f(3)?, c: f(4)? })
            }
            "implicit" if parts.len() >= 3 => {
                let resolution = parts[2].parse().map_err(|_| bad(format!("bad resolution in {s:?}")))?;
                Ok(MeshSource::Implicit { poly_path: PathBuf::from(parts[1]), resolution, bbox: None })
            }
            _ => Ok(MeshSource::File(PathBuf::from(s))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MeshSource::File(p) => format!("file:{}", p.display()),
            MeshSource::Icosphere { subdivisions, radius } => format!("icosphere:{subdivisions}:{radius}"),
            MeshSource::Torus { big_r, small_r, nu, nv } => format!("torus:{big_r}:{small_r}:{nu}:{nv}"),
            MeshSource::Ellipsoid { subdivisions, a, b, c } => format!("ellipsoid:{subdivisions}:{a}:{b}:{c}"),
            MeshSource::Implicit { poly_path, resolution, .. } => {
                format!("implicit:{}:{resolution}", poly_path.display())
            }
        }
    }

    pub fn build(&self) -> Result<TriMesh, PipelineError> {
        let err = stage_err("mesh");
        match self {
            MeshSource::File(p) => load_mesh(p, MeshFormat::from_path(p)).map_err(err),
            MeshSource::Icosphere { subdivisions, radius } => gen_icosphere(*subdivisions, *radius).map_err(err),
            MeshSource::Torus { big_r, small_r, nu, nv } => gen_torus(*big_r, *small_r, *nu, *nv).map_err(err),
            MeshSource::Ellipsoid { subdivisions, a, b, c } => gen_ellipsoid(*subdivisions, *a, *b, *c).map_err(err),
            MeshSource::Implicit { poly_path, resolution, bbox } => {
                let text = fs::read_to_string(poly_path).map_err(stage_err("mesh"))?;
                let poly: Polynomial = text.trim().parse().map_err(&err)?;
                let bbox = match bbox {
                    Some(b) => *b,
                    None => implicit_bbox_guess(&poly).map_err(&err)?,
                };
                gen_implicit(&poly, bbox, *resolution).map_err(err)
            }
        }
    }
}

/// Without a user bbox, scan a coarse lattice for the zero set and pad the
/// hit region; rejects polynomials whose zero set runs off the scan window.
fn implicit_bbox_guess(poly: &Polynomial) -> Result<(Point3<f64>, Point3<f64>), crate::mesh::MeshError> {
    let window = 16.0;
    let n = 48;
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut prev_sign = None;
    let mut found = false;
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let p = Point3::new(
                    -window + 2.0 * window * i as f64 / n as f64,
                    -window + 2.0 * window * j as f64 / n as f64,
                    -window + 2.0 * window * k as f64 / n as f64,
                );
                let v = poly.eval(&p);
                let s = v < 0.0;
                if let Some(ps) = prev_sign {
                    if ps != s {
                        found = true;
                    }
                }
                prev_sign = Some(s);
                if s != (poly.eval(&Point3::new(window * 2.0, window * 2.0, window * 2.0)) < 0.0) {
                    for a in 0..3 {
                        lo[a] = lo[a].min(p[a]);
                        hi[a] = hi[a].max(p[a]);
                    }
                }
            }
        }
    }
    if !found {
        return Err(crate::mesh::MeshError::EmptyZeroSet);
    }
    let pad = 3.0 * (2.0 * window / n as f64);
    for a in 0..3 {
        // Slightly asymmetric padding keeps lattice points off the zero set.
        lo[a] -= pad * 1.0171;
        hi[a] += pad * 0.9833;
        if lo[a] <= -window || hi[a] >= window {
            return Err(crate::mesh::MeshError::ZeroSetTouchesBoundary);
        }
    }
    Ok((lo, hi))
}

/// Pipeline configuration; every estimator seed and count is recorded in
/// the artifacts it produces.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mesh: MeshSource,
    /// Highest eigenvalue index to compute.
    pub k: usize,
    pub seed: u64,
    pub n_lines: usize,
    pub n_centers: usize,
    pub n_radii: usize,
    pub grid_resolution: usize,
    pub n_planes: usize,
    pub degree: Option<usize>,
    /// Restrict the bound report to these inequality names.
    pub inequalities: Option<Vec<String>>,
    pub out_dir: PathBuf,
    /// Order of the packing replay run by `check`.
    pub pack_k: usize,
    pub tol: f64,
}

impl RunConfig {
    pub fn new(mesh: MeshSource) -> RunConfig {
        RunConfig {
            mesh,
            k: 10,
            seed: 0,
            n_lines: 10_000,
            n_centers: 64,
            n_radii: 256,
            grid_resolution: 1024,
            n_planes: 200,
            degree: None,
            inequalities: None,
            out_dir: PathBuf::from("."),
            pack_k: 2,
            tol: 1e-9,
        }
    }

    fn to_json(&self) -> String {
        let ineq = match &self.inequalities {
            None => "null".to_string(),
            Some(v) => {
                let items: Vec<String> = v.iter().map(|s| json_escape(s)).collect();
                format!("[{}]", items.join(","))
            }
        };
        format!(
            "{{\"mesh\":{},\"k\":{},\"seed\":{},\"n_lines\":{},\"n_centers\":{},\"n_radii\":{},\"grid_resolution\":{},\"n_planes\":{},\"degree\":{},\"inequalities\":{},\"pack_k\":{},\"tol\":{}}}",
            json_escape(&self.mesh.describe()),
            self.k,
            self.seed,
            self.n_lines,
            self.n_centers,
            self.n_radii,
            self.grid_resolution,
            self.n_planes,
            match self.degree {
                Some(d) => d.to_string(),
                None => "null".into(),
            },
            ineq,
            self.pack_k,
            json_f64(self.tol),
        )
    }
}

/// Flat `key = value` config file; `#` starts a comment. Unknown keys are
/// rejected so typos fail loudly.
pub fn apply_config_file(config: &mut RunConfig, path: &Path) -> Result<(), PipelineError> {
    let err = stage_err("config");
    let text = fs::read_to_string(path).map_err(&err)?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| PipelineError {
            stage: "config".into(),
            message: format!("line {}: expected key = value, got {raw:?}", lineno + 1),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let parse_usize = |v: &str| {
            v.parse::<usize>().map_err(|_| PipelineError {
                stage: "config".into(),
                message: format!("bad integer for {key}: {v:?}"),
            })
        };
        match key {
            "mesh" => config.mesh = MeshSource::parse(value)?,
            "k" => config.k = parse_usize(value)?,
            "seed" => {
                config.seed = value.parse().map_err(|_| PipelineError {
                    stage: "config".into(),
                    message: format!("bad seed {value:?}"),
                })?
            }
            "lines" => config.n_lines = parse_usize(value)?,
            "centers" => config.n_centers = parse_usize(value)?,
            "radii" => config.n_radii = parse_usize(value)?,
            "grid" => config.grid_resolution = parse_usize(value)?,
            "planes" => config.n_planes = parse_usize(value)?,
            "degree" => config.degree = Some(parse_usize(value)?),
            "pack_k" => config.pack_k = parse_usize(value)?,
            "out" => config.out_dir = PathBuf::from(value),
            "inequalities" => {
                config.inequalities =
                    Some(value.split(',').map(|s| s.trim().to_string()).collect())
            }
            other => {
                return Err(PipelineError {
                    stage: "config".into(),
                    message: format!("unknown config key {other:?}"),
                })
            }
        }
    }
    Ok(())
}

/// Everything `check` computed, before serialization.
pub struct CheckOutputs {
    pub mesh: TriMesh,
    pub spectrum: Spectrum,
    pub invariants: crate::invariants::GeometricInvariants,
    pub grassmann: GrassmannAverage,
    pub bounds: crate::bounds::BoundReport,
    pub weyl: Option<WeylTable>,
    pub packing: Theorem3Replay,
    pub all_pass: bool,
}

/// Runs the full verification pipeline and writes `report.json`,
/// `bounds.csv`, `spectrum.csv` and `weyl.svg` into `config.out_dir`.
/// Returns the in-memory results; the process exit status should be zero
/// exactly when `all_pass` is true.
pub fn run_check(config: &RunConfig) -> Result<CheckOutputs, PipelineError> {
    let mesh = config.mesh.build()?;
    // The moment-of-inertia chain needs the center of mass at the origin;
    // every other quantity is translation invariant.
    let stats0 = mesh_stats(&mesh);
    let mesh = mesh.translated(&(-stats0.barycenter.coords));
    let stats = mesh_stats(&mesh);

    let pair = assemble(&mesh).map_err(stage_err("laplace/assemble"))?;
    let spectrum = eigs(&pair, config.k, config.tol.min(1e-8)).map_err(stage_err("laplace/eigs"))?;
    let energy = mean_curvature_energy(&mesh);

    let params = InvariantParams {
        n_lines: config.n_lines,
        n_centers: config.n_centers,
        n_radii: config.n_radii,
        seed: config.seed,
    };
    let invariants = estimate_invariants(&mesh, &params).map_err(stage_err("invariants"))?;
    let grassmann = grassmann_average(
        &mesh,
        invariants.i_hat,
        config.n_planes,
        config.seed,
        config.grid_resolution,
    )
    .map_err(stage_err("invariants/grassmann"))?;

    let consts = constants(2).map_err(stage_err("bounds/constants"))?;
    let mut bounds =
        check_bounds(&spectrum, &invariants, &stats, &consts, energy, config.degree)
            .map_err(stage_err("bounds"))?;
    if let Some(filter) = &config.inequalities {
        bounds.records.retain(|r| filter.iter().any(|f| r.name.starts_with(f.as_str())));
    }

    let weyl = if config.k >= 20 {
        Some(weyl_scan(&spectrum, &invariants, &consts).map_err(stage_err("bounds/weyl"))?)
    } else {
        None
    };

    let packing =
        replay_theorem3(&mesh, &pair, config.pack_k, invariants.l_hat).map_err(stage_err("packing"))?;

    let all_pass = bounds.all_pass()
        && grassmann.pass
        && weyl.as_ref().map_or(true, |w| w.all_bounded)
        && packing.report.quotient_bound_ok
        && packing.report.gradient_bound_ok
        && packing.report.min_max_ok
        && packing.lambda_k_ok
        && packing.end_to_end_ok;

    write_check_artifacts(config, &mesh, &stats, &spectrum, &invariants, &grassmann, &bounds, &weyl, &packing, all_pass)?;

    Ok(CheckOutputs { mesh, spectrum, invariants, grassmann, bounds, weyl, packing, all_pass })
}

fn stats_json(stats: &crate::mesh::MeshStats, mesh: &TriMesh) -> String {
    format!(
        "{{\"vertices\":{},\"faces\":{},\"area\":{},\"genus\":{},\"euler_char\":{},\"components\":{},\"barycenter\":[{},{},{}]}}",
        mesh.vertex_count(),
        mesh.face_count(),
        json_f64(stats.area),
        stats.genus,
        stats.euler_char,
        stats.components,
        json_f64(stats.barycenter.x),
        json_f64(stats.barycenter.y),
        json_f64(stats.barycenter.z),
    )
}

fn packing_json(p: &Theorem3Replay) -> String {
    let kept: Vec<String> = p.kept.iter().map(|x| x.to_string()).collect();
    let filtered: Vec<String> = p.q_filtered.iter().map(|x| x.to_string()).collect();
    format!(
        "{{\"k\":{},\"alpha\":{},\"r\":{},\"packing\":{},\"rayleigh\":{},\"q_filtered\":[{}],\"kept\":[{}],\"max_kept_rayleigh\":{},\"end_to_end_bound\":{},\"end_to_end_ok\":{},\"lambda_k\":{},\"lambda_k_ok\":{},\"quotient_bound_ok\":{},\"gradient_bound_ok\":{},\"min_max_ok\":{}}}",
        p.k,
        json_f64(p.alpha),
        json_f64(p.r),
        p.packing.to_json(),
        crate::report::json_f64_array(&p.report.rayleigh),
        filtered.join(","),
        kept.join(","),
        json_f64(p.max_kept_rayleigh),
        json_f64(p.end_to_end_bound),
        p.end_to_end_ok,
        json_f64(p.lambda_k),
        p.lambda_k_ok,
        p.report.quotient_bound_ok,
        p.report.gradient_bound_ok,
        p.report.min_max_ok,
    )
}

#[allow(clippy::too_many_arguments)]
fn write_check_artifacts(
    config: &RunConfig,
    mesh: &TriMesh,
    stats: &crate::mesh::MeshStats,
    spectrum: &Spectrum,
    invariants: &crate::invariants::GeometricInvariants,
    grassmann: &GrassmannAverage,
    bounds: &crate::bounds::BoundReport,
    weyl: &Option<WeylTable>,
    packing: &Theorem3Replay,
    all_pass: bool,
) -> Result<(), PipelineError> {
    let err = stage_err("io");
    fs::create_dir_all(&config.out_dir).map_err(&err)?;

    let weyl_json = match weyl {
        None => "null".to_string(),
        Some(w) => format!(
            "{{\"empirical_sup\":{},\"bound\":{},\"all_bounded\":{}}}",
            json_f64(w.empirical_sup),
            json_f64(w.rows[0].bound),
            w.all_bounded
        ),
    };
    let report = format!(
        "{{\"config\":{},\"mesh\":{},\"spectrum\":{},\"invariants\":{},\"grassmann\":{},\"bounds\":{},\"weyl\":{},\"packing\":{},\"all_pass\":{}}}\n",
        config.to_json(),
        stats_json(stats, mesh),
        spectrum.to_json(),
        invariants.to_json(),
        grassmann.to_json(),
        bounds.to_json(),
        weyl_json,
        packing_json(packing),
        all_pass,
    );
    fs::write(config.out_dir.join("report.json"), report).map_err(&err)?;
    fs::write(config.out_dir.join("bounds.csv"), bounds.to_csv()).map_err(&err)?;

    let mut spec_csv = String::from("k,lambda,normalized,residual,cluster\n");
    for j in 0..spectrum.eigenvalues.len() {
        let _ = writeln!(
            spec_csv,
            "{},{},{},{},{}",
            j,
            fmt_f64(spectrum.eigenvalues[j]),
            fmt_f64(spectrum.normalized[j]),
            fmt_f64(spectrum.residuals[j]),
            spectrum.clusters[j]
        );
    }
    fs::write(config.out_dir.join("spectrum.csv"), spec_csv).map_err(&err)?;

    // Ratio plot over whatever eigenvalues exist; the bounded-ness verdict
    // itself is only asserted when k >= 20.
    let ks: Vec<f64> = (1..spectrum.eigenvalues.len()).map(|k| k as f64).collect();
    let ratios: Vec<f64> =
        (1..spectrum.eigenvalues.len()).map(|k| spectrum.normalized[k] / k as f64).collect();
    let svg = svg_line_plot(
        "normalized eigenvalue growth",
        &ks,
        &ratios,
        "k",
        "lambda_k * Vol / k",
    );
    fs::write(config.out_dir.join("weyl.svg"), svg).map_err(&err)?;
    Ok(())
}

/// `gen`: builds the mesh and writes it as OFF.
pub fn run_gen(source: &MeshSource, out: &Path) -> Result<TriMesh, PipelineError> {
    let mesh = source.build()?;
    save_off(&mesh, out).map_err(stage_err("io"))?;
    Ok(mesh)
}

/// `spectrum`: eigenvalues only, written as `spectrum.json` / `spectrum.csv`.
pub fn run_spectrum(config: &RunConfig) -> Result<Spectrum, PipelineError> {
    let mesh = config.mesh.build()?;
    let pair = assemble(&mesh).map_err(stage_err("laplace/assemble"))?;
    let spectrum = eigs(&pair, config.k, config.tol.min(1e-8)).map_err(stage_err("laplace/eigs"))?;
    fs::create_dir_all(&config.out_dir).map_err(stage_err("io"))?;
    fs::write(config.out_dir.join("spectrum.json"), spectrum.to_json() + "\n")
        .map_err(stage_err("io"))?;
    let mut csv = String::from("k,lambda,normalized,residual,cluster\n");
    for j in 0..spectrum.eigenvalues.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            j,
            fmt_f64(spectrum.eigenvalues[j]),
            fmt_f64(spectrum.normalized[j]),
            fmt_f64(spectrum.residuals[j]),
            spectrum.clusters[j]
        );
    }
    fs::write(config.out_dir.join("spectrum.csv"), csv).map_err(stage_err("io"))?;
    Ok(spectrum)
}

/// `index`: intersection-index estimate, written as `index.json`.
pub fn run_index(config: &RunConfig) -> Result<crate::invariants::IndexEstimate, PipelineError> {
    let mesh = config.mesh.build()?;
    let est = crate::invariants::intersection_index(&mesh, config.n_lines, config.seed, None)
        .map_err(stage_err("invariants/index"))?;
    fs::create_dir_all(&config.out_dir).map_err(stage_err("io"))?;
    let mut hist = String::from("{");
    for (i, (k, v)) in est.histogram.iter().enumerate() {
        if i > 0 {
            hist.push(',');
        }
        let _ = write!(hist, "\"{k}\":{v}");
    }
    hist.push('}');
    let json = format!(
        "{{\"i_hat\":{},\"histogram\":{},\"rejected\":{},\"n_lines\":{},\"seed\":{}}}\n",
        est.i_hat, hist, est.rejected, config.n_lines, config.seed
    );
    fs::write(config.out_dir.join("index.json"), json).map_err(stage_err("io"))?;
    Ok(est)
}

/// `concentration`: concentration estimate, written as `concentration.json`.
pub fn run_concentration(
    config: &RunConfig,
) -> Result<crate::invariants::ConcentrationEstimate, PipelineError> {
    let mesh = config.mesh.build()?;
    let est =
        crate::invariants::concentration(&mesh, config.n_centers, config.n_radii, config.seed);
    fs::create_dir_all(&config.out_dir).map_err(stage_err("io"))?;
    let json = format!(
        "{{\"l_hat\":{},\"witness\":{{\"center\":[{},{},{}],\"radius\":{}}},\"n_centers\":{},\"n_radii\":{},\"seed\":{}}}\n",
        json_f64(est.l_hat),
        json_f64(est.witness.0.x),
        json_f64(est.witness.0.y),
        json_f64(est.witness.0.z),
        json_f64(est.witness.1),
        config.n_centers,
        config.n_radii,
        config.seed
    );
    fs::write(config.out_dir.join("concentration.json"), json).map_err(stage_err("io"))?;
    Ok(est)
}

/// `shadow`: one projection, written as `shadow.json`.
pub fn run_shadow(
    config: &RunConfig,
    direction: &Vector3<f64>,
) -> Result<crate::invariants::ShadowResult, PipelineError> {
    let mesh = config.mesh.build()?;
    let s = shadow(&mesh, direction, config.grid_resolution).map_err(stage_err("invariants/shadow"))?;
    fs::create_dir_all(&config.out_dir).map_err(stage_err("io"))?;
    fs::write(config.out_dir.join("shadow.json"), s.to_json() + "\n").map_err(stage_err("io"))?;
    Ok(s)
}

/// How `pack` chooses its parameters.
#[derive(Debug, Clone)]
pub enum AlphaPolicy {
    /// Replay at order `k`: `K = 2k + 1`, `alpha = omega / (6 * 8^3 * k)`.
    ReplayK(usize),
    /// Explicit `K` and `alpha`.
    Explicit { k_sets: usize, alpha: f64 },
}

impl AlphaPolicy {
    /// `k:2` or `alpha:5:0.001` (K = 5, alpha = 0.001).
    pub fn parse(s: &str) -> Result<AlphaPolicy, PipelineError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |m: String| PipelineError { stage: "config".into(), message: m };
        match parts.as_slice() {
            ["k", k] => Ok(AlphaPolicy::ReplayK(
                k.parse().map_err(|_| bad(format!("bad replay order in {s:?}")))?,
            )),
            ["alpha", k_sets, alpha] => Ok(AlphaPolicy::Explicit {
                k_sets: k_sets.parse().map_err(|_| bad(format!("bad K in {s:?}")))?,
                alpha: alpha.parse().map_err(|_| bad(format!("bad alpha in {s:?}")))?,
            }),
            _ => Err(bad(format!("bad alpha policy {s:?}; expected k:<order> or alpha:<K>:<alpha>"))),
        }
    }
}

/// `pack`: packing construction / replay, written as `packing.json` and
/// `rayleigh.csv`. Returns whether every check passed.
pub fn run_pack(config: &RunConfig, policy: &AlphaPolicy) -> Result<bool, PipelineError> {
    let mesh = config.mesh.build()?;
    let pair = assemble(&mesh).map_err(stage_err("laplace/assemble"))?;
    fs::create_dir_all(&config.out_dir).map_err(stage_err("io"))?;

    match policy {
        AlphaPolicy::ReplayK(k) => {
            let inv_params = InvariantParams {
                n_lines: config.n_lines,
                n_centers: config.n_centers,
                n_radii: config.n_radii,
                seed: config.seed,
            };
            let conc = crate::invariants::concentration(&mesh, inv_params.n_centers, inv_params.n_radii, inv_params.seed);
            let replay = replay_theorem3(&mesh, &pair, *k, conc.l_hat).map_err(stage_err("packing"))?;
            fs::write(config.out_dir.join("packing.json"), packing_json(&replay) + "\n")
                .map_err(stage_err("io"))?;
            let mut csv = replay.report.to_csv();
            csv.push_str(&format!(
                "# max_kept_rayleigh,{}\n# end_to_end_bound,{}\n# lambda_k,{}\n",
                fmt_f64(replay.max_kept_rayleigh),
                fmt_f64(replay.end_to_end_bound),
                fmt_f64(replay.lambda_k),
            ));
            fs::write(config.out_dir.join("rayleigh.csv"), csv).map_err(stage_err("io"))?;
            Ok(replay.report.quotient_bound_ok
                && replay.report.gradient_bound_ok
                && replay.report.min_max_ok
                && replay.lambda_k_ok
                && replay.end_to_end_ok)
        }
        AlphaPolicy::Explicit { k_sets, alpha } => {
            let measure = crate::packing::build_measure(&mesh);
            let r = crate::packing::admissible_r(&measure, *alpha, crate::packing::AMBIENT_EXP)
                .map_err(stage_err("packing"))?;
            let packing = crate::packing::construct_sets(&measure, &mesh, *k_sets, *alpha, r)
                .map_err(stage_err("packing"))?;
            let report = crate::packing::test_functions(&mesh, &pair, &packing)
                .map_err(stage_err("packing"))?;
            fs::write(config.out_dir.join("packing.json"), packing.to_json() + "\n")
                .map_err(stage_err("io"))?;
            fs::write(config.out_dir.join("rayleigh.csv"), report.to_csv()).map_err(stage_err("io"))?;
            Ok(report.quotient_bound_ok && report.gradient_bound_ok && report.min_max_ok)
        }
    }
}

/// Canonical test corpus: the polynomials behind the implicit members.
pub mod corpus {
    use super::*;

    /// Quartic torus `(x^2 + y^2 + z^2 + R^2 - r^2)^2 - 4 R^2 (x^2 + y^2)`
    /// for `R = 2`, `r = 1`. Degree 4.
    pub fn quartic_torus() -> (Polynomial, (Point3<f64>, Point3<f64>)) {
        let poly: Polynomial = "(x^2 + y^2 + z^2 + 3)^2 - 16*(x^2 + y^2)".parse().unwrap();
        // Slightly irrational-looking box keeps lattice points off the
        // surface.
        let bbox = (Point3::new(-3.2043, -3.1971, -1.2153), Point3::new(3.2017, 3.2089, 1.2061));
        (poly, bbox)
    }

    /// Genus-2 surface `(x^2 (1 - x^2) - y^2)^2 + z^2 - 1/100`: a tube
    /// around a figure-eight curve. Degree 8.
    pub fn genus_two() -> (Polynomial, (Point3<f64>, Point3<f64>)) {
        let poly: Polynomial =
            "(x^2 - x^4 - y^2)^2 + z^2 - 0.01".parse().unwrap();
        let bbox = (Point3::new(-1.2161, -0.7069, -0.2357), Point3::new(1.2097, 0.7121, 0.2409));
        (poly, bbox)
    }

    /// Unit sphere as the zero set of `x^2 + y^2 + z^2 - 1`. Degree 2.
    pub fn implicit_sphere() -> (Polynomial, (Point3<f64>, Point3<f64>)) {
        let poly: Polynomial = "x^2 + y^2 + z^2 - 1".parse().unwrap();
        let bbox = (Point3::new(-1.3061, -1.2983, -1.3107), Point3::new(1.2957, 1.3043, 1.2899));
        (poly, bbox)
    }

    /// Histogram of observed crossing counts as a JSON object.
    pub fn histogram_json(hist: &BTreeMap<usize, usize>) -> String {
        let mut s = String::from("{");
        for (i, (k, v)) in hist.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "\"{k}\":{v}");
        }
        s.push('}');
        s
    }
}
