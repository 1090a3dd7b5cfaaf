//! Batch front end over the library pipeline. Every command is a thin
//! wrapper: parse flags (plus an optional flat config file; flags win),
//! call one pipeline entry point, exit nonzero when a check fails.

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use specbounds::pipeline::{
    apply_config_file, run_check, run_concentration, run_gen, run_index, run_pack, run_shadow,
    run_spectrum, AlphaPolicy, MeshSource, RunConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "specbounds", about = "Spectra of closed surfaces and their extrinsic eigenvalue bounds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Mesh source: file path or generator spec
    /// (icosphere:S[:R], torus:R:r:nu:nv, ellipsoid:S:a:b:c, implicit:poly.txt:res).
    #[arg(long)]
    mesh: Option<String>,
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Highest eigenvalue index to compute.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Line samples for the intersection index.
    #[arg(long)]
    lines: Option<usize>,
    /// Random surface probes for the concentration scan.
    #[arg(long)]
    centers: Option<usize>,
    /// Radii per probe in the concentration scan.
    #[arg(long)]
    radii: Option<usize>,
    /// Shadow raster resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Projection planes for the shadow average.
    #[arg(long)]
    planes: Option<usize>,
    /// Polynomial degree bound for algebraic meshes.
    #[arg(long)]
    degree: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it as OFF.
    Gen {
        #[command(flatten)]
        common: CommonOpts,
        /// Icosphere subdivisions (shorthand for --mesh icosphere:N).
        #[arg(long)]
        subdiv: Option<u32>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Torus radii (used with --nu/--nv).
        #[arg(long, value_name = "R")]
        big_r: Option<f64>,
        #[arg(long, value_name = "r")]
        small_r: Option<f64>,
        #[arg(long)]
        nu: Option<usize>,
        #[arg(long)]
        nv: Option<usize>,
        /// Polynomial file for implicit surfaces.
        #[arg(long)]
        poly: Option<PathBuf>,
        /// Marching-cubes resolution for implicit surfaces.
        #[arg(long)]
        res: Option<usize>,
    },
    /// Compute the spectrum of a mesh.
    Spectrum {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Estimate the intersection index by line sampling.
    Index {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Estimate the volume concentration constant.
    Concentration {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Shadow area of one projection.
    Shadow {
        #[command(flatten)]
        common: CommonOpts,
        /// Projection direction "x,y,z".
        #[arg(long, default_value = "0,0,1")]
        dir: String,
    },
    /// Full pipeline: spectrum, invariants, every bound, packing replay.
    Check {
        #[command(flatten)]
        common: CommonOpts,
        /// Restrict the report to these inequalities (comma separated).
        #[arg(long)]
        inequalities: Option<String>,
        /// Packing replay order inside check.
        #[arg(long)]
        pack_k: Option<usize>,
    },
    /// Packing construction and test-function checks.
    Pack {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of sets for an explicit construction.
        #[arg(long, value_name = "K")]
        k_sets: Option<usize>,
        /// Policy: k:<order> for a replay, alpha:<K>:<alpha> explicit.
        #[arg(long)]
        alpha_policy: Option<String>,
    },
}

fn build_config(common: &CommonOpts) -> Result<RunConfig, String> {
    let mut config = RunConfig::new(MeshSource::Icosphere { subdivisions: 4, radius: 1.0 });
    if let Some(path) = &common.config {
        apply_config_file(&mut config, path).map_err(|e| e.to_string())?;
    }
    if let Some(m) = &common.mesh {
        config.mesh = MeshSource::parse(m).map_err(|e| e.to_string())?;
    }
    if let Some(k) = common.k {
        config.k = k;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(lines) = common.lines {
        config.n_lines = lines;
    }
    if let Some(centers) = common.centers {
        config.n_centers = centers;
    }
    if let Some(radii) = common.radii {
        config.n_radii = radii;
    }
    if let Some(grid) = common.grid {
        config.grid_resolution = grid;
    }
    if let Some(planes) = common.planes {
        config.n_planes = planes;
    }
    if let Some(degree) = common.degree {
        config.degree = Some(degree);
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SPECBOUNDS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Gen { common, subdiv, radius, big_r, small_r, nu, nv, poly, res } => {
            let source = if let Some(s) = subdiv {
                MeshSource::Icosphere { subdivisions: s, radius }
            } else if let (Some(big_r), Some(small_r), Some(nu), Some(nv)) = (big_r, small_r, nu, nv) {
                MeshSource::Torus { big_r, small_r, nu, nv }
            } else if let Some(poly) = poly {
                MeshSource::Implicit { poly_path: poly, resolution: res.unwrap_or(96), bbox: None }
            } else if let Some(m) = &common.mesh {
                MeshSource::parse(m).map_err(|e| e.to_string())?
            } else {
                return Err("gen needs --subdiv, --big-r/--small-r/--nu/--nv, --poly or --mesh".into());
            };
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("mesh.off"));
            let mesh = run_gen(&source, &out).map_err(|e| e.to_string())?;
            println!(
                "wrote {} ({} vertices, {} faces)",
                out.display(),
                mesh.vertex_count(),
                mesh.face_count()
            );
            Ok(true)
        }
        Command::Spectrum { common } => {
            let config = build_config(&common)?;
            let spectrum = run_spectrum(&config).map_err(|e| e.to_string())?;
            for (j, l) in spectrum.eigenvalues.iter().enumerate() {
                println!("lambda_{j} = {l:.9e}  (normalized {:.9e})", spectrum.normalized[j]);
            }
            Ok(true)
        }
        Command::Index { common } => {
            let config = build_config(&common)?;
            let est = run_index(&config).map_err(|e| e.to_string())?;
            println!("i_hat = {}  (histogram {:?}, rejected {})", est.i_hat, est.histogram, est.rejected);
            Ok(true)
        }
        Command::Concentration { common } => {
            let config = build_config(&common)?;
            let est = run_concentration(&config).map_err(|e| e.to_string())?;
            println!(
                "L_hat = {:.9e} at center ({:.6}, {:.6}, {:.6}), r = {:.6e}",
                est.l_hat, est.witness.0.x, est.witness.0.y, est.witness.0.z, est.witness.1
            );
            Ok(true)
        }
        Command::Shadow { common, dir } => {
            let config = build_config(&common)?;
            let parts: Vec<f64> = dir
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad direction {dir:?}")))
                .collect::<Result<_, _>>()?;
            if parts.len() != 3 {
                return Err(format!("bad direction {dir:?}"));
            }
            let s = run_shadow(&config, &Vector3::new(parts[0], parts[1], parts[2]))
                .map_err(|e| e.to_string())?;
            println!(
                "shadow_area = {:.9e}, signed_mass = {:.9e} (raster error <= {:.3e})",
                s.shadow_area, s.signed_mass, s.error_bound
            );
            Ok(true)
        }
        Command::Check { common, inequalities, pack_k } => {
            let mut config = build_config(&common)?;
            if let Some(list) = inequalities {
                config.inequalities = Some(list.split(',').map(|s| s.trim().to_string()).collect());
            }
            if let Some(pk) = pack_k {
                config.pack_k = pk;
            }
            let out = run_check(&config).map_err(|e| e.to_string())?;
            for r in &out.bounds.records {
                println!(
                    "{:22} lhs {:>13.6e}  rhs {:>13.6e}  {}",
                    r.name,
                    r.lhs,
                    r.rhs,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            println!(
                "grassmann: avg {:.6e} >= rhs {:.6e} ({})",
                out.grassmann.avg_shadow,
                out.grassmann.lemma_rhs,
                if out.grassmann.pass { "pass" } else { "FAIL" }
            );
            println!("all_pass = {}", out.all_pass);
            Ok(out.all_pass)
        }
        Command::Pack { common, k_sets, alpha_policy } => {
            let config = build_config(&common)?;
            let policy = match (alpha_policy, k_sets) {
                (Some(p), _) => AlphaPolicy::parse(&p).map_err(|e| e.to_string())?,
                (None, Some(k_sets)) => {
                    // Default alpha saturating the hypothesis for this K.
                    AlphaPolicy::Explicit { k_sets, alpha: f64::NAN }
                }
                (None, None) => AlphaPolicy::ReplayK(2),
            };
            let policy = match policy {
                AlphaPolicy::Explicit { k_sets, alpha } if alpha.is_nan() => {
                    let mesh = config.mesh.build().map_err(|e| e.to_string())?;
                    AlphaPolicy::Explicit {
                        k_sets,
                        alpha: mesh.total_area() / (2.0 * 512.0 * k_sets as f64),
                    }
                }
                p => p,
            };
            let ok = run_pack(&config, &policy).map_err(|e| e.to_string())?;
            println!("packing checks {}", if ok { "pass" } else { "FAIL" });
            Ok(ok)
        }
    }
}
