use super::*;
use crate::mesh::{gen_icosphere, gen_torus, merge_disjoint, recenter_unit_area};
use nalgebra::Matrix3;
use std::f64::consts::PI;

fn two_stacked_spheres(gap_centers: f64) -> TriMesh {
    let a = gen_icosphere(3, 1.0).unwrap();
    let b = a.translated(&Vector3::new(0.0, 0.0, gap_centers));
    merge_disjoint(&a, &b).unwrap()
}

#[test]
fn sphere_index_is_two() {
    let mesh = gen_icosphere(4, 1.0).unwrap();
    let est = intersection_index(&mesh, 10_000, 3, None).unwrap();
    assert_eq!(est.i_hat, 2, "histogram {:?}", est.histogram);
    for &count in est.histogram.keys() {
        assert_eq!(count % 2, 0, "odd crossing count {count}");
    }
    assert!(est.rejected < 100);
}

#[test]
fn torus_index_is_four() {
    let mesh = gen_torus(2.0, 1.0, 128, 64).unwrap();
    let est = intersection_index(&mesh, 50_000, 3, None).unwrap();
    assert_eq!(est.i_hat, 4, "histogram {:?}", est.histogram);
    for &count in est.histogram.keys() {
        assert_eq!(count % 2, 0);
    }
}

#[test]
fn stacked_spheres_index_is_four() {
    let mesh = two_stacked_spheres(3.0);
    let est = intersection_index(&mesh, 10_000, 3, None).unwrap();
    assert_eq!(est.i_hat, 4, "histogram {:?}", est.histogram);
}

#[test]
fn index_estimator_input_checks() {
    let mesh = gen_icosphere(2, 1.0).unwrap();
    assert!(matches!(
        intersection_index(&mesh, 0, 1, None),
        Err(InvariantError::NoSamples)
    ));
    // An eps larger than the mesh rejects every line.
    assert!(matches!(
        intersection_index(&mesh, 10, 1, Some(10.0)),
        Err(InvariantError::AllSamplesRejected)
    ));
}

#[test]
fn index_estimate_is_deterministic() {
    let mesh = gen_torus(2.0, 1.0, 32, 16).unwrap();
    let a = intersection_index(&mesh, 2000, 11, None).unwrap();
    let b = intersection_index(&mesh, 2000, 11, None).unwrap();
    assert_eq!(a.i_hat, b.i_hat);
    assert_eq!(a.histogram, b.histogram);
    let c = intersection_index(&mesh, 2000, 12, None).unwrap();
    // Different seed: same maximum, generally different tallies.
    assert_eq!(a.i_hat, c.i_hat);
}

#[test]
fn ball_area_cap_whole_and_empty() {
    let mesh = gen_icosphere(5, 1.0).unwrap();
    // A ball centered on the sphere cuts a cap of area exactly pi r^2
    // (chordal radius): 2 pi (1 - cos t) with r = 2 sin(t/2).
    let center = mesh.vertices()[17];
    let r = 0.5;
    let cap = ball_area(&mesh, &center, r);
    assert!(
        (cap - PI * r * r).abs() < 0.02 * PI * r * r,
        "cap {} vs {}",
        cap,
        PI * r * r
    );

    let whole = ball_area(&mesh, &Point3::origin(), 10.0);
    assert!((whole - mesh.total_area()).abs() < 1e-10 * mesh.total_area());

    assert_eq!(ball_area(&mesh, &center, 0.0), 0.0);
    assert!(ball_area(&mesh, &center, 1e-9) < 1e-14);
}

#[test]
fn ball_area_is_monotone_in_radius() {
    use rand::Rng;
    let mesh = gen_torus(2.0, 1.0, 48, 24).unwrap();
    let bvh = Bvh::build(&mesh);
    let mut rng = crate::rng::stream(5, 0xdd, 1);
    for _ in 0..8 {
        let center = Point3::new(
            rng.gen::<f64>() * 6.0 - 3.0,
            rng.gen::<f64>() * 6.0 - 3.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        let mut prev = 0.0;
        for step in 1..=20 {
            let r = 0.3 * step as f64;
            let area = bvh.ball_area(&center, r);
            assert!(area >= prev - 1e-12, "at r = {r}");
            prev = area;
        }
    }
}

#[test]
fn concentration_of_the_unit_sphere() {
    // The supremum ratio of the sphere is 4 pi, attained by balls slightly
    // larger than the sphere around the origin; caps only reach pi.
    let mesh = gen_icosphere(5, 1.0).unwrap();
    let est = concentration(&mesh, 64, 1024, 7);
    assert!(
        est.l_hat >= 0.98 * 4.0 * PI && est.l_hat <= 1.005 * 4.0 * PI,
        "L_hat = {} ({} of 4 pi)",
        est.l_hat,
        est.l_hat / (4.0 * PI)
    );
    // Witness: ball around the center enclosing the whole sphere.
    assert!(est.witness.0.coords.norm() < 0.2, "witness center {:?}", est.witness.0);
    assert!((est.witness.1 - 1.0).abs() < 0.05, "witness radius {}", est.witness.1);
}

#[test]
fn concentration_is_dilation_invariant() {
    let base = concentration(&gen_icosphere(3, 1.0).unwrap(), 16, 128, 5);
    let scaled = concentration(&gen_icosphere(3, 2.0).unwrap(), 16, 128, 5);
    assert!(
        (base.l_hat - scaled.l_hat).abs() < 1e-9 * base.l_hat,
        "{} vs {}",
        base.l_hat,
        scaled.l_hat
    );
}

#[test]
fn concentration_respects_index_bound() {
    // area(M ∩ B) <= (i / 2) * 4 pi * r^2 for closed surfaces.
    for (mesh, i_hat) in [
        (gen_icosphere(4, 1.0).unwrap(), 2usize),
        (gen_torus(2.0, 1.0, 96, 48).unwrap(), 4usize),
    ] {
        let est = concentration(&mesh, 32, 256, 2);
        let cap = (i_hat as f64 / 2.0) * 4.0 * PI;
        assert!(est.l_hat <= cap * 1.02, "L_hat = {} vs cap {cap}", est.l_hat);
    }
}

#[test]
fn shadow_of_the_sphere() {
    let mesh = gen_icosphere(5, 1.0).unwrap();
    for dir in [Vector3::z(), Vector3::new(1.0, 2.0, 3.0)] {
        let s = shadow(&mesh, &dir, 1024).unwrap();
        assert!((s.shadow_area - PI).abs() < 0.01 * PI, "shadow {}", s.shadow_area);
        assert!((s.signed_mass - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "mass {}", s.signed_mass);
        assert!(s.shadow_area <= s.signed_mass + s.error_bound);
        assert!(s.signed_mass <= mesh.total_area() + 1e-9);
    }
    assert!(matches!(
        shadow(&mesh, &Vector3::zeros(), 1024),
        Err(InvariantError::DegenerateDirection(_))
    ));
    assert!(matches!(
        shadow(&mesh, &Vector3::z(), 16),
        Err(InvariantError::GridTooCoarse(_))
    ));
}

#[test]
fn shadow_of_torus_along_axis_is_annulus() {
    let mesh = gen_torus(2.0, 1.0, 256, 128).unwrap();
    let s = shadow(&mesh, &Vector3::z(), 1024).unwrap();
    let annulus = PI * (9.0 - 1.0);
    assert!(
        (s.shadow_area - annulus).abs() < 0.01 * annulus,
        "shadow {} vs {annulus}",
        s.shadow_area
    );
    // Two sheets everywhere over the annulus.
    assert!((s.signed_mass - 2.0 * annulus).abs() < 0.02 * 2.0 * annulus);
    assert!(s.shadow_area <= mesh.total_area());
}

#[test]
fn flattened_sphere_projects_with_two_sheets() {
    // Squashing the sphere to thickness 1e-6 makes an (almost) doubly
    // covered disk: the shadow counts it once, the signed mass twice.
    let flat = gen_icosphere(4, 1.0)
        .unwrap()
        .transformed(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 1e-6)), &Vector3::zeros())
        .unwrap();
    let s = shadow(&flat, &Vector3::z(), 1024).unwrap();
    assert!(
        (s.shadow_area - s.signed_mass / 2.0).abs() < 0.02 * s.shadow_area,
        "shadow {} vs half mass {}",
        s.shadow_area,
        s.signed_mass / 2.0
    );
}

#[test]
fn shadow_bounds_hold_in_every_direction() {
    use rand::Rng;
    let mesh = gen_torus(2.0, 1.0, 64, 32).unwrap();
    let est = intersection_index(&mesh, 20_000, 1, None).unwrap();
    let mut rng = crate::rng::stream(1, 0x5d, 0);
    for _ in 0..12 {
        let dir = Vector3::new(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        );
        if dir.norm() < 1e-3 {
            continue;
        }
        let s = shadow(&mesh, &dir, 512).unwrap();
        let tol = s.error_bound + 1e-9;
        assert!(s.shadow_area <= s.signed_mass + tol);
        assert!(s.signed_mass <= est.i_hat as f64 * s.shadow_area + est.i_hat as f64 * tol);
        assert!(s.signed_mass <= mesh.total_area() + 1e-9);
        assert!(s.shadow_area <= mesh.total_area() + tol);
    }
}

#[test]
fn grassmann_average_sphere_attains_equality() {
    let mesh = gen_icosphere(5, 1.0).unwrap();
    let avg = grassmann_average(&mesh, 2, 200, 13, 1024).unwrap();
    assert!(avg.pass, "avg {} vs rhs {}", avg.avg_shadow, avg.lemma_rhs);
    // Every projection of the sphere is the unit disk.
    assert!((avg.avg_shadow - PI).abs() < 0.005 * PI, "avg {}", avg.avg_shadow);
    assert!((avg.lemma_rhs - PI).abs() < 0.005 * PI, "rhs {}", avg.lemma_rhs);
}

#[test]
fn grassmann_average_torus_passes_lemma() {
    let mesh = gen_torus(2.0, 1.0, 128, 64).unwrap();
    let avg = grassmann_average(&mesh, 4, 200, 13, 1024).unwrap();
    assert!(avg.pass, "avg {} vs rhs {} (mc {})", avg.avg_shadow, avg.lemma_rhs, avg.mc_error);
    // rhs = (2/4) * (1/4) * 8 pi^2 with the measured area.
    let expect_rhs = 0.5 * 0.25 * mesh.total_area();
    assert!((avg.lemma_rhs - expect_rhs).abs() < 1e-12 * expect_rhs);
    assert!(matches!(
        grassmann_average(&mesh, 4, 5, 13, 1024),
        Err(InvariantError::TooFewSamples { .. })
    ));
}

#[test]
fn moment_of_inertia_of_spheres() {
    let unit = gen_icosphere(5, 1.0).unwrap();
    let m1 = moment_of_inertia(&unit).unwrap();
    assert!((m1 - 4.0 * PI).abs() < 0.01 * 4.0 * PI, "moment {m1}");

    // Radius 2: area 16 pi, |x|^2 = 4 on the surface.
    let double = gen_icosphere(5, 2.0).unwrap();
    let m2 = moment_of_inertia(&double).unwrap();
    assert!((m2 - 64.0 * PI).abs() < 0.01 * 64.0 * PI, "moment {m2}");

    let moved = unit.translated(&Vector3::new(3.0, 0.0, 0.0));
    assert!(matches!(
        moment_of_inertia(&moved),
        Err(InvariantError::NotRecentered(_))
    ));
}

#[test]
fn moment_respects_projection_lower_bound() {
    // moment >= 2 (2 Vol / (i 4 pi))^2 * (pi / 2) after recentering.
    for (mesh, i_hat) in [
        (gen_icosphere(4, 1.0).unwrap(), 2.0),
        (gen_torus(2.0, 1.0, 96, 48).unwrap(), 4.0),
    ] {
        let centered = recenter_unit_area(&mesh);
        let moment = moment_of_inertia(&centered).unwrap();
        let vol = centered.total_area();
        let bound = 2.0 * (2.0 * vol / (i_hat * 4.0 * PI)).powi(2) * (PI / 2.0);
        assert!(moment >= bound, "moment {moment} < bound {bound}");
    }
}

fn disk_cells(r_inner: f64, r_outer: f64, offset: [f64; 2], n: usize) -> Vec<Cell> {
    let s = 2.0 * r_outer / n as f64;
    let mut cells = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = -r_outer + (i as f64 + 0.5) * s + offset[0];
            let y = -r_outer + (j as f64 + 0.5) * s + offset[1];
            let d = ((x - offset[0]).powi(2) + (y - offset[1]).powi(2)).sqrt();
            if d >= r_inner && d <= r_outer {
                cells.push(Cell { center: [x, y], area: s * s });
            }
        }
    }
    cells
}

#[test]
fn rearrangement_disk_is_near_equality() {
    let cells = disk_cells(0.0, 1.0, [0.0, 0.0], 400);
    let check = rearrangement_check(&cells).unwrap();
    assert!(check.pass);
    // Omega is itself (a pixelation of) a centered disk: equality up to
    // the boundary-cell perimeter error.
    let s = 2.0 / 400.0;
    let boundary_budget = 2.0 * PI * s * 2.0; // boundary strip area x d^2 ~ 1
    assert!(
        (check.integral_omega - check.integral_star).abs()
            < boundary_budget + check.discretization_bound,
        "omega {} star {}",
        check.integral_omega,
        check.integral_star
    );
}

#[test]
fn rearrangement_annulus_strictly_dominates() {
    // Annulus 1 <= |x| <= sqrt(2): same area as the unit disk, second
    // moment 3 pi / 2 vs pi / 2.
    let cells = disk_cells(1.0, 2.0f64.sqrt(), [0.0, 0.0], 600);
    let check = rearrangement_check(&cells).unwrap();
    assert!(check.pass);
    assert!(check.integral_omega > check.integral_star * 2.5, "omega {} star {}", check.integral_omega, check.integral_star);
    assert!((check.integral_omega - 1.5 * PI).abs() < 0.05 * 1.5 * PI);
}

#[test]
fn rearrangement_offcenter_disk_dominates() {
    let cells = disk_cells(0.0, 1.0, [2.0, 0.0], 400);
    let check = rearrangement_check(&cells).unwrap();
    assert!(check.pass);
    // Parallel-axis: second moment grows by (distance^2) * area.
    let expect = PI / 2.0 + 4.0 * PI;
    assert!(
        (check.integral_omega - expect).abs() < 0.05 * expect,
        "omega {}",
        check.integral_omega
    );
    assert!(check.integral_omega > check.integral_star * 5.0);

    assert!(matches!(rearrangement_check(&[]), Err(InvariantError::EmptyCellSet)));
}

#[test]
fn estimate_invariants_is_reproducible() {
    let mesh = gen_torus(2.0, 1.0, 48, 24).unwrap();
    let params = InvariantParams { n_lines: 1500, n_centers: 24, n_radii: 96, seed: 99 };
    let a = estimate_invariants(&mesh, &params).unwrap();
    let b = estimate_invariants(&mesh, &params).unwrap();
    assert_eq!(a.i_hat, b.i_hat);
    assert_eq!(a.i_histogram, b.i_histogram);
    assert_eq!(a.l_hat.to_bits(), b.l_hat.to_bits());
    assert_eq!(a.moment_of_inertia.to_bits(), b.moment_of_inertia.to_bits());
    let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(json["seed"], 99);
    assert_eq!(json["i_hat"], 4);
}
