use super::*;
use crate::mesh::io::{parse_obj, parse_off};
use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use std::f64::consts::PI;

pub(crate) fn regular_tetrahedron(edge: f64) -> TriMesh {
    let s = edge / 8.0f64.sqrt();
    let vertices = vec![
        Point3::new(s, s, s),
        Point3::new(s, -s, -s),
        Point3::new(-s, s, -s),
        Point3::new(-s, -s, s),
    ];
    let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    TriMesh::new(vertices, faces).unwrap()
}

fn tetra_off(missing_face: bool) -> String {
    let mesh = regular_tetrahedron(1.0);
    let nf = if missing_face { 3 } else { 4 };
    let mut s = format!("OFF\n4 {nf} 6\n");
    for v in mesh.vertices() {
        s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces().iter().take(nf) {
        s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    s
}

#[test]
fn tetrahedron_off_round_trip_and_stats() {
    let mesh = parse_off(&tetra_off(false)).unwrap();
    assert_eq!(mesh.vertex_count(), 4);
    assert_eq!(mesh.face_count(), 4);
    assert_eq!(mesh.euler_characteristic(), 2);
    let stats = mesh_stats(&mesh);
    assert_eq!(stats.genus, 0);
    // 4 equilateral triangles of unit edge
    let expect = 4.0 * 3.0f64.sqrt() / 4.0;
    assert!((mesh.total_area() - expect).abs() < 1e-12);
}

#[test]
fn open_surface_is_rejected_with_boundary_edges() {
    let err = parse_off(&tetra_off(true)).unwrap_err();
    match err {
        MeshError::Invalid(report) => {
            assert!(
                report.violations.iter().any(|v| matches!(v, Violation::BoundaryEdge { .. })),
                "{report}"
            );
        }
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn flipped_face_is_rejected_as_orientation_error() {
    let mesh = regular_tetrahedron(1.0);
    let mut faces = mesh.faces().to_vec();
    faces[0] = [faces[0][0], faces[0][2], faces[0][1]];
    let err = TriMesh::new(mesh.vertices().to_vec(), faces).unwrap_err();
    match err {
        MeshError::Invalid(report) => {
            assert!(
                report
                    .violations
                    .iter()
                    .any(|v| matches!(v, Violation::InconsistentOrientation { .. })),
                "{report}"
            );
        }
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn obj_icosahedron_area_matches_formula() {
    // Icosahedron on vertices (0, ±1, ±phi) and cyclic: edge length 2, so
    // the area is 20 * (sqrt(3) / 4) * 4.
    let base = gen_icosphere(0, 1.0).unwrap();
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let scale = (1.0 + phi * phi).sqrt();
    let mut obj = String::new();
    for v in base.vertices() {
        obj.push_str(&format!("v {} {} {}\n", v.x * scale, v.y * scale, v.z * scale));
    }
    for f in base.faces() {
        obj.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let mesh = parse_obj(&obj).unwrap();
    let expect = 20.0 * 3.0f64.sqrt() / 4.0 * 4.0;
    assert!(
        (mesh.total_area() - expect).abs() < 1e-10,
        "area {} vs {expect}",
        mesh.total_area()
    );
}

#[test]
fn obj_quads_are_rejected() {
    let obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    assert!(matches!(parse_obj(obj), Err(MeshError::Parse(_))));
}

#[test]
fn icosphere_counts_and_area() {
    let base = gen_icosphere(0, 1.0).unwrap();
    assert_eq!(base.vertex_count(), 12);
    assert_eq!(base.face_count(), 20);

    let fine = gen_icosphere(5, 1.0).unwrap();
    assert_eq!(fine.face_count(), 20 * 4usize.pow(5));
    assert_eq!(mesh_stats(&fine).genus, 0);
    let area = fine.total_area();
    assert!(area < 4.0 * PI);
    assert!((area - 4.0 * PI).abs() < 0.001 * 4.0 * PI, "area {area}");
}

#[test]
fn icosphere_dilation_scales_area_exactly() {
    let unit = gen_icosphere(3, 1.0).unwrap();
    let double = gen_icosphere(3, 2.0).unwrap();
    let ratio = double.total_area() / unit.total_area();
    assert!((ratio - 4.0).abs() < 1e-12, "ratio {ratio}");
}

#[test]
fn icosphere_guards() {
    assert!(gen_icosphere(10, 1.0).is_err());
    assert!(gen_icosphere(2, 0.0).is_err());
}

#[test]
fn torus_topology_and_area() {
    let coarse = gen_torus(2.0, 1.0, 64, 32).unwrap();
    assert_eq!(coarse.euler_characteristic(), 0);
    assert_eq!(mesh_stats(&coarse).genus, 1);

    let fine = gen_torus(2.0, 1.0, 256, 128).unwrap();
    let expect = 8.0 * PI * PI;
    assert!(
        (fine.total_area() - expect).abs() < 0.005 * expect,
        "area {} vs {expect}",
        fine.total_area()
    );
}

#[test]
fn torus_degenerate_parameters() {
    assert!(gen_torus(1.0, 1.0, 64, 32).is_err());
    assert!(gen_torus(2.0, 1.0, 2, 32).is_err());
}

#[test]
fn stats_barycenter_symmetry_and_translation() {
    let sphere = gen_icosphere(3, 1.0).unwrap();
    let stats = mesh_stats(&sphere);
    assert!(stats.barycenter.coords.norm() < 1e-12);

    let moved = sphere.translated(&Vector3::new(5.0, 0.0, 0.0));
    let stats2 = mesh_stats(&moved);
    assert!((stats2.barycenter - Point3::new(5.0, 0.0, 0.0)).norm() < 1e-9);
    assert_eq!(stats2.genus, 0);
}

#[test]
fn recenter_unit_area_normalizes_and_is_idempotent() {
    let torus = gen_torus(2.0, 1.0, 96, 48).unwrap();
    let moved = torus.translated(&Vector3::new(3.0, -1.0, 0.5));
    let norm = recenter_unit_area(&moved);
    assert!((norm.total_area() - 1.0).abs() < 1e-12);
    assert!(mesh_stats(&norm).barycenter.coords.norm() < 1e-12);

    let again = recenter_unit_area(&norm);
    let drift: f64 = norm
        .vertices()
        .iter()
        .zip(again.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(drift < 1e-12, "drift {drift}");

    // The sphere's scale factor is 1 / sqrt(area).
    let sphere = gen_icosphere(4, 1.0).unwrap();
    let unit = recenter_unit_area(&sphere);
    let expected_scale = 1.0 / sphere.total_area().sqrt();
    let got = unit.vertices()[0].coords.norm() / sphere.vertices()[0].coords.norm();
    assert!((got - expected_scale).abs() < 1e-12);
}

#[test]
fn dilation_scales_area_and_barycenter() {
    let mesh = gen_torus(2.0, 1.0, 48, 24).unwrap().translated(&Vector3::new(1.0, 2.0, 3.0));
    let base_stats = mesh_stats(&mesh);
    for t in [0.5, 2.0, 10.0] {
        let scaled = mesh.scaled(t).unwrap();
        let stats = mesh_stats(&scaled);
        assert!((scaled.total_area() - t * t * mesh.total_area()).abs() < 1e-9 * scaled.total_area());
        assert!((stats.barycenter.coords - base_stats.barycenter.coords * t).norm() < 1e-9 * t);
    }
}

#[test]
fn merged_spheres_have_genus_zero_each() {
    let a = gen_icosphere(2, 1.0).unwrap();
    let b = gen_icosphere(2, 1.0).unwrap().translated(&Vector3::new(0.0, 0.0, 3.0));
    let two = merge_disjoint(&a, &b).unwrap();
    let stats = mesh_stats(&two);
    assert_eq!(stats.components, 2);
    assert_eq!(stats.euler_char, 4);
    assert_eq!(stats.genus, 0);
}

#[test]
fn generator_off_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (name, mesh) in [
        ("ico", gen_icosphere(2, 1.3).unwrap()),
        ("torus", gen_torus(2.0, 0.7, 24, 12).unwrap()),
    ] {
        let path = dir.path().join(format!("{name}.off"));
        save_off(&mesh, &path).unwrap();
        let back = load_off(&path).unwrap();
        assert_eq!(mesh.vertex_count(), back.vertex_count());
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
        assert_eq!(mesh.faces(), back.faces());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn off_round_trip_random_transforms(
        tx in -10.0f64..10.0,
        ty in -10.0f64..10.0,
        tz in -10.0f64..10.0,
        angle in 0.0f64..std::f64::consts::TAU,
        scale in 0.1f64..10.0,
    ) {
        let base = gen_icosphere(1, 1.0).unwrap();
        let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), angle);
        let mesh = base
            .transformed(&(rot.into_inner() * scale), &Vector3::new(tx, ty, tz))
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.off");
        save_off(&mesh, &path).unwrap();
        let back = load_off(&path).unwrap();
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
            prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
            prop_assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
    }
}

mod implicit_tests {
    use super::*;
    use crate::pipeline::corpus;

    #[test]
    fn polynomial_parser_basics() {
        let p: Polynomial = "x^2 + y^2 + z^2 - 1".parse().unwrap();
        assert_eq!(p.degree(), 2);
        assert!((p.eval(&Point3::new(1.0, 0.0, 0.0))).abs() < 1e-15);
        assert!((p.eval(&Point3::new(0.0, 2.0, 0.0)) - 3.0).abs() < 1e-15);

        let q: Polynomial = "(x + y)^2 - x^2 - 2*x*y - y^2".parse().unwrap();
        assert_eq!(q.term_count(), 0, "expansion cancels: {q}");

        let (torus, _) = corpus::quartic_torus();
        assert_eq!(torus.degree(), 4);
        let (g2, _) = corpus::genus_two();
        assert_eq!(g2.degree(), 8);
    }

    #[test]
    fn polynomial_parser_rejects_garbage() {
        assert!("x^2 +".parse::<Polynomial>().is_err());
        assert!("(x + y".parse::<Polynomial>().is_err());
        assert!("x @ 2".parse::<Polynomial>().is_err());
        assert!("w + 1".parse::<Polynomial>().is_err());
    }

    #[test]
    fn implicit_sphere_geometry() {
        let (poly, bbox) = corpus::implicit_sphere();
        let mesh = gen_implicit(&poly, bbox, 64).unwrap();
        let stats = mesh_stats(&mesh);
        assert_eq!(stats.genus, 0);
        assert!(
            (mesh.total_area() - 4.0 * PI).abs() < 0.01 * 4.0 * PI,
            "area {}",
            mesh.total_area()
        );
        // All vertices on the unit sphere up to interpolation error.
        let worst = mesh
            .vertices()
            .iter()
            .map(|p| (p.coords.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 5e-3, "worst radial error {worst}");
    }

    #[test]
    fn implicit_torus_genus() {
        let (poly, bbox) = corpus::quartic_torus();
        let mesh = gen_implicit(&poly, bbox, 80).unwrap();
        assert_eq!(mesh_stats(&mesh).genus, 1);
        let expect = 8.0 * PI * PI;
        assert!(
            (mesh.total_area() - expect).abs() < 0.02 * expect,
            "area {} vs {expect}",
            mesh.total_area()
        );
    }

    #[test]
    fn implicit_genus_two() {
        let (poly, bbox) = corpus::genus_two();
        let mesh = gen_implicit(&poly, bbox, 96).unwrap();
        assert_eq!(mesh_stats(&mesh).genus, 2);
    }

    #[test]
    fn unbounded_zero_set_touches_bbox() {
        let poly: Polynomial = "x + y + z".parse().unwrap();
        let bbox = (Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0));
        assert!(matches!(
            gen_implicit(&poly, bbox, 32),
            Err(MeshError::ZeroSetTouchesBoundary)
        ));
    }

    #[test]
    fn empty_zero_set() {
        let poly: Polynomial = "x^2 + y^2 + z^2 + 1".parse().unwrap();
        let bbox = (Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0));
        assert!(matches!(gen_implicit(&poly, bbox, 24), Err(MeshError::EmptyZeroSet)));
    }

    #[test]
    fn marching_cubes_area_converges() {
        let (poly, bbox) = corpus::implicit_sphere();
        let areas: Vec<f64> = [24usize, 48, 96]
            .iter()
            .map(|&res| gen_implicit(&poly, bbox, res).unwrap().total_area())
            .collect();
        let d_coarse = (areas[1] - areas[0]).abs();
        let d_fine = (areas[2] - areas[1]).abs();
        assert!(d_fine < 4.0 * d_coarse, "no convergence: {areas:?}");
    }

    #[test]
    fn random_quadric_fields_mesh_watertight() {
        // Random quadric fields: generic zero sets inside the box must
        // still come out as valid closed meshes.
        use rand::Rng;
        for case in 0..8u64 {
            let mut rng = crate::rng::stream(42, 0x3c, case);
            let mut terms = vec![format!("{}", rng.gen_range(0.2..1.0))];
            for (i, v) in ["x", "y", "z"].iter().enumerate() {
                let c: f64 = rng.gen_range(0.5..2.0);
                let s: f64 = rng.gen_range(-0.4..0.4);
                terms.push(format!("{c}*{v}^2"));
                terms.push(format!("{s}*{v}"));
                let w = ["y", "z", "x"][i];
                let m: f64 = rng.gen_range(-0.3..0.3);
                terms.push(format!("{m}*{v}*{w}"));
            }
            let expr = format!("{} - 1", terms.join(" + "));
            let poly: Polynomial = expr.parse().unwrap();
            let bbox = (Point3::new(-3.017, -3.011, -3.007), Point3::new(3.013, 3.003, 3.021));
            match gen_implicit(&poly, bbox, 40) {
                Ok(mesh) => {
                    assert!(mesh.total_area() > 0.0);
                }
                Err(MeshError::EmptyZeroSet) | Err(MeshError::ZeroSetTouchesBoundary) => {}
                Err(other) => panic!("case {case}: {other}"),
            }
        }
    }
}

#[test]
fn transformed_by_rotation_preserves_area() {
    let mesh = gen_torus(2.0, 1.0, 32, 16).unwrap();
    let rot = Rotation3::from_axis_angle(&Vector3::x_axis(), 0.73);
    let moved = mesh.transformed(&rot.into_inner(), &Vector3::new(0.1, 0.2, 0.3)).unwrap();
    assert!((moved.total_area() - mesh.total_area()).abs() < 1e-10);
}

#[test]
fn ellipsoid_scales_sphere() {
    let e = gen_ellipsoid(3, 2.0, 1.0, 1.0).unwrap();
    let (lo, hi) = e.bounding_box();
    assert!((hi.x - lo.x) > 3.9 && (hi.x - lo.x) <= 4.0 + 1e-12);
    assert!((hi.y - lo.y) > 1.9 && (hi.y - lo.y) <= 2.0 + 1e-12);
    assert_eq!(mesh_stats(&e).genus, 0);
}

#[test]
fn anisotropic_squash_keeps_mesh_valid() {
    // Near-flat closed surface; used as the degenerate immersed stand-in.
    let squashed = gen_icosphere(3, 1.0)
        .unwrap()
        .transformed(&Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 1e-6)), &Vector3::zeros())
        .unwrap();
    assert_eq!(mesh_stats(&squashed).genus, 0);
}
