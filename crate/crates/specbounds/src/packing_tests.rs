use super::*;
use crate::laplace::assemble;
use crate::mesh::tests::regular_tetrahedron;
use crate::mesh::{gen_icosphere, merge_disjoint};
use nalgebra::Vector3;
use std::f64::consts::PI;

fn two_far_spheres(distance: f64) -> crate::mesh::TriMesh {
    let a = gen_icosphere(3, 1.0).unwrap();
    let b = a.translated(&Vector3::new(distance, 0.0, 0.0));
    merge_disjoint(&a, &b).unwrap()
}

#[test]
fn measure_atoms_match_faces() {
    let tetra = regular_tetrahedron(1.5);
    let measure = build_measure(&tetra);
    assert_eq!(measure.atom_count(), 4);
    let expect = 3.0f64.sqrt() / 4.0 * 1.5 * 1.5;
    for &w in measure.weights() {
        assert!((w - expect).abs() < 1e-12);
    }

    let sphere = gen_icosphere(5, 1.0).unwrap();
    let m = build_measure(&sphere);
    assert_eq!(m.atom_count(), sphere.face_count());
    assert!((m.total() - 4.0 * PI).abs() < 0.001 * 4.0 * PI);

    let torus = crate::mesh::gen_torus(2.0, 1.0, 64, 32).unwrap();
    assert_eq!(build_measure(&torus).atom_count(), 2 * 64 * 32);
}

#[test]
fn admissible_r_follows_cap_area_growth() {
    // With ball masses growing like pi r^2 on the unit sphere, the largest
    // admissible radius solves 2 * 8^3 * pi r^2 = alpha.
    let sphere = gen_icosphere(5, 1.0).unwrap();
    let measure = build_measure(&sphere);
    let k = 2.0;
    let alpha = measure.total() / (6.0 * 512.0 * k);
    let r = admissible_r(&measure, alpha, 3).unwrap();
    let analytic = (alpha / (2.0 * 512.0 * PI)).sqrt();
    assert!(r <= analytic * 1.02, "r = {r} vs analytic {analytic}");
    // One geometric grid step below the analytic value at worst.
    let grid_ratio = ((sphere.bbox_diagonal() / 3.0) / (sphere.bbox_diagonal() * 1e-5))
        .powf(1.0 / 63.0);
    assert!(r >= analytic / grid_ratio / 1.02, "r = {r} vs analytic {analytic}");
}

#[test]
fn admissible_r_rejects_vacuous_budget() {
    let sphere = gen_icosphere(3, 1.0).unwrap();
    let measure = build_measure(&sphere);
    let err = admissible_r(&measure, 1e-30, 3).unwrap_err();
    assert!(matches!(err, PackingError::NoAdmissibleR { .. }));
}

#[test]
fn admissible_r_is_local_for_far_components() {
    let one = build_measure(&gen_icosphere(3, 1.0).unwrap());
    let two = build_measure(&two_far_spheres(100.0));
    let alpha = one.total() / (2.0 * 512.0 * 4.0);
    let r1 = admissible_r(&one, alpha, 3).unwrap();
    let r2 = admissible_r(&two, alpha, 3).unwrap();
    // Separation does not change the worst local ball mass; only the grid
    // (whose range follows the bbox diagonal) differs between the two runs.
    let analytic = (alpha / (2.0 * 512.0 * PI)).sqrt();
    assert!(r1 <= analytic * 1.02 && r2 <= analytic * 1.02);
    assert!(r1 / r2 < 2.0 && r2 / r1 < 2.0, "r1 = {r1}, r2 = {r2}");
}

#[test]
fn construct_single_set() {
    let sphere = gen_icosphere(3, 1.0).unwrap();
    let measure = build_measure(&sphere);
    let alpha = measure.total() / (2.0 * 512.0);
    let r = admissible_r(&measure, alpha, 3).unwrap();
    let packing = construct_sets(&measure, &sphere, 1, alpha, r).unwrap();
    assert_eq!(packing.sets.len(), 1);
    assert!(packing.measures[0] >= alpha);
    assert!(packing.min_pairwise_distance.is_infinite());
}

#[test]
fn construct_rejects_alpha_above_hypothesis() {
    let sphere = gen_icosphere(2, 1.0).unwrap();
    let measure = build_measure(&sphere);
    let too_big = measure.total() / (2.0 * 512.0); // valid only for K = 1
    let err = construct_sets(&measure, &sphere, 2, too_big, 0.01).unwrap_err();
    assert!(matches!(err, PackingError::AlphaTooLarge { .. }));
}

#[test]
fn far_spheres_split_into_components() {
    let mesh = two_far_spheres(100.0);
    let measure = build_measure(&mesh);
    let alpha = 4.0 * PI / 10.0;
    // alpha is within the hypothesis for K = 2 because omega is about 8 pi:
    // omega / (2 * 8^3 * 2) would be tiny, so pass r directly instead of
    // going through admissible_r; the greedy accepts any caller r.
    let packing = construct_sets(&measure, &mesh, 2, measure.total() / (2.0 * 512.0 * 2.0), 1.0)
        .unwrap();
    assert_eq!(packing.sets.len(), 2);
    // The 3r = 3 retirement radius wipes out the rest of the first sphere
    // (diameter 2), so the second set must come from the other component.
    let first_x = measure.positions()[packing.sets[0][0]].x;
    let second_x = measure.positions()[packing.sets[1][0]].x;
    assert!((first_x - second_x).abs() > 50.0);
    assert!(packing.min_pairwise_distance >= 3.0);
    let _ = alpha;
}

#[test]
fn greedy_reports_exhaustion() {
    let tetra = regular_tetrahedron(1.0);
    let measure = build_measure(&tetra);
    // Respecting the alpha hypothesis, ask for more sets than atoms.
    let k_sets = 16;
    let alpha = measure.total() / (2.0 * 512.0 * k_sets as f64);
    let err = construct_sets(&measure, &tetra, k_sets, alpha, 1e-6).unwrap_err();
    assert!(matches!(err, PackingError::GreedyExhausted { .. }), "{err:?}");
}

#[test]
fn replay_on_the_sphere_passes_all_checks() {
    let sphere = gen_icosphere(5, 1.0).unwrap();
    let pair = assemble(&sphere).unwrap();
    let k = 2;
    let replay = replay_theorem3(&sphere, &pair, k, 4.0 * PI).unwrap();

    assert_eq!(replay.packing.sets.len(), 2 * k + 1);
    assert!((replay.alpha - 4.0 * PI / (6.0 * 512.0 * 2.0)).abs() < 1e-3 * replay.alpha);
    for (i, mu) in replay.packing.measures.iter().enumerate() {
        assert!(*mu >= replay.alpha, "set {i}");
    }
    assert!(replay.packing.min_pairwise_distance >= 3.0 * replay.r);

    // Paper-side quotient cap for this policy: R <= 6 * 8^3 / r^2.
    let cap = 6.0 * 512.0 / (replay.r * replay.r);
    for (i, &rq) in replay.report.rayleigh.iter().enumerate() {
        assert!(rq <= cap, "set {i}: R = {rq} > {cap}");
        assert!(rq >= 0.0);
    }
    assert!(replay.report.quotient_bound_ok);
    assert!(replay.report.gradient_bound_ok);
    // lambda_{K-1} <= max R(phi_i) by min-max with K disjoint supports.
    assert!(replay.report.min_max_ok, "lambda_4 = {}, max R = {}", replay.report.lambda_k_minus_1, replay.report.max_rayleigh);
    // Order-k variant on the filtered sets.
    assert!(replay.lambda_k_ok);
    assert!(replay.end_to_end_ok);
    assert_eq!(replay.kept.len(), k + 1);
}

#[test]
fn test_functions_on_manual_component_packing() {
    // Hand-built packing: each sphere of a far pair is one set. The cutoff
    // functions become indicators of the components, their quotients vanish
    // and they witness lambda_1 = 0 for the disconnected surface.
    let mesh = two_far_spheres(100.0);
    let measure = build_measure(&mesh);
    let pair = assemble(&mesh).unwrap();
    let half = measure.atom_count() / 2;
    let packing = PackingResult {
        sets: vec![(0..half).collect(), (half..measure.atom_count()).collect()],
        r: 1.0,
        alpha: measure.total() / 2.1,
        k: 2,
        measures: vec![
            measure.weights()[..half].iter().sum(),
            measure.weights()[half..].iter().sum(),
        ],
        min_pairwise_distance: 98.0,
        ambient_dim_exponent: AMBIENT_EXP,
    };
    let report = test_functions(&mesh, &pair, &packing).unwrap();
    assert!(report.rayleigh[0].abs() < 1e-10);
    assert!(report.rayleigh[1].abs() < 1e-10);
    assert!(report.lambda_k_minus_1.abs() < 1e-8);
    assert!(report.min_max_ok);
}

#[test]
fn overlapping_supports_are_detected() {
    let sphere = gen_icosphere(2, 1.0).unwrap();
    let measure = build_measure(&sphere);
    let pair = assemble(&sphere).unwrap();
    // Two adjacent faces as two sets: the shared vertices overlap.
    let f0 = 0usize;
    let f1 = sphere
        .faces()
        .iter()
        .position(|f| {
            f.iter().filter(|v| sphere.faces()[f0].contains(v)).count() == 2
        })
        .unwrap();
    let packing = PackingResult {
        sets: vec![vec![f0], vec![f1]],
        r: 1e-6,
        alpha: measure.weights()[f0].min(measure.weights()[f1]) / 2.0,
        k: 2,
        measures: vec![measure.weights()[f0], measure.weights()[f1]],
        min_pairwise_distance: 0.0,
        ambient_dim_exponent: AMBIENT_EXP,
    };
    assert!(matches!(
        test_functions(&sphere, &pair, &packing),
        Err(PackingError::OverlappingSupports { .. })
    ));
}

#[test]
fn packing_json_replay_round_trip() {
    let sphere = gen_icosphere(4, 1.0).unwrap();
    let pair = assemble(&sphere).unwrap();
    let measure = build_measure(&sphere);
    let alpha = measure.total() / (6.0 * 512.0 * 2.0);
    let r = admissible_r(&measure, alpha, AMBIENT_EXP).unwrap();
    let packing = construct_sets(&measure, &sphere, 5, alpha, r).unwrap();

    let json = packing.to_json();
    let replayed = PackingResult::from_json(&json).unwrap();
    assert_eq!(packing.sets, replayed.sets);
    assert_eq!(packing.r.to_bits(), replayed.r.to_bits());

    let a = test_functions(&sphere, &pair, &packing).unwrap();
    let b = test_functions(&sphere, &pair, &replayed).unwrap();
    assert_eq!(a.rayleigh.len(), b.rayleigh.len());
    for (x, y) in a.rayleigh.iter().zip(&b.rayleigh) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn c_mp_matches_direct_evaluation() {
    // m = 2, p = 1: 6 * 8^3 * (12 * 8^6) = 3072 * 3145728.
    let expect = 3072.0 * 3145728.0;
    assert!((c_mp(2, 1) - expect).abs() < 1e-6, "{}", c_mp(2, 1));
}
