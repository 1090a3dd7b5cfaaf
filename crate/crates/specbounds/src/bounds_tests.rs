use super::*;
use crate::invariants::{estimate_invariants, InvariantParams};
use crate::laplace::{assemble, eigs, mean_curvature_energy};
use crate::mesh::{gen_icosphere, mesh_stats};

#[test]
fn constants_for_surfaces() {
    let c = constants(2).unwrap();
    assert!((c.vol_sphere_m - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
    assert!((c.vol_sphere_m_minus_1 - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
    assert!((c.vol_ball_m - PI).abs() < 1e-12 * PI);
    assert!((c.a_m - 4.0).abs() < 1e-12);
    assert_eq!(c.nash_p, 18);

    // Exponent 2 m^2 + 14 m + 24 = 60 at m = 2, and 8^60 = 2^180 is exact
    // in f64, so 72 * 2^180 is an exact reference value.
    let reference = 72.0 * 2.0f64.powi(180);
    assert!((c.big_c - reference).abs() < 1e-12 * reference, "C = {}", c.big_c);
    let log_ref = reference.log2();
    assert!((c.log2_big_c - log_ref).abs() < 1e-12 * log_ref);
    assert!(c.big_c > 1e56 && c.big_c < 1.2e56);

    // c(2) = 2 pi C(2), in value and in log space.
    assert!((c.little_c - 2.0 * PI * c.big_c).abs() < 1e-12 * c.little_c);
    let expected_log = c.log2_big_c + (2.0 * PI).log2();
    assert!((c.log2_little_c - expected_log).abs() < 1e-12 * expected_log);
}

#[test]
fn a_m_gamma_closed_form() {
    // A(3) = (5/2) sqrt(pi) Gamma(3/2) / Gamma(2) = 5 pi / 4.
    let c = constants(3).unwrap();
    assert!((c.a_m - 5.0 * PI / 4.0).abs() < 1e-12, "A(3) = {}", c.a_m);

    // Generic m: the two formulas for A agree.
    for m in 2..=12 {
        let c = constants(m).unwrap();
        let mf = m as f64;
        let gamma_route = (mf + 2.0) / 2.0
            * PI.sqrt()
            * ((ln_gamma_half(m) - ln_gamma_half(m + 1)).exp());
        assert!(
            (c.a_m - gamma_route).abs() < 1e-12 * gamma_route,
            "m = {m}: {} vs {gamma_route}",
            c.a_m
        );
    }
}

#[test]
fn sphere_volumes_match_recursion_route() {
    for m in 2..=20 {
        let c = constants(m).unwrap();
        let rec_ball = vol_ball_by_recursion(m);
        assert!((c.vol_ball_m - rec_ball).abs() < 1e-12 * rec_ball, "B^{m}");
        let rec_sphere = (m as f64 + 1.0) * vol_ball_by_recursion(m + 1);
        assert!((c.vol_sphere_m - rec_sphere).abs() < 1e-12 * rec_sphere, "S^{m}");
    }
}

#[test]
fn huge_constants_stay_in_log_space() {
    // 8^(2 m^2 + 14 m + 24) overflows f64 from m = 10 on; the logs remain.
    let c9 = constants(9).unwrap();
    assert!(c9.big_c.is_finite());
    let c10 = constants(10).unwrap();
    assert!(c10.big_c.is_infinite());
    assert!(c10.log2_big_c > 1024.0 && c10.log2_big_c.is_finite());
    let c50 = constants(50).unwrap();
    assert!(c50.log2_big_c.is_finite());

    assert!(constants(1).is_err());
    assert!(constants(51).is_err());
}

fn sphere_fixture() -> (crate::laplace::Spectrum, GeometricInvariants, crate::mesh::MeshStats, f64) {
    let mesh = gen_icosphere(4, 1.0).unwrap();
    let pair = assemble(&mesh).unwrap();
    let spectrum = eigs(&pair, 10, 1e-9).unwrap();
    let params = InvariantParams { n_lines: 2000, n_centers: 16, n_radii: 700, seed: 7 };
    let inv = estimate_invariants(&mesh, &params).unwrap();
    let stats = mesh_stats(&mesh);
    let energy = mean_curvature_energy(&mesh);
    (spectrum, inv, stats, energy)
}

#[test]
fn sphere_report_hits_the_equality_cases() {
    let (spectrum, inv, stats, energy) = sphere_fixture();
    let consts = constants(2).unwrap();
    let report = check_bounds(&spectrum, &inv, &stats, &consts, energy, Some(2)).unwrap();
    assert!(report.all_pass(), "{}", report.to_csv());

    // Hersch at equality: lambda_1 Vol = 8 pi within discretization.
    let hersch = report.get("Hersch").unwrap();
    assert!((hersch.lhs - 8.0 * PI).abs() < 0.02 * 8.0 * PI, "lhs {}", hersch.lhs);
    assert!((hersch.rhs - 8.0 * PI).abs() < 1e-12);

    // i(S^2) = 2 makes the index bound 4 * (2/2)^2 * 2 * 4 pi = 32 pi.
    let thm1 = report.get("Thm1_ihat").unwrap();
    assert_eq!(inv.i_hat, 2);
    assert!((thm1.rhs - 32.0 * PI).abs() < 1e-9 * 32.0 * PI, "rhs {}", thm1.rhs);

    // Reilly at equality: lambda_1 Vol = 2 |H|^2 = 8 pi within 2%.
    let reilly = report.get("Reilly").unwrap();
    assert!(
        (reilly.lhs - reilly.rhs).abs() < 0.02 * reilly.rhs,
        "lhs {} rhs {}",
        reilly.lhs,
        reilly.rhs
    );

    // Milnor for the degree-2 sphere: 2 <= 2.
    let milnor = report.get("Milnor_degree").unwrap();
    assert_eq!(milnor.lhs, 2.0);
    assert_eq!(milnor.rhs, 2.0);
    assert!(milnor.pass);

    // eqlambda at equality: moment = Vol on the unit sphere.
    let eql = report.get("eqlambda").unwrap();
    assert!((eql.lhs - 2.0).abs() < 0.02 * 2.0, "lhs {}", eql.lhs);
}

#[test]
fn report_is_dilation_invariant() {
    let (spectrum, inv, stats, energy) = sphere_fixture();
    let consts = constants(2).unwrap();
    let base = check_bounds(&spectrum, &inv, &stats, &consts, energy, None).unwrap();

    for t in [0.5, 3.0] {
        let mesh = gen_icosphere(4, t).unwrap();
        let pair = assemble(&mesh).unwrap();
        let spectrum_t = eigs(&pair, 10, 1e-9).unwrap();
        let params = InvariantParams { n_lines: 2000, n_centers: 16, n_radii: 700, seed: 7 };
        let inv_t = estimate_invariants(&mesh, &params).unwrap();
        let stats_t = mesh_stats(&mesh);
        let energy_t = mean_curvature_energy(&mesh);
        let report = check_bounds(&spectrum_t, &inv_t, &stats_t, &consts, energy_t, None).unwrap();

        assert_eq!(base.records.len(), report.records.len());
        for (a, b) in base.records.iter().zip(&report.records) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.pass, b.pass, "{} under t = {t}", a.name);
            let scale = a.lhs.abs().max(a.rhs.abs()).max(1e-300);
            assert!(
                (a.lhs - b.lhs).abs() <= 1e-8 * scale,
                "{} lhs {} vs {} under t = {t}",
                a.name,
                a.lhs,
                b.lhs
            );
            assert!(
                (a.rhs - b.rhs).abs() <= 1e-8 * scale,
                "{} rhs {} vs {} under t = {t}",
                a.name,
                a.rhs,
                b.rhs
            );
        }
    }
}

#[test]
fn thm2_slack_grows_with_k() {
    let (spectrum, inv, _, _) = sphere_fixture();
    let consts = constants(2).unwrap();
    // rhs grows linearly in k while the normalized eigenvalue grows like k
    // with a much smaller constant, so rhs / lhs must stay >= 1 throughout.
    for k in 1..spectrum.eigenvalues.len() {
        let lhs = spectrum.normalized[k];
        let rhs = consts.little_c * (inv.i_hat as f64) * k as f64;
        assert!(rhs / lhs >= 1.0, "k = {k}");
    }
}

#[test]
fn weyl_scan_bounds_the_growth() {
    let mesh = gen_icosphere(4, 1.0).unwrap();
    let pair = assemble(&mesh).unwrap();
    let spectrum = eigs(&pair, 30, 1e-9).unwrap();
    let params = InvariantParams { n_lines: 500, n_centers: 8, n_radii: 64, seed: 9 };
    let inv = estimate_invariants(&mesh, &params).unwrap();
    let consts = constants(2).unwrap();

    let table = weyl_scan(&spectrum, &inv, &consts).unwrap();
    assert_eq!(table.rows.len(), 30);
    assert!(table.all_bounded);
    assert!(table.empirical_sup > 0.0);
    assert!(table.empirical_sup <= table.rows[0].bound);

    let short = eigs(&pair, 5, 1e-9).unwrap();
    assert!(matches!(
        weyl_scan(&short, &inv, &consts),
        Err(BoundsError::TooFewEigenvalues { .. })
    ));
}

#[test]
fn report_encodes_provenance_and_serializes() {
    let (spectrum, inv, stats, energy) = sphere_fixture();
    let consts = constants(2).unwrap();
    let report = check_bounds(&spectrum, &inv, &stats, &consts, energy, Some(2)).unwrap();

    for r in &report.records {
        assert!(!r.inputs.is_empty(), "{} has no inputs", r.name);
        assert_eq!(r.pass, r.lhs <= r.rhs * (1.0 + r.tolerance));
        assert!((r.slack - (r.rhs - r.lhs)).abs() <= 1e-12 * r.rhs.abs().max(1.0));
    }
    let parsed: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(parsed.as_array().unwrap().len() >= 8);
    let csv = report.to_csv();
    assert!(csv.starts_with("name,lhs,rhs,slack,pass\n"));
    assert_eq!(csv.lines().count(), report.records.len() + 1);
}
