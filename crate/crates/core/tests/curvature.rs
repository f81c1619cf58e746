mod common;

use std::f64::consts::PI;

use common::{CIRCLE, FOLD, SADDLE, SPHERE, SUITE, TORUS};
use levelcurv::curvature::{asymptotic_fit, r_sweep, totals, CurvatureTotals};
use levelcurv::levelset::{extract_level, CellRule};
use levelcurv::parse;
use proptest::prelude::*;

fn level(case: &common::Case, t: f64) -> CurvatureTotals {
    totals(&extract_level(&case.field(), t, case.radius, case.h).unwrap())
}

fn assert_lambda_identities(t: &CurvatureTotals) {
    let sum: f64 = t.k_abs_lambda.iter().sum();
    assert!((sum - t.k_abs).abs() <= 1e-9 * t.k_abs.max(1e-300), "{sum} vs {}", t.k_abs);
    for (l, (k, a)) in t.k_lambda.iter().zip(&t.k_abs_lambda).enumerate() {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        assert!((k - sign * a).abs() <= 1e-9 * a.abs().max(1e-300), "λ = {l}");
    }
}

#[test]
fn gauss_bonnet_on_compact_levels() {
    let c = level(&CIRCLE, 1.0);
    assert!((c.k_total / (2.0 * PI) - 1.0).abs() < 0.01);
    let s = level(&SPHERE, 1.0);
    assert!((s.k_total / (4.0 * PI) - 1.0).abs() < 0.02);
    let t = level(&TORUS, 1.0);
    assert!(t.k_total.abs() < 0.02 * 4.0 * PI);
    assert!((t.k_abs / (8.0 * PI) - 1.0).abs() < 0.02);
    // Outer half positive, inner half negative.
    assert!((t.k_abs_lambda[0] / (4.0 * PI) - 1.0).abs() < 0.02);
    assert!((t.k_abs_lambda[1] / (4.0 * PI) - 1.0).abs() < 0.02);
    for x in [&c, &s, &t] {
        assert!(x.boundary_fraction < 0.01);
        assert_lambda_identities(x);
    }
}

#[test]
fn two_disjoint_circles() {
    let f = parse("((x - 2)^2 + y^2)*((x + 2)^2 + y^2)", 2).unwrap();
    let m = extract_level(&f, 1.0, 5.0, 0.005).unwrap();
    let t = totals(&m);
    assert_eq!(t.n_components, 2);
    assert!((t.k_total / (4.0 * PI) - 1.0).abs() < 0.01);
}

#[test]
fn saddle_graph_has_negative_curvature() {
    let t = level(&SADDLE, 0.0);
    assert!(t.k_total < 0.0);
    assert_eq!(t.k_abs_lambda[0], 0.0);
    assert!((t.k_abs_lambda[1] - t.k_abs).abs() < 1e-9 * t.k_abs);
    assert!(t.touches_boundary);
}

#[test]
fn lk_of_spheres() {
    let f = SPHERE.field();
    for r in [0.5f64, 1.0, 2.0] {
        let h = 0.025 * r;
        let t = totals(&extract_level(&f, r * r, 2.0 * r, h).unwrap());
        assert!((t.lk[0].0 / (8.0 * PI * PI * r) - 1.0).abs() < 0.02, "r = {r}: {}", t.lk[0].0);
        assert_eq!(t.abs_lk(2), Some(t.k_abs));
    }
}

#[test]
fn compact_levels_do_not_depend_on_the_ball() {
    let sweep = r_sweep(&CIRCLE.field(), 1.0, &[1.5, 3.0, 6.0], CellRule::Fixed(0.01)).unwrap();
    for s in &sweep {
        assert!((s.k_abs - sweep[0].k_abs).abs() < 1e-9);
    }
}

#[test]
fn hyperbola_total_curvature_tends_to_pi() {
    let f = parse("x*y", 2).unwrap();
    let radii = [20.0, 40.0, 80.0, 160.0, 320.0];
    let sweep = r_sweep(&f, 1.0, &radii, CellRule::Fixed(0.02)).unwrap();
    // The normal of y = 1/x is (1/x, x), at angle atan(x²); the branch
    // leaves the ball where x² + 1/x² = R². The mesh may stop up to 2h short
    // of each of the 4 exits, where κ ≈ 2/x³. Far out κ drops below the
    // zero-eigenvalue threshold and the turning moves to degenerate_mass.
    for s in &sweep {
        let r2 = s.radius * s.radius;
        let x2 = 0.5 * (r2 + (r2 * r2 - 4.0).sqrt());
        let exact = 2.0 * (x2.atan() - (1.0 / x2).atan());
        let tol = 4.0 * 2.0 * 0.02 * 2.0 / x2.powf(1.5);
        let total = s.k_abs + s.degenerate_mass;
        assert!((total - exact).abs() < tol, "R = {}: {total} vs {exact}", s.radius);
    }
    let fit = asymptotic_fit(&sweep, 1).unwrap();
    // A bounded total fits as a nearly flat power law.
    assert!(fit.exponent.abs() < 3e-3);
    assert!((fit.coefficient / PI - 1.0).abs() < 0.01);
}

#[test]
fn every_suite_level_partitions_by_index() {
    for case in SUITE {
        assert_lambda_identities(&level(&case, case.t));
    }
}

#[test]
fn csv_rows_match_the_header() {
    for case in [CIRCLE, SPHERE] {
        let t = level(&case, case.t);
        let cols = CurvatureTotals::csv_header(case.arity).split(',').count();
        assert_eq!(t.csv_row().split(',').count(), cols);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn index_partition_on_random_fold_levels(t in -0.5f64..0.5) {
        prop_assume!(t.abs() > 0.02);
        let f = FOLD.field();
        let m = extract_level(&f, t, 8.0, CellRule::ADAPTIVE.cell_for(t)).unwrap();
        assert_lambda_identities(&totals(&m));
    }

    #[test]
    fn index_partition_on_random_torus_levels(t in 0.2f64..3.0) {
        assert_lambda_identities(&level(&TORUS, t));
    }
}
