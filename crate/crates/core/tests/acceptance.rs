//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit status
//! if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{fd_gradient, fd_hessian, random_point, rel_err, Case, CIRCLE, HYPERBOLA, FOLD, SADDLE, SPHERE, SUITE, TORUS};
use levelcurv::app::{detect_jumps, scan, semicontinuity_check, CurvatureProfile, JumpParams, JumpReport, ScanConfig};
use levelcurv::curvature::{totals, CurvatureTotals};
use levelcurv::geometry::lk_density;
use levelcurv::levelset::{extract_level, CellRule, LevelSetMesh};
use levelcurv::oracle::{find_projection_criticals, mc_estimate_on, morse_index_check, Directions, Sampling};
use levelcurv::sphimage::{
    degree_check, one_sided_limit, outside_ring, rasterize, strata_areas, DegreeCheck, LimitParams, Side, SpherePartition,
};
use levelcurv::{parse, ScalarField, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Run {
    results: Vec<(usize, bool, String)>,
    /// Every level integrated during the run, for the λ identities.
    levels: Vec<CurvatureTotals>,
}

impl Run {
    fn report(&mut self, n: usize, pass: bool, detail: String) {
        println!("criterion {n:>2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((n, pass, detail));
    }

    fn level(&mut self, field: &ScalarField, t: f64, radius: f64, h: f64) -> (LevelSetMesh, CurvatureTotals, Duration) {
        let start = Instant::now();
        let mesh = extract_level(field, t, radius, h).expect("suite levels extract");
        let tot = totals(&mesh);
        let took = start.elapsed();
        self.levels.push(tot.clone());
        (mesh, tot, took)
    }

    fn keep(&mut self, p: &CurvatureProfile) {
        self.levels.extend(p.totals.iter().cloned());
        self.levels.extend(p.inner.iter().flatten().cloned());
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

struct ScanCase {
    case: Case,
    t_min: f64,
    t_max: f64,
    n_t: usize,
    radius: f64,
    cell: CellRule,
}

fn scan_cases() -> Vec<ScanCase> {
    vec![
        ScanCase { case: CIRCLE, t_min: 0.25, t_max: 2.0, n_t: 8, radius: 3.0, cell: CellRule::ADAPTIVE },
        ScanCase { case: HYPERBOLA, t_min: -1.0, t_max: 1.0, n_t: 10, radius: 5.0, cell: CellRule::ADAPTIVE },
        // Spheres shrink to a point at the minimum, so the cell follows t.
        ScanCase { case: SPHERE, t_min: -0.5, t_max: 1.5, n_t: 9, radius: 2.0, cell: CellRule::ADAPTIVE },
        ScanCase { case: TORUS, t_min: 0.25, t_max: 2.0, n_t: 8, radius: 5.0, cell: CellRule::Fixed(0.05) },
        ScanCase { case: SADDLE, t_min: -1.0, t_max: 1.0, n_t: 9, radius: 2.0, cell: CellRule::Fixed(0.05) },
    ]
}

fn fold_config(n_t: usize, cell: CellRule) -> ScanConfig {
    ScanConfig::new(-0.2, 0.2, n_t, 80.0, cell)
}

fn run_scan(run: &mut Run, field: &ScalarField, cfg: &ScanConfig) -> (CurvatureProfile, JumpReport) {
    let p = scan(field, cfg).expect("valid scan");
    run.keep(&p);
    let r = detect_jumps(field, &p, &JumpParams::default());
    (p, r)
}

fn criterion_1(run: &mut Run) -> (CurvatureProfile, JumpReport) {
    let f = FOLD.field();
    let start = Instant::now();
    let (p, r) = run_scan(run, &f, &fold_config(41, CellRule::ADAPTIVE));
    let took = start.elapsed();
    let two_pi = 2.0 * PI;
    let dt = 0.4 / 40.0;
    let pass = match r.jumps.as_slice() {
        [j] => {
            j.c.abs() < dt
                && (0.9 * two_pi..=1.1 * two_pi).contains(&j.left_limit)
                && (0.9 * two_pi..=1.1 * two_pi).contains(&j.right_limit)
                && j.value_at_c.is_some_and(|v| v < 0.2)
                && j.k_left.abs() <= 0.3
                && j.k_right.abs() <= 0.3
                && j.k_continuous
                && took < Duration::from_secs(300)
        }
        _ => false,
    };
    let detail = match r.jumps.first() {
        Some(j) => format!(
            "{} jump(s); c = {:.2e} ± {:.2e}, limits {:.4} / {:.4}, |K|(c) = {:?}, K limits {:.4} / {:.4}, K continuous {}, kind {}, {:.1} s",
            r.jumps.len(),
            j.c,
            j.c_uncertainty,
            j.left_limit,
            j.right_limit,
            j.value_at_c,
            j.k_left,
            j.k_right,
            j.k_continuous,
            j.kind.as_str(),
            took.as_secs_f64()
        ),
        None => format!("no jump found, {:.1} s", took.as_secs_f64()),
    };
    run.report(1, pass, detail);
    (p, r)
}

fn criterion_2(run: &mut Run) {
    let mut pass = true;
    let mut detail = Vec::new();
    for (case, target) in [(CIRCLE, 2.0 * PI), (SPHERE, 4.0 * PI)] {
        let h = CellRule::ADAPTIVE.cell_for(case.t);
        let (_, tot, took) = run.level(&case.field(), case.t, case.radius, h);
        let ok = within(tot.k_total, target, 0.01) && within(tot.k_abs, target, 0.01) && took < Duration::from_secs(10);
        pass &= ok;
        detail.push(format!("{} K {:.5} |K| {:.5} in {:.2} s", case.name, tot.k_total, tot.k_abs, took.as_secs_f64()));
    }
    run.report(2, pass, detail.join("; "));
}

fn criterion_3(run: &mut Run) {
    let f = TORUS.field();
    let (mesh, tot, _) = run.level(&f, 1.0, 5.0, CellRule::ADAPTIVE.cell_for(1.0));
    let raster = rasterize(&mesh, &SpherePartition::default_for(3));
    let strata = strata_areas(&raster);
    let two = strata.get(&2).copied().unwrap_or(0.0);
    let rest: f64 = strata.iter().filter(|(k, _)| **k != 2).map(|(_, a)| a).sum();
    let pass = tot.k_total.abs() <= 0.16
        && within(tot.k_abs, 8.0 * PI, 0.02)
        && within(two, 4.0 * PI, 0.02)
        && rest <= 0.02 * 4.0 * PI;
    run.report(
        3,
        pass,
        format!("K {:.4}, |K| {:.4} (8π = {:.4}), strata {strata:.4?}", tot.k_total, tot.k_abs, 8.0 * PI),
    );
}

fn criterion_4(run: &mut Run) {
    let mut total = DegreeCheck::default();
    for (i, case) in SUITE.iter().enumerate() {
        let f = case.field();
        let (mesh, _, _) = run.level(&f, case.t, case.radius, case.h);
        let raster = rasterize(&mesh, &SpherePartition::default_for(case.arity));
        total.merge(&degree_check(&raster, &mesh, &f, 40, i as u64 + 1));
    }
    let unflagged = total.sampled - total.flagged;
    let pass = unflagged >= 100 && total.rate() >= 0.95;
    run.report(
        4,
        pass,
        format!(
            "{} unflagged of {} sampled cells, {} agree ({:.1}%)",
            unflagged,
            total.sampled,
            total.agreed,
            100.0 * total.rate()
        ),
    );
}

fn criterion_5(run: &mut Run) {
    let (mut checked, mut agreed) = (0, 0);
    for case in [CIRCLE, SPHERE, TORUS, SADDLE] {
        let f = case.field();
        let (mesh, _, _) = run.level(&f, case.t, case.radius, case.h);
        for u in Directions::new(case.arity, Sampling::Random { seed: 11 }).take(20) {
            for c in find_projection_criticals(&mesh, &f, &u).criticals.iter().filter(|c| c.nondegenerate) {
                checked += 1;
                agreed += usize::from(morse_index_check(&f, c));
            }
        }
    }
    run.report(5, checked >= 100 && agreed == checked, format!("{agreed} of {checked} nondegenerate criticals agree"));
}

fn criterion_6(run: &mut Run) {
    let mut pass = true;
    let mut detail = Vec::new();
    for case in SUITE {
        let f = case.field();
        let (mesh, tot, _) = run.level(&f, case.t, case.radius, case.h);
        let mc = mc_estimate_on(&f, &mesh, 500, Sampling::default());
        // K can vanish, so both tolerances are relative to |K|.
        let ok_abs = (mc.abs_k_est - tot.k_abs).abs() <= (0.05 * tot.k_abs).max(3.0 * mc.stderr);
        let ok_signed = (mc.k_est - tot.k_total).abs() <= (0.05 * tot.k_abs).max(3.0 * mc.stderr_signed);
        pass &= ok_abs && ok_signed && mc.n_used == 500;
        detail.push(format!(
            "{} |K| {:.4}/{:.4} K {:.4}/{:.4}",
            case.name, mc.abs_k_est, tot.k_abs, mc.k_est, tot.k_total
        ));
    }
    run.report(6, pass, format!("mc/mesh: {}", detail.join("; ")));
}

fn criterion_7(run: &mut Run) {
    let mut checked = 0;
    let mut bad = 0;
    let mut worst = 0.0f64;
    for t in run.levels.iter().filter(|t| t.k_abs.is_finite()) {
        checked += 1;
        let scale = t.k_abs.max(f64::MIN_POSITIVE);
        let sum: f64 = t.k_abs_lambda.iter().sum();
        let mut err = (sum - t.k_abs).abs() / scale;
        for (l, (k, a)) in t.k_lambda.iter().zip(&t.k_abs_lambda).enumerate() {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            err = err.max((k - sign * a).abs() / scale);
        }
        worst = worst.max(err);
        bad += usize::from(err > 1e-9);
    }
    run.report(7, bad == 0 && checked > 0, format!("{checked} levels, {bad} violations, worst relative error {worst:.1e}"));
}

fn criterion_8(run: &mut Run, fold: &(CurvatureProfile, JumpReport), scans: &[(String, CurvatureProfile, JumpReport)]) {
    let mut pass = true;
    let mut detail = Vec::new();
    let all = std::iter::once(("fold".to_string(), &fold.0, &fold.1)).chain(scans.iter().map(|(n, p, r)| (n.clone(), p, r)));
    for (name, p, r) in all {
        let check = semicontinuity_check(p, r, 0.02);
        pass &= check.passed();
        detail.push(format!("{name} {}/{}", check.checked - check.violations.len(), check.checked));
    }
    run.report(8, pass, format!("values within limits: {}", detail.join(", ")));
}

fn same_jumps(a: &JumpReport, b: &JumpReport) -> (bool, f64) {
    if a.jumps.len() != b.jumps.len() {
        return (false, f64::INFINITY);
    }
    let mut worst = 0.0f64;
    let mut ok = true;
    for (x, y) in a.jumps.iter().zip(&b.jumps) {
        let tol = x.c_uncertainty.max(y.c_uncertainty).max(1e-9);
        let d = (x.c - y.c).abs();
        worst = worst.max(d / tol);
        ok &= d <= tol;
    }
    (ok, worst)
}

fn criterion_9(run: &mut Run, fold: &(CurvatureProfile, JumpReport), scans: &[(String, CurvatureProfile, JumpReport)]) {
    let mut pass = true;
    let mut detail = Vec::new();
    let f = FOLD.field();
    let (_, fine) = run_scan(run, &f, &fold_config(82, CellRule::ADAPTIVE.scaled(0.5)));
    let (ok, worst) = same_jumps(&fold.1, &fine);
    pass &= ok;
    detail.push(format!("fold {}→{} (worst shift {worst:.2} cells)", fold.1.jumps.len(), fine.jumps.len()));
    for sc in scan_cases().into_iter().filter(|s| s.case.polynomial) {
        let f = sc.case.field();
        let coarse = &scans.iter().find(|(n, _, _)| n == sc.case.name).expect("scanned").2;
        let cfg = ScanConfig::new(sc.t_min, sc.t_max, 2 * sc.n_t, sc.radius, sc.cell.scaled(0.5));
        let (_, fine) = run_scan(run, &f, &cfg);
        let (ok, worst) = same_jumps(coarse, &fine);
        pass &= ok;
        detail.push(format!("{} {}→{} (worst shift {worst:.2} cells)", sc.case.name, coarse.jumps.len(), fine.jumps.len()));
    }
    run.report(9, pass, detail.join(", "));
}

fn criterion_10(run: &mut Run) {
    let mut pass = true;
    let mut detail = Vec::new();
    for (case, c) in [(CIRCLE, 1.0), (HYPERBOLA, 1.0), (SPHERE, 1.0), (TORUS, 1.0), (SADDLE, 0.5)] {
        let f = case.field();
        let params = LimitParams { steps: 6, radius: case.radius, cell: CellRule::Fixed(case.h), ..Default::default() };
        let minus = one_sided_limit(&f, c, Side::Minus, &params).expect("limit");
        let plus = one_sided_limit(&f, c, Side::Plus, &params).expect("limit");
        let (mesh, _, _) = run.level(&f, c, case.radius, case.h);
        let u_c = rasterize(&mesh, &minus.partition).covered_cells();
        let plus_cells: BTreeSet<usize> = plus.limit_cells.iter().copied().collect();
        let both: Vec<usize> = minus.limit_cells.iter().copied().filter(|c| plus_cells.contains(c)).collect();
        let stray = outside_ring(&minus.partition, &u_c, &both);
        pass &= stray.is_empty();
        detail.push(format!("{} c={c}: {} of {} outside", case.name, stray.len(), u_c.len()));
    }
    let f = CIRCLE.field();
    let params = LimitParams { steps: 8, radius: 3.0, cell: CellRule::Fixed(0.01), ..Default::default() };
    for side in [Side::Minus, Side::Plus] {
        let lim = one_sided_limit(&f, 1.0, side, &params).expect("limit");
        let gaps: Vec<f64> = lim.covered_areas.iter().map(|a| (a - lim.area()).abs()).collect();
        let ok = gaps.last().is_some_and(|g| *g < lim.partition.cell_area());
        pass &= ok;
        detail.push(format!("circle {side:?} final area gap {:.2e} (cell {:.2e})", gaps.last().unwrap(), lim.partition.cell_area()));
    }
    run.report(10, pass, detail.join("; "));
}

/// Point on `{f = 1}` along the ray through `u`, by bisection.
fn on_level(f: &ScalarField, u: &Vec3) -> Vec3 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while f.value(&(u * hi)).unwrap() < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f.value(&(u * mid)).unwrap() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    u * (0.5 * (lo + hi))
}

fn criterion_11(run: &mut Run) {
    let mut pass = true;
    let mut detail = Vec::new();
    let sphere = SPHERE.field();
    for r in [0.5f64, 1.0, 2.0] {
        let t = r * r;
        let (_, tot, _) = run.level(&sphere, t, 2.0 * r, CellRule::ADAPTIVE.cell_for(t));
        let target = 8.0 * PI * PI * r;
        pass &= within(tot.lk[0].0, target, 0.02);
        detail.push(format!("r={r}: {:.3}/{:.3}", tot.lk[0].0, target));
    }
    // Independent oracle: 2π × the mean normal curvature wᵀHw/|∇f| over
    // uniformly random unit tangents w.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let fields = [parse("x^2 + 2*y^2 + 3*z^2", 3).unwrap(), parse("x^2 + 4*y^2 + 1.5*z^2 + x*y", 3).unwrap()];
    let mut worst = 0.0f64;
    for i in 0..100 {
        let f = &fields[i % 2];
        let d = loop {
            let d = random_point(&mut rng, 3, 1.0);
            if d.norm() > 0.1 {
                break d.normalize();
            }
        };
        let x = on_level(f, &d);
        let jet = f.eval2(&x).unwrap();
        let g = jet.gradient();
        let nu = g.normalize();
        let a = nu.cross(&if nu.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() }).normalize();
        let b = nu.cross(&a);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| {
                let th: f64 = rng.random_range(0.0..2.0 * PI);
                let w = a * th.cos() + b * th.sin();
                w.dot(&(jet.hessian() * w)) / g.norm()
            })
            .sum::<f64>()
            / n as f64;
        let lk = lk_density(f, &x, 1).unwrap();
        worst = worst.max((2.0 * PI * mean / lk - 1.0).abs());
    }
    pass &= worst < 0.01;
    detail.push(format!("Grassmannian Monte-Carlo at 100 points, worst relative error {worst:.2e}"));
    run.report(11, pass, detail.join("; "));
}

fn criterion_12(run: &mut Run) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let mut points = 0;
    for case in SUITE {
        let f = case.field();
        let mut n = 0;
        while n < 100 {
            let p = random_point(&mut rng, case.arity, 2.0);
            // The torus field is not differentiable on its axis.
            if case.name == "torus" && p.xy().norm() < 0.1 {
                continue;
            }
            n += 1;
            let jet = f.eval2(&p).unwrap();
            let (g, h) = (fd_gradient(&f, &p, 1e-5), fd_hessian(&f, &p, 1e-5));
            for i in 0..case.arity {
                worst = worst.max(rel_err(jet.gradient()[i], g[i]));
                for j in 0..case.arity {
                    worst = worst.max(rel_err(jet.hessian()[(i, j)], h[(i, j)]));
                }
            }
        }
        points += n;
    }
    run.report(12, worst < 1e-6, format!("{points} points, worst relative error {worst:.1e}"));
}

fn main() {
    let start = Instant::now();
    let mut run = Run { results: Vec::new(), levels: Vec::new() };
    let fold = criterion_1(&mut run);
    criterion_2(&mut run);
    criterion_3(&mut run);
    criterion_4(&mut run);
    criterion_5(&mut run);
    criterion_6(&mut run);
    let scans: Vec<(String, CurvatureProfile, JumpReport)> = scan_cases()
        .into_iter()
        .map(|sc| {
            let cfg = ScanConfig::new(sc.t_min, sc.t_max, sc.n_t, sc.radius, sc.cell);
            let (p, r) = run_scan(&mut run, &sc.case.field(), &cfg);
            (sc.case.name.to_string(), p, r)
        })
        .collect();
    criterion_8(&mut run, &fold, &scans);
    criterion_9(&mut run, &fold, &scans);
    criterion_10(&mut run);
    criterion_11(&mut run);
    criterion_12(&mut run);
    // Last, so that it covers every level integrated above.
    criterion_7(&mut run);

    let failed: Vec<usize> = run.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass in {:.0} s",
        run.results.len() - failed.len(),
        run.results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
