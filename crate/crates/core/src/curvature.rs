//! Curvature integrals over level-set meshes: `K(t;R)`, `|K|(t;R)`, their
//! decomposition by tangent Gauss index, truncated Lipschitz–Killing totals,
//! radius sweeps and power-law fits in `R`.

use serde::Serialize;

use crate::expr::ScalarField;
use crate::geometry::lk_from_curvature;
use crate::levelset::{extract_level, CellRule, LevelSetError, LevelSetMesh};
use crate::par;

/// Totals of one level truncated to one ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureTotals {
    pub t: f64,
    pub radius: f64,
    pub arity: usize,
    pub k_total: f64,
    pub k_abs: f64,
    /// `K(λ;t)` for λ = 0..n−1.
    pub k_lambda: Vec<f64>,
    /// `|K|(λ;t)` for λ = 0..n−1.
    pub k_abs_lambda: Vec<f64>,
    /// `(L_q, |L|_q)` for q = 1..n−1.
    pub lk: Vec<(f64, f64)>,
    pub n_components: usize,
    /// Share of `|K|` carried by vertices within `2h` of `∂B_R` on
    /// components that leave the ball.
    pub boundary_fraction: f64,
    /// `∫|k|` over vertices flagged degenerate, kept out of every λ bin.
    pub degenerate_mass: f64,
    pub touches_boundary: bool,
    pub orientation_defect: f64,
}

impl CurvatureTotals {
    pub fn empty(t: f64, radius: f64, arity: usize) -> Self {
        CurvatureTotals {
            t,
            radius,
            arity,
            k_total: 0.0,
            k_abs: 0.0,
            k_lambda: vec![0.0; arity],
            k_abs_lambda: vec![0.0; arity],
            lk: vec![(0.0, 0.0); arity - 1],
            n_components: 0,
            boundary_fraction: 0.0,
            degenerate_mass: 0.0,
            touches_boundary: false,
            orientation_defect: 0.0,
        }
    }

    /// Header of the CSV schema for fields of the given arity.
    pub fn csv_header(arity: usize) -> String {
        let mut cols = vec!["t".to_string(), "R".into(), "K".into(), "absK".into()];
        cols.extend((0..arity).map(|l| format!("K_l{l}")));
        cols.extend((0..arity).map(|l| format!("absK_l{l}")));
        for q in 1..arity {
            cols.push(format!("L_{q}"));
            cols.push(format!("absL_{q}"));
        }
        cols.extend(["n_components", "boundary_fraction", "degenerate_mass"].map(String::from));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = vec![self.t, self.radius, self.k_total, self.k_abs]
            .into_iter()
            .map(|v| v.to_string())
            .collect();
        cols.extend(self.k_lambda.iter().map(f64::to_string));
        cols.extend(self.k_abs_lambda.iter().map(f64::to_string));
        for (l, a) in &self.lk {
            cols.push(l.to_string());
            cols.push(a.to_string());
        }
        cols.push(self.n_components.to_string());
        cols.push(self.boundary_fraction.to_string());
        cols.push(self.degenerate_mass.to_string());
        cols.join(",")
    }

    /// `|L|_q`, with q = n−1 giving `|K|`.
    pub fn abs_lk(&self, q: usize) -> Option<f64> {
        self.lk.get(q.checked_sub(1)?).map(|p| p.1)
    }
}

/// Per-simplex contributions, laid out as
/// `[K, |K|, K_λ.., |K|_λ.., (L_q, |L|_q).., degenerate, boundary]`.
fn simplex_terms(mesh: &LevelSetMesh, i: usize, near_boundary: &[bool], out: &mut Vec<f64>) {
    let n = mesh.arity;
    out.clear();
    out.resize(2 + 2 * n + 2 * (n - 1) + 2, 0.0);
    if n == 2 {
        return segment_terms(mesh, i, near_boundary, out);
    }
    let s = mesh.simplex(i);
    let share = mesh.simplex_volume(i) / s.len() as f64;
    for &v in s {
        let v = v as usize;
        if mesh.singular[v] {
            continue;
        }
        let pc = &mesh.per_vertex[v];
        for q in 1..n {
            let lk = lk_from_curvature(pc, q).expect("q in range");
            out[2 + 2 * n + 2 * (q - 1)] += share * lk;
            out[2 + 2 * n + 2 * (q - 1) + 1] += share * lk.abs();
        }
        let g = pc.gauss;
        if pc.degenerate {
            out[2 + 2 * n + 2 * (n - 1)] += share * g.abs();
            continue;
        }
        let l = pc.index as usize;
        out[0] += share * g;
        out[1] += share * g.abs();
        out[2 + l] += share * g;
        out[2 + n + l] += share * g.abs();
        if near_boundary[v] {
            out[2 + 2 * n + 2 * (n - 1) + 1] += share * g.abs();
        }
    }
}

/// Planar curves integrate `κ ds` as the turning of the normal along each
/// segment, which stays exact across folds far thinner than the segment.
/// Each endpoint claims a share of the turning proportional to `|κ|` there.
fn segment_terms(mesh: &LevelSetMesh, i: usize, near_boundary: &[bool], out: &mut [f64]) {
    let [a, b, _] = mesh.simplices[i].map(|v| v as usize);
    if mesh.singular[a] || mesh.singular[b] {
        return;
    }
    let (na, nb) = (&mesh.normals[a], &mesh.normals[b]);
    // Segments run with ν on their left, so κ > 0 turns ν clockwise.
    let turn = -(na.x * nb.y - na.y * nb.x).atan2(na.dot(nb));
    let (ka, kb) = (mesh.per_vertex[a].gauss.abs(), mesh.per_vertex[b].gauss.abs());
    let wa = if ka + kb > 0.0 { ka / (ka + kb) } else { 0.5 };
    out[6] += turn;
    out[7] += turn.abs();
    for (v, w) in [(a, wa), (b, 1.0 - wa)] {
        let pc = &mesh.per_vertex[v];
        let part = turn.abs() * w;
        if pc.degenerate {
            out[8] += part;
            continue;
        }
        let l = pc.index as usize;
        let signed = if l == 0 { part } else { -part };
        out[0] += signed;
        out[1] += part;
        out[2 + l] += signed;
        out[4 + l] += part;
        if near_boundary[v] {
            out[9] += part;
        }
    }
}

pub fn totals(mesh: &LevelSetMesh) -> CurvatureTotals {
    let n = mesh.arity;
    let mut tot = CurvatureTotals::empty(mesh.level, mesh.radius, n);
    tot.n_components = mesh.n_components();
    tot.touches_boundary = mesh.touches_boundary.iter().any(|b| *b);
    tot.orientation_defect = mesh.orientation_defect();
    if mesh.is_empty() {
        return tot;
    }
    let shell = mesh.radius - 2.0 * mesh.cell_size;
    let near_boundary: Vec<bool> = mesh
        .vertices
        .iter()
        .zip(&mesh.component_id)
        .map(|(v, &c)| mesh.touches_boundary[c as usize] && v.norm() > shell)
        .collect();
    let width = 2 + 2 * n + 2 * (n - 1) + 2;
    let chunks = par::map_range(mesh.simplices.len().div_ceil(1024), |c| {
        let lo = c * 1024;
        let hi = (lo + 1024).min(mesh.simplices.len());
        let mut cols = vec![Vec::with_capacity(hi - lo); width];
        let mut buf = Vec::new();
        for i in lo..hi {
            simplex_terms(mesh, i, &near_boundary, &mut buf);
            for (col, v) in cols.iter_mut().zip(&buf) {
                col.push(*v);
            }
        }
        cols.iter().map(|c| par::pairwise_sum(c)).collect::<Vec<f64>>()
    });
    let sum = |k: usize| {
        let col: Vec<f64> = chunks.iter().map(|c| c[k]).collect();
        par::pairwise_sum(&col)
    };
    tot.k_total = sum(0);
    tot.k_abs = sum(1);
    for l in 0..n {
        tot.k_lambda[l] = sum(2 + l);
        tot.k_abs_lambda[l] = sum(2 + n + l);
    }
    for q in 1..n {
        tot.lk[q - 1] = (sum(2 + 2 * n + 2 * (q - 1)), sum(2 + 2 * n + 2 * (q - 1) + 1));
    }
    tot.degenerate_mass = sum(width - 2);
    let boundary = sum(width - 1);
    tot.boundary_fraction = if tot.k_abs > 0.0 { boundary / tot.k_abs } else { 0.0 };
    tot
}

/// Totals of one level at each radius, with the cell size from `rule`.
pub fn r_sweep(
    field: &ScalarField,
    t: f64,
    radii: &[f64],
    rule: CellRule,
) -> Result<Vec<CurvatureTotals>, LevelSetError> {
    let h = rule.cell_for(t);
    radii
        .iter()
        .map(|&r| extract_level(field, t, r, h).map(|m| totals(&m)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS error of the fit in log space.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 4 radii, got {0}")]
    TooFewPoints(usize),
    #[error("value {value} at R = {radius} is not positive; a power law cannot fit it")]
    NonPositive { radius: f64, value: f64 },
    #[error("order q = {q} outside 1..={max}")]
    BadOrder { q: usize, max: usize },
}

/// Least-squares fit of `y ≈ c·x^a` on log–log data.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<AsymptoticFit, FitError> {
    if xs.len() < 4 {
        return Err(FitError::TooFewPoints(xs.len()));
    }
    if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0 && **y > 0.0)) {
        return Err(FitError::NonPositive { radius: *x, value: *y });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - b - a * x).powi(2)).sum();
    Ok(AsymptoticFit { exponent: a, coefficient: b.exp(), residual: (rss / m).sqrt() })
}

/// Fit `|L|_q(t;R) ≈ c·R^a` over a radius sweep.
pub fn asymptotic_fit(sweep: &[CurvatureTotals], q: usize) -> Result<AsymptoticFit, FitError> {
    let max = sweep.first().map_or(1, |s| s.arity - 1);
    if q == 0 || q > max {
        return Err(FitError::BadOrder { q, max });
    }
    let xs: Vec<f64> = sweep.iter().map(|s| s.radius).collect();
    let ys: Vec<f64> = sweep.iter().map(|s| s.abs_lk(q).unwrap_or(0.0)).collect();
    fit_power_law(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn level(src: &str, arity: usize, t: f64, r: f64, h: f64) -> CurvatureTotals {
        let f = parse(src, arity).unwrap();
        totals(&extract_level(&f, t, r, h).unwrap())
    }

    #[test]
    fn circle_and_sphere() {
        let c = level("x^2+y^2", 2, 1.0, 2.0, 0.01);
        assert!((c.k_total / (2.0 * PI) - 1.0).abs() < 0.01);
        assert!((c.k_abs / (2.0 * PI) - 1.0).abs() < 0.01);
        let s = level("x^2+y^2+z^2", 3, 1.0, 2.0, 0.05);
        assert!((s.k_total / (4.0 * PI) - 1.0).abs() < 0.01);
        assert!((s.k_abs / (4.0 * PI) - 1.0).abs() < 0.01);
        assert!((s.k_abs_lambda[0] - s.k_abs).abs() < 1e-9 * s.k_abs);
        assert_eq!(s.boundary_fraction, 0.0);
    }

    #[test]
    fn torus_totals() {
        let t = level("(sqrt(x^2+y^2) - 2)^2 + z^2", 3, 1.0, 5.0, 0.05);
        assert!(t.k_total.abs() < 0.16, "K = {}", t.k_total);
        assert!((t.k_abs / (8.0 * PI) - 1.0).abs() < 0.02, "|K| = {}", t.k_abs);
        assert!(t.k_abs >= t.k_total.abs());
    }

    #[test]
    fn empty_mesh_totals_are_zero() {
        let e = level("x^2+y^2", 2, -1.0, 2.0, 0.05);
        assert_eq!(e, CurvatureTotals::empty(-1.0, 2.0, 2));
    }

    #[test]
    fn csv_schema() {
        assert_eq!(
            CurvatureTotals::csv_header(3),
            "t,R,K,absK,K_l0,K_l1,K_l2,absK_l0,absK_l1,absK_l2,L_1,absL_1,L_2,absL_2,n_components,boundary_fraction,degenerate_mass"
        );
        let row = CurvatureTotals::empty(0.5, 2.0, 2).csv_row();
        assert_eq!(row.split(',').count(), CurvatureTotals::csv_header(2).split(',').count());
    }

    #[test]
    fn compact_sweep_is_constant() {
        let f = parse("x^2+y^2", 2).unwrap();
        let s = r_sweep(&f, 1.0, &[2.0, 4.0, 8.0], CellRule::Fixed(0.02)).unwrap();
        for w in s.windows(2) {
            assert!((w[0].k_abs - w[1].k_abs).abs() < 1e-9);
        }
        let fit = asymptotic_fit(&r_sweep(&f, 1.0, &[2.0, 4.0, 8.0, 16.0], CellRule::Fixed(0.02)).unwrap(), 1).unwrap();
        assert!(fit.exponent.abs() < 0.05);
    }

    #[test]
    fn fit_recovers_synthetic_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.0 * x.powf(1.5) * (1.0 + rng.random_range(-0.01..0.01))).collect();
        let fit = fit_power_law(&xs, &ys).unwrap();
        assert!((fit.exponent - 1.5).abs() < 0.05);
        assert!((fit.coefficient / 2.0 - 1.0).abs() < 0.1);
        assert!(matches!(fit_power_law(&xs[..3], &ys[..3]), Err(FitError::TooFewPoints(3))));
        assert!(matches!(fit_power_law(&xs[..4], &[1.0, 0.0, 1.0, 1.0]), Err(FitError::NonPositive { .. })));
    }
}
