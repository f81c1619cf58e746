//! Critical points of `f` inside a ball, found by damped Gauss–Newton on
//! `∇f = 0` from a lattice of seeds.

use nalgebra::Matrix3;

use crate::expr::ScalarField;
use crate::geometry::grad_floor;
use crate::{par, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub point: Vec3,
    pub value: f64,
    /// Number of negative Hessian eigenvalues.
    pub index: usize,
    /// Some Hessian eigenvalue vanishes (to 1e-8 relative).
    pub degenerate: bool,
}

fn hessian_signature(h: &Matrix3<f64>, arity: usize) -> (usize, bool) {
    let sub = h.view((0, 0), (arity, arity)).clone_owned();
    let eig = sub.symmetric_eigenvalues();
    let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1e-300);
    let index = eig.iter().filter(|e| **e < 0.0).count();
    let degenerate = eig.iter().any(|e| e.abs() <= 1e-8 * scale.max(1.0));
    (index, degenerate)
}

fn descend(field: &ScalarField, start: Vec3, radius: f64) -> Option<CriticalPoint> {
    let n = field.arity();
    let mut x = start;
    let mut mu = 1e-3;
    let mut jet = field.eval2(&x).ok()?;
    let mut g2 = jet.gradient().norm_squared();
    for _ in 0..200 {
        if g2.sqrt() < grad_floor(&x) {
            let (index, degenerate) = hessian_signature(&jet.hessian(), n);
            return Some(CriticalPoint { point: x, value: jet.value, index, degenerate });
        }
        let h = jet.hessian();
        let g = jet.gradient();
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = h.transpose() * h;
            for i in 0..3 {
                a[(i, i)] += mu * (1.0 + a[(i, i)]);
            }
            if n == 2 {
                a[(2, 2)] = 1.0;
            }
            let Some(step) = a.lu().solve(&(h.transpose() * g)) else {
                mu *= 10.0;
                continue;
            };
            let y = x - step;
            if let Ok(jy) = field.eval2(&y) {
                let gy = jy.gradient().norm_squared();
                if gy < g2 {
                    x = y;
                    jet = jy;
                    g2 = gy;
                    mu = (mu * 0.3).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !accepted || x.norm() > 1.5 * radius {
            return None;
        }
    }
    None
}

/// Critical points in `B_R`, deduplicated to within `1e-6·(1 + R)`.
/// `seeds_per_axis` controls the seed lattice over `[-R, R]ⁿ`.
pub fn critical_points(field: &ScalarField, radius: f64, seeds_per_axis: usize) -> Vec<CriticalPoint> {
    let n = field.arity();
    let m = seeds_per_axis.max(2);
    let total = m.pow(n as u32);
    let coord = |k: usize| -radius + (k as f64 + 0.5) * 2.0 * radius / m as f64;
    let seeds: Vec<Vec3> = (0..total)
        .map(|s| {
            let z = if n == 3 { coord(s / (m * m)) } else { 0.0 };
            Vec3::new(coord(s % m), coord((s / m) % m), z)
        })
        .filter(|p| p.norm() <= radius)
        .collect();
    let found = par::map(&seeds, |s| descend(field, *s, radius));
    let tol = 1e-6 * (1.0 + radius);
    let mut out: Vec<CriticalPoint> = Vec::new();
    for c in found.into_iter().flatten() {
        if c.point.norm() > radius {
            continue;
        }
        if out.iter().all(|o| (o.point - c.point).norm() > tol) {
            out.push(c);
        }
    }
    out
}

/// Distinct critical values, sorted, merged within `tol`.
pub fn critical_values(points: &[CriticalPoint], tol: f64) -> Vec<f64> {
    let mut v: Vec<f64> = points.iter().map(|c| c.value).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
    v
}
