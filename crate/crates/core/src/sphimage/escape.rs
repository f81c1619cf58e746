//! Tracing `Γ_u = {x : ν_f(x) = u}` through the slab `|f − c| < ε`.
//!
//! A component of `Γ_u` inside the slab that stays on one side of `c` and
//! leaves every ball is how curvature escapes to infinity at a regular
//! value. Seeds are the points with `ν_f = u` on the levels `c ± ε/2` and
//! `c ± 9ε/10`; each seed is continued in both directions by a
//! predictor–corrector scheme.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::expr::ScalarField;
use crate::geometry::TangentFrame;
use crate::levelset::extract_level;
use crate::oracle::find_projection_criticals;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeParams {
    pub epsilon: f64,
    pub radius: f64,
    /// Cell size of the meshes used to find seeds.
    pub cell: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeComponent {
    /// Traced polyline, in order along the curve.
    pub points: Vec<Vec3>,
    pub f_min: f64,
    pub f_max: f64,
    pub crosses_c: bool,
    pub exits_ball: bool,
    /// Continuation stalled (step underflow or a critical point of `f`).
    pub stalled: bool,
    pub closed: bool,
}

impl EscapeComponent {
    /// Unbounded within the slab and confined to one side of `c`.
    pub fn escapes_one_sided(&self) -> bool {
        self.exits_ball && !self.crosses_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    pub c: f64,
    pub direction: Vec3,
    pub epsilon: f64,
    pub seeds: usize,
    pub components: Vec<EscapeComponent>,
}

impl EscapeReport {
    pub fn has_one_sided_escape(&self) -> bool {
        self.components.iter().any(|c| c.escapes_one_sided())
    }
}

struct Tracer<'a> {
    field: &'a ScalarField,
    u: Vec3,
    basis: [Vec3; 2],
    dim: usize,
}

enum Stop {
    Slab,
    Exit,
    Stall,
    Closed,
    Budget,
}

impl<'a> Tracer<'a> {
    fn new(field: &'a ScalarField, u: Vec3) -> Self {
        let frame = TangentFrame::new(Vec3::zeros(), u, field.arity());
        Tracer { field, u, basis: frame.tangents, dim: field.arity() - 1 }
    }

    /// Residual `eₖ·∇f`, the Jacobian rows `Heₖ`, and `|∇f|`.
    fn system(&self, x: &Vec3) -> Option<([f64; 2], [Vec3; 2], f64, f64)> {
        let jet = self.field.eval2(x).ok()?;
        let g = jet.gradient();
        let h = jet.hessian();
        let mut r = [0.0; 2];
        let mut rows = [Vec3::zeros(); 2];
        for k in 0..self.dim {
            r[k] = self.basis[k].dot(&g);
            rows[k] = h * self.basis[k];
            if self.dim == 1 {
                rows[k].z = 0.0;
            }
        }
        Some((r, rows, g.norm(), g.dot(&self.u)))
    }

    fn tangent(&self, rows: &[Vec3; 2]) -> Option<Vec3> {
        let t = if self.dim == 1 { Vec3::new(-rows[0].y, rows[0].x, 0.0) } else { rows[0].cross(&rows[1]) };
        let n = t.norm();
        (n > 1e-300).then(|| t / n)
    }

    /// Gauss–Newton with the minimum-norm step back onto `Γ_u`.
    fn correct(&self, mut x: Vec3) -> Option<Vec3> {
        for _ in 0..12 {
            let (r, rows, gn, along) = self.system(&x)?;
            if along <= 0.0 {
                return None;
            }
            let res = (r[0].abs() + r[1].abs()) / gn;
            if res < 1e-11 {
                return Some(x);
            }
            let dx = if self.dim == 1 {
                let n2 = rows[0].norm_squared();
                if n2 == 0.0 {
                    return None;
                }
                rows[0] * (r[0] / n2)
            } else {
                let m = Matrix2::new(
                    rows[0].dot(&rows[0]),
                    rows[0].dot(&rows[1]),
                    rows[1].dot(&rows[0]),
                    rows[1].dot(&rows[1]),
                );
                let y = m.lu().solve(&Vector2::new(r[0], r[1]))?;
                rows[0] * y[0] + rows[1] * y[1]
            };
            x -= dx;
        }
        let (r, _, gn, along) = self.system(&x)?;
        ((r[0].abs() + r[1].abs()) / gn < 1e-9 && along > 0.0).then_some(x)
    }

    fn trace(&self, start: Vec3, sense: f64, c: f64, p: &EscapeParams, out: &mut Vec<Vec3>) -> Stop {
        let max_step = p.radius / 50.0;
        let min_step = 1e-12 * (1.0 + p.radius);
        let mut step = p.cell.min(max_step);
        let mut x = start;
        let Some((_, rows, _, _)) = self.system(&x) else { return Stop::Stall };
        let Some(mut dir) = self.tangent(&rows) else { return Stop::Stall };
        dir *= sense;
        for k in 0..p.max_steps {
            let mut next = None;
            while step >= min_step {
                if let Some(y) = self.correct(x + dir * step) {
                    let moved = (y - x).norm();
                    if moved > 0.3 * step && moved < 2.0 * step {
                        next = Some(y);
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some(y) = next else { return Stop::Stall };
            let Some((_, rows, _, _)) = self.system(&y) else { return Stop::Stall };
            let Some(t) = self.tangent(&rows) else { return Stop::Stall };
            dir = if t.dot(&(y - x)) >= 0.0 { t } else { -t };
            x = y;
            out.push(x);
            let Ok(v) = self.field.value(&x) else { return Stop::Stall };
            if (v - c).abs() >= p.epsilon {
                return Stop::Slab;
            }
            if x.norm() > p.radius {
                return Stop::Exit;
            }
            if k > 8 && (x - start).norm() < step {
                return Stop::Closed;
            }
            step = (step * 1.5).min(max_step);
        }
        Stop::Budget
    }
}

fn near_polyline(x: &Vec3, pts: &[Vec3], tol: f64) -> bool {
    pts.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let d = b - a;
        let s = ((x - a).dot(&d) / d.norm_squared().max(1e-300)).clamp(0.0, 1.0);
        (x - (a + d * s)).norm() <= tol
    }) || pts.iter().any(|p| (p - x).norm() <= tol)
}

/// Components of `Γ_u ∩ {|f − c| < ε} ∩ B_R` reachable from seeds on the
/// levels `c ± ε/2` and `c ± 9ε/10`.
pub fn escape_diagnostic(field: &ScalarField, c: f64, u: &Vec3, params: &EscapeParams) -> EscapeReport {
    let u = u.normalize();
    let tracer = Tracer::new(field, u);
    let mut seeds = Vec::new();
    for frac in [-0.9, -0.5, 0.5, 0.9] {
        let t = c + frac * params.epsilon;
        let Ok(mesh) = extract_level(field, t, params.radius, params.cell) else { continue };
        let scan = find_projection_criticals(&mesh, field, &u);
        seeds.extend(scan.criticals.iter().filter(|p| p.aligned).map(|p| p.point));
    }
    let mut report = EscapeReport { c, direction: u, epsilon: params.epsilon, seeds: seeds.len(), components: Vec::new() };
    for seed in seeds {
        let tol = 1e-3 * (1.0 + seed.norm());
        if report.components.iter().any(|comp| near_polyline(&seed, &comp.points, tol)) {
            continue;
        }
        let mut fwd = Vec::new();
        let mut back = Vec::new();
        let s1 = tracer.trace(seed, 1.0, c, params, &mut fwd);
        let s2 = if matches!(s1, Stop::Closed) { Stop::Closed } else { tracer.trace(seed, -1.0, c, params, &mut back) };
        back.reverse();
        let mut points = back;
        points.push(seed);
        points.extend(fwd);
        let values: Vec<f64> = points.iter().filter_map(|p| field.value(p).ok()).collect();
        let f_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let f_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ends = [&s1, &s2];
        report.components.push(EscapeComponent {
            f_min,
            f_max,
            crosses_c: f_min < c && c < f_max,
            exits_ball: ends.iter().any(|s| matches!(s, Stop::Exit)),
            stalled: ends.iter().any(|s| matches!(s, Stop::Stall | Stop::Budget)),
            closed: matches!(s1, Stop::Closed),
            points,
        });
    }
    report
}
