//! Curvature-adaptive refinement of planar level curves.
//!
//! A segment whose endpoint normals differ by more than `max_angle` is split
//! at the point where the level crosses the segment's perpendicular bisector.
//! This recovers folds thinner than a grid cell, where the grid only sees a
//! short chord across a sliver between two nearly parallel branches.

use crate::expr::ScalarField;
use crate::geometry::PointGeometry;
use crate::Vec3;

pub(crate) struct Refiner<'a> {
    pub field: &'a ScalarField,
    pub level: f64,
    pub radius: f64,
    pub max_angle: f64,
    pub max_depth: u32,
}

pub(crate) struct Split {
    pub point: Vec3,
    pub geometry: PointGeometry,
}

fn angle(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

impl<'a> Refiner<'a> {
    fn residual(&self, p: &Vec3) -> Option<f64> {
        self.field.value(p).ok().map(|v| v - self.level)
    }

    /// Root of `f − t` on the line `m + s·dir`, nearest to `s = 0`.
    fn bisector_root(&self, m: Vec3, dir: Vec3, step: f64) -> Option<Vec3> {
        let g0 = self.residual(&m)?;
        if g0 == 0.0 {
            return Some(m);
        }
        let mut prev = [(0.0, g0); 2];
        let mut s = step;
        while s <= 2.0 * self.radius {
            for (side, sign) in [1.0, -1.0].into_iter().enumerate() {
                let gs = self.residual(&(m + dir * (sign * s)));
                let Some(gs) = gs else { continue };
                let (sp, gp) = prev[side];
                if gp.signum() != gs.signum() || gs == 0.0 {
                    return self.illinois(m, dir, sp * sign, gp, s * sign, gs);
                }
                prev[side] = (s, gs);
            }
            s *= 1.5;
        }
        None
    }

    fn illinois(&self, m: Vec3, dir: Vec3, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> Option<Vec3> {
        let tol = 1e-13 * (1.0 + m.norm());
        for _ in 0..200 {
            if gb == 0.0 || (b - a).abs() < tol {
                break;
            }
            let c = (a * gb - b * ga) / (gb - ga);
            let c = if c.is_finite() && (c - a) * (c - b) < 0.0 { c } else { 0.5 * (a + b) };
            let gc = self.residual(&(m + dir * c))?;
            if gc.signum() != gb.signum() {
                a = b;
                ga = gb;
            } else {
                ga *= 0.5;
            }
            b = c;
            gb = gc;
        }
        let s = if ga.abs() < gb.abs() { a } else { b };
        Some(m + dir * s)
    }

    /// Split point for segment `(a, b)`, if the segment needs one and a
    /// geometrically sound one exists.
    pub fn split(&self, pa: &Vec3, na: &Vec3, pb: &Vec3, nb: &Vec3) -> Option<Split> {
        let turn = angle(na, nb);
        if turn <= self.max_angle {
            return None;
        }
        let d = pb - pa;
        let len = d.norm();
        if len < 1e-14 * (1.0 + pa.norm()) {
            return None;
        }
        let m = (pa + pb) * 0.5;
        // Across a fold the endpoints sit on opposite branches and the tip
        // lies along the mean normal, not across the chord.
        let mean = na + nb;
        let along_mean = (mean.norm() > 1e-9).then(|| mean.normalize());
        let across = Vec3::new(-d.y, d.x, 0.0) / len;
        along_mean
            .into_iter()
            .chain(std::iter::once(across))
            .find_map(|dir| self.accept(self.bisector_root(m, dir, 0.25 * len)?, na, nb, turn))
    }

    fn accept(&self, point: Vec3, na: &Vec3, nb: &Vec3, turn: f64) -> Option<Split> {
        if point.norm() > self.radius {
            return None;
        }
        let tol = 1e-9 * (1.0 + self.level.abs());
        if self.residual(&point)?.abs() >= tol {
            return None;
        }
        let geometry = PointGeometry::at(self.field, &point).ok()?;
        let nq = geometry.normal();
        if angle(na, &nq) >= turn || angle(&nq, nb) >= turn {
            return None;
        }
        Some(Split { point, geometry })
    }

    /// Walk the level from `a` to `b` by predictor–corrector steps, keeping
    /// points whenever the normal has turned by half the angle limit. Used
    /// when splitting cannot find a point on the arc between `a` and `b`,
    /// which happens next to fold tips where another branch is closer.
    pub fn march(&self, pa: &Vec3, na: &Vec3, pb: &Vec3, nb: &Vec3) -> Option<Vec<Split>> {
        let chord = (pb - pa).norm();
        let mut x = *pa;
        let mut geo = PointGeometry::at(self.field, &x).ok()?;
        let mut kept_normal = *na;
        let mut out = Vec::new();
        let tol = 1e-12 * (1.0 + self.level.abs());
        let mut step = chord / 16.0;
        for _ in 0..100_000 {
            let nu = geo.normal();
            let kappa = geo.curvature.gauss.abs();
            step = step.min(0.05 / kappa.max(1e-300)).min(chord.max(1e-300)).max(1e-15 * (1.0 + x.norm()));
            if (pb - x).norm() <= 1.5 * step && angle(&nu, nb) <= 0.5 * self.max_angle.max(0.05) {
                return Some(out);
            }
            let tangent = Vec3::new(nu.y, -nu.x, 0.0);
            let mut next = None;
            for _ in 0..40 {
                let mut y = x + tangent * step;
                for _ in 0..30 {
                    let Ok(jet) = self.field.eval2(&y) else { break };
                    let g = jet.gradient();
                    let r = jet.value - self.level;
                    if r.abs() <= tol || g.norm_squared() == 0.0 {
                        break;
                    }
                    y -= g * (r / g.norm_squared());
                }
                if let Ok(gy) = PointGeometry::at(self.field, &y) {
                    let r = self.residual(&y)?;
                    if r.abs() < 1e-9 * (1.0 + self.level.abs())
                        && angle(&nu, &gy.normal()) < 0.1
                        && (y - x).norm() < 2.0 * step
                    {
                        next = Some((y, gy));
                        break;
                    }
                }
                step *= 0.5;
            }
            let (y, gy) = next?;
            x = y;
            geo = gy;
            if x.norm() > self.radius {
                return None;
            }
            // Stepped past `b`: keeping this point would fold the chain back.
            let ahead = pb - x;
            if ahead.norm() <= 2.0 * step && ahead.dot(&Vec3::new(geo.normal().y, -geo.normal().x, 0.0)) <= 0.0 {
                return Some(out);
            }
            if angle(&kept_normal, &geo.normal()) >= 0.5 * self.max_angle
                && (pb - x).norm() > 1e-12 * (1.0 + x.norm())
            {
                kept_normal = geo.normal();
                out.push(Split { point: x, geometry: geo });
            }
            step *= 1.5;
        }
        None
    }

    /// Refine one segment; returns new points and the chain of segments as
    /// indices where `0` is `a`, `1` is `b` and `2..` index the new points.
    pub fn refine_segment(
        &self,
        a: (Vec3, Vec3),
        b: (Vec3, Vec3),
    ) -> (Vec<Split>, Vec<[u32; 2]>) {
        let mut added: Vec<Split> = Vec::new();
        let mut out = Vec::new();
        // Explicit stack of (from, to, depth); pushed so output stays in order.
        let mut stack = vec![(0u32, 1u32, 0u32)];
        let get = |added: &Vec<Split>, i: u32| -> (Vec3, Vec3) {
            match i {
                0 => a,
                1 => b,
                k => {
                    let s = &added[(k - 2) as usize];
                    (s.point, s.geometry.normal())
                }
            }
        };
        while let Some((i, j, depth)) = stack.pop() {
            let (pi, ni) = get(&added, i);
            let (pj, nj) = get(&added, j);
            let split = if depth < self.max_depth { self.split(&pi, &ni, &pj, &nj) } else { None };
            if split.is_none() && angle(&ni, &nj) > self.max_angle {
                if let Some(path) = self.march(&pi, &ni, &pj, &nj) {
                    let mut prev = i;
                    for s in path {
                        added.push(s);
                        let q = (added.len() + 1) as u32;
                        out.push([prev, q]);
                        prev = q;
                    }
                    out.push([prev, j]);
                    continue;
                }
            }
            match split {
                Some(s) => {
                    added.push(s);
                    let q = (added.len() + 1) as u32;
                    stack.push((q, j, depth + 1));
                    stack.push((i, q, depth + 1));
                }
                None => out.push([i, j]),
            }
        }
        (added, out)
    }
}
