//! Oriented simplicial meshes of `F_t ∩ B_R`.
//!
//! Extraction runs marching squares (n = 2) or face-walk marching cubes
//! (n = 3) on a fixed-registration grid, projects vertices onto the level
//! by Newton steps along the gradient, drops simplices that leave the ball
//! and labels connected components.

mod contour;
mod critical;
mod grid;
mod refine;

use std::collections::HashMap;
use std::io::{self, Write};
use std::path::Path;

use log::warn;
use petgraph::unionfind::UnionFind;

use crate::expr::ScalarField;
use crate::geometry::{PointCurvature, PointGeometry};
use crate::{par, Vec3};

pub use critical::{critical_points, critical_values, CriticalPoint};
use grid::{EdgeKey, Grid};
use refine::Refiner;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LevelSetError {
    #[error("cell size {h} must be positive and below R/8 = {}", .radius / 8.0)]
    BadCellSize { h: f64, radius: f64 },
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("level must be finite, got {0}")]
    BadLevel(f64),
}

/// How the grid spacing is chosen for a level `t`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum CellRule {
    Fixed(f64),
    /// `h = clamp(fraction·|t|, min, max)`.
    Adaptive { fraction: f64, min: f64, max: f64 },
}

impl CellRule {
    pub const ADAPTIVE: CellRule = CellRule::Adaptive { fraction: 0.05, min: 1e-3, max: 0.02 };

    pub fn cell_for(&self, t: f64) -> f64 {
        match *self {
            CellRule::Fixed(h) => h,
            CellRule::Adaptive { fraction, min, max } => (fraction * t.abs()).clamp(min, max),
        }
    }

    /// Every cell size multiplied by `k`.
    pub fn scaled(&self, k: f64) -> CellRule {
        match *self {
            CellRule::Fixed(h) => CellRule::Fixed(h * k),
            CellRule::Adaptive { fraction, min, max } => {
                CellRule::Adaptive { fraction: fraction * k, min: min * k, max: max * k }
            }
        }
    }
}

/// Tuning knobs for [`extract_level_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Planar curves only: split segments whose endpoint normals differ by
    /// more than this angle (radians). `f64::INFINITY` disables refinement.
    pub refine_angle: f64,
    pub refine_depth: u32,
    pub newton_iterations: u32,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { refine_angle: 0.05, refine_depth: 48, newton_iterations: 20 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub leaves: usize,
    /// Vertices whose Newton projection failed; removed with their simplices.
    pub diverged: usize,
    /// Vertices kept but lying on the critical set (no normal).
    pub singular: usize,
    /// Cells with a corner outside the domain of `f`.
    pub undefined_cells: usize,
    pub dropped_outside: usize,
    pub refined_points: usize,
}

#[derive(Debug, Clone)]
pub struct LevelSetMesh {
    pub arity: usize,
    pub level: f64,
    pub radius: f64,
    pub cell_size: f64,
    pub vertices: Vec<Vec3>,
    /// `ν_f` at each vertex; zero at singular vertices.
    pub normals: Vec<Vec3>,
    pub per_vertex: Vec<PointCurvature>,
    pub singular: Vec<bool>,
    /// Triangles for n = 3; for n = 2 segments `[a, b, b]`.
    pub simplices: Vec<[u32; 3]>,
    /// Simplices whose normal disagrees with `ν_f` at the barycenter.
    pub orientation_flagged: Vec<bool>,
    pub component_id: Vec<u32>,
    pub touches_boundary: Vec<bool>,
    /// Vertices that belonged to a simplex dropped for leaving the ball.
    pub at_boundary: Vec<bool>,
    pub stats: ExtractStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub count: usize,
    /// Length (n = 2) or area (n = 3) per component.
    pub measure: Vec<f64>,
    pub simplex_count: Vec<usize>,
    pub touches_boundary: Vec<bool>,
}

pub fn extract_level(field: &ScalarField, t: f64, radius: f64, h: f64) -> Result<LevelSetMesh, LevelSetError> {
    extract_level_with(field, t, radius, h, &ExtractOptions::default())
}

struct Projected {
    point: Vec3,
    geometry: Option<PointGeometry>,
    ok: bool,
}

/// Place a vertex on the grid edge `[a, b]`, across which `f − t` changes
/// sign, by bracketed root finding, then polish with Newton steps along
/// `∇f/|∇f|²`.
fn project(field: &ScalarField, ends: [Vec3; 2], vals: [f64; 2], t: f64, h: f64, iterations: u32) -> Projected {
    let tol = 1e-9 * (1.0 + t.abs());
    let target = 1e-13 * (1.0 + t.abs());
    let [pa, pb] = ends;
    let g = |s: f64| field.value(&(pa + (pb - pa) * s)).map(|v| v - t);
    let (mut a, mut ga, mut b, mut gb) = (0.0, vals[0], 1.0, vals[1]);
    let mut x = pa + (pb - pa) * (ga / (ga - gb));
    let failed = |x: Vec3| Projected { point: x, geometry: None, ok: false };
    for _ in 0..60 {
        if ga == 0.0 || gb == 0.0 || b - a < 1e-15 {
            break;
        }
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let Ok(gc) = g(c) else { return failed(x) };
        if gc.abs() <= target {
            a = c;
            ga = gc;
            b = c;
            gb = gc;
            break;
        }
        if (gc >= 0.0) == (gb >= 0.0) {
            ga *= 0.5;
        } else {
            a = b;
            ga = gb;
        }
        b = c;
        gb = gc;
        if a > b {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut ga, &mut gb);
        }
    }
    let start = pa + (pb - pa) * if ga.abs() <= gb.abs() { a } else { b };
    x = start;
    for _ in 0..iterations {
        let Ok(jet) = field.eval2(&x) else { return failed(x) };
        let r = jet.value - t;
        let grad = jet.gradient();
        let g2 = grad.norm_squared();
        if r.abs() <= target || g2 == 0.0 {
            break;
        }
        let step = grad * (r / g2);
        x -= step;
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    let Ok(value) = field.value(&x) else { return failed(x) };
    let on_level = (value - t).abs() < tol;
    if !on_level || (x - start).norm() > 2.0 * h {
        return failed(x);
    }
    let geometry = PointGeometry::at(field, &x).ok();
    Projected { point: x, geometry, ok: true }
}

pub fn extract_level_with(
    field: &ScalarField,
    t: f64,
    radius: f64,
    h: f64,
    opts: &ExtractOptions,
) -> Result<LevelSetMesh, LevelSetError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LevelSetError::BadRadius(radius));
    }
    if !(h > 0.0 && h < radius / 8.0) {
        return Err(LevelSetError::BadCellSize { h, radius });
    }
    if !t.is_finite() {
        return Err(LevelSetError::BadLevel(t));
    }
    let arity = field.arity();
    let grid = Grid { field, level: t, radius, h, dim: arity };
    let leaves = grid.leaves();
    let patches = par::map(&leaves, |b| grid.contour(b));

    let mut stats = ExtractStats { leaves: leaves.len(), ..Default::default() };
    let mut index: HashMap<EdgeKey, u32> = HashMap::new();
    let mut raw_edges = Vec::new();
    let mut simplices = Vec::new();
    for p in &patches {
        stats.undefined_cells += p.undefined_cells;
        let map: Vec<u32> = p
            .keys
            .iter()
            .zip(&p.edges)
            .map(|(k, e)| {
                *index.entry(*k).or_insert_with(|| {
                    raw_edges.push(*e);
                    (raw_edges.len() - 1) as u32
                })
            })
            .collect();
        simplices.extend(p.simplices.iter().map(|s| s.map(|v| map[v as usize])));
    }
    drop(patches);

    let projected = par::map(&raw_edges, |(ends, vals)| project(field, *ends, *vals, t, h, opts.newton_iterations));
    stats.diverged = projected.iter().filter(|p| !p.ok).count();
    if stats.diverged > 0 {
        warn!("level {t}: {} vertices failed to project and were dropped", stats.diverged);
    }

    let mut at_boundary = vec![false; raw_edges.len()];
    let nv = arity;
    simplices.retain(|s| {
        let s = &s[..nv];
        if s.iter().any(|&v| !projected[v as usize].ok) {
            return false;
        }
        if s[0] == s[1] || s[nv - 1] == s[0] || s[nv - 1] == s[1] && nv == 3 {
            return false;
        }
        if s.iter().any(|&v| projected[v as usize].point.norm() > radius) {
            stats.dropped_outside += 1;
            for &v in s {
                at_boundary[v as usize] = true;
            }
            return false;
        }
        true
    });

    let mut points: Vec<Vec3> = projected.iter().map(|p| p.point).collect();
    let mut geometry: Vec<Option<PointGeometry>> = projected.iter().map(|p| p.geometry).collect();
    drop(projected);

    if arity == 2 && opts.refine_angle.is_finite() {
        let refiner = Refiner {
            field,
            level: t,
            radius,
            max_angle: opts.refine_angle,
            max_depth: opts.refine_depth,
        };
        let results = par::map(&simplices, |s| {
            let (a, b) = (s[0] as usize, s[1] as usize);
            match (&geometry[a], &geometry[b]) {
                (Some(ga), Some(gb)) => {
                    Some(refiner.refine_segment((points[a], ga.normal()), (points[b], gb.normal())))
                }
                _ => None,
            }
        });
        let mut refined = Vec::with_capacity(simplices.len());
        for (s, r) in simplices.iter().zip(results) {
            match r {
                Some((added, chain)) if !added.is_empty() => {
                    let base = points.len() as u32;
                    stats.refined_points += added.len();
                    for sp in added {
                        points.push(sp.point);
                        geometry.push(Some(sp.geometry));
                        at_boundary.push(false);
                    }
                    let id = |k: u32| match k {
                        0 => s[0],
                        1 => s[1],
                        k => base + k - 2,
                    };
                    refined.extend(chain.iter().map(|&[i, j]| [id(i), id(j), id(j)]));
                }
                _ => refined.push(*s),
            }
        }
        simplices = refined;
    }

    // Compact to the vertices still referenced.
    let mut remap = vec![u32::MAX; points.len()];
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut per_vertex = Vec::new();
    let mut singular = Vec::new();
    let mut boundary = Vec::new();
    for s in &mut simplices {
        for v in s.iter_mut() {
            let old = *v as usize;
            if remap[old] == u32::MAX {
                remap[old] = vertices.len() as u32;
                vertices.push(points[old]);
                match &geometry[old] {
                    Some(g) => {
                        normals.push(g.normal());
                        per_vertex.push(g.curvature);
                        singular.push(false);
                    }
                    None => {
                        normals.push(Vec3::zeros());
                        per_vertex.push(singular_curvature(arity));
                        singular.push(true);
                    }
                }
                boundary.push(at_boundary[old]);
            }
            *v = remap[old];
        }
    }
    stats.singular = singular.iter().filter(|s| **s).count();

    let (component_id, touches_boundary) = label_components(vertices.len(), &simplices, &boundary);

    let mut mesh = LevelSetMesh {
        arity,
        level: t,
        radius,
        cell_size: h,
        vertices,
        normals,
        per_vertex,
        singular,
        simplices,
        orientation_flagged: Vec::new(),
        component_id,
        touches_boundary,
        at_boundary: boundary,
        stats,
    };
    mesh.orientation_flagged = par::map_range(mesh.simplices.len(), |i| {
        let n = mesh.simplex_normal(i);
        let bary = mesh.barycenter(i);
        let nu = crate::geometry::gauss_map(field, &bary).unwrap_or_else(|_| {
            mesh.simplex(i).iter().map(|&v| mesh.normals[v as usize]).sum::<Vec3>()
        });
        n.dot(&nu) <= 0.0 && n.norm() > 0.0
    });
    Ok(mesh)
}

/// Component label per vertex, and whether each component reaches the ball
/// boundary.
fn label_components(n_vertices: usize, simplices: &[[u32; 3]], boundary: &[bool]) -> (Vec<u32>, Vec<bool>) {
    let mut uf = UnionFind::<u32>::new(n_vertices);
    for s in simplices {
        uf.union(s[0], s[1]);
        uf.union(s[1], s[2]);
    }
    let mut label = HashMap::new();
    let component_id: Vec<u32> = (0..n_vertices as u32)
        .map(|v| {
            let root = uf.find(v);
            let next = label.len() as u32;
            *label.entry(root).or_insert(next)
        })
        .collect();
    let mut touches_boundary = vec![false; label.len()];
    for (v, &c) in component_id.iter().enumerate() {
        touches_boundary[c as usize] |= boundary[v];
    }
    (component_id, touches_boundary)
}

fn singular_curvature(arity: usize) -> PointCurvature {
    PointCurvature {
        dim: arity - 1,
        shape: [[0.0; 2]; 2],
        principal: [0.0; 2],
        gauss: 0.0,
        index: 0,
        degenerate: true,
    }
}

impl LevelSetMesh {
    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn simplex(&self, i: usize) -> &[u32] {
        &self.simplices[i][..self.arity]
    }

    pub fn simplex_points(&self, i: usize) -> [Vec3; 3] {
        self.simplices[i].map(|v| self.vertices[v as usize])
    }

    /// Oriented normal scaled by the simplex (n−1)-volume.
    pub fn simplex_normal(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.simplex_points(i);
        if self.arity == 2 {
            let d = b - a;
            Vec3::new(-d.y, d.x, 0.0)
        } else {
            (b - a).cross(&(c - a)) * 0.5
        }
    }

    pub fn simplex_volume(&self, i: usize) -> f64 {
        self.simplex_normal(i).norm()
    }

    pub fn barycenter(&self, i: usize) -> Vec3 {
        let s = self.simplex(i);
        s.iter().map(|&v| self.vertices[v as usize]).sum::<Vec3>() / s.len() as f64
    }

    pub fn total_volume(&self) -> f64 {
        let v: Vec<f64> = (0..self.simplices.len()).map(|i| self.simplex_volume(i)).collect();
        par::pairwise_sum(&v)
    }

    pub fn n_components(&self) -> usize {
        self.touches_boundary.len()
    }

    /// Share of simplices whose orientation disagrees with `ν_f`.
    pub fn orientation_defect(&self) -> f64 {
        if self.simplices.is_empty() {
            return 0.0;
        }
        self.orientation_flagged.iter().filter(|f| **f).count() as f64 / self.simplices.len() as f64
    }

    pub fn components(&self) -> ComponentSummary {
        let count = self.n_components();
        let mut measure = vec![0.0; count];
        let mut simplex_count = vec![0; count];
        for i in 0..self.simplices.len() {
            let c = self.component_id[self.simplices[i][0] as usize] as usize;
            measure[c] += self.simplex_volume(i);
            simplex_count[c] += 1;
        }
        ComponentSummary { count, measure, simplex_count, touches_boundary: self.touches_boundary.clone() }
    }

    /// The part of the mesh inside the smaller ball `B_r`: simplices with a
    /// vertex outside are dropped and their remaining vertices marked as
    /// boundary vertices.
    pub fn restricted(&self, r: f64) -> LevelSetMesh {
        let inside = |s: &[u32; 3]| s.iter().all(|&v| self.vertices[v as usize].norm() <= r);
        let mut boundary = self.at_boundary.clone();
        for s in &self.simplices {
            if !inside(s) {
                for &v in s {
                    boundary[v as usize] = true;
                }
            }
        }
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut keep = Vec::new();
        let mut simplices = Vec::new();
        let mut flagged = Vec::new();
        for (s, f) in self.simplices.iter().zip(&self.orientation_flagged) {
            if !inside(s) {
                continue;
            }
            simplices.push(s.map(|v| {
                let old = v as usize;
                if remap[old] == u32::MAX {
                    remap[old] = keep.len() as u32;
                    keep.push(old);
                }
                remap[old]
            }));
            flagged.push(*f);
        }
        let at_boundary: Vec<bool> = keep.iter().map(|&v| boundary[v]).collect();
        let (component_id, touches_boundary) = label_components(keep.len(), &simplices, &at_boundary);
        LevelSetMesh {
            arity: self.arity,
            level: self.level,
            radius: r.min(self.radius),
            cell_size: self.cell_size,
            vertices: keep.iter().map(|&v| self.vertices[v]).collect(),
            normals: keep.iter().map(|&v| self.normals[v]).collect(),
            per_vertex: keep.iter().map(|&v| self.per_vertex[v]).collect(),
            singular: keep.iter().map(|&v| self.singular[v]).collect(),
            simplices,
            orientation_flagged: flagged,
            component_id,
            touches_boundary,
            at_boundary,
            stats: self.stats,
        }
    }

    /// Wavefront OBJ: vertices, then triangles (`f`) or segments (`l`).
    pub fn write_obj<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# level t = {} in ball R = {}, cell h = {}", self.level, self.radius, self.cell_size)?;
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for s in &self.simplices {
            if self.arity == 2 {
                writeln!(w, "l {} {}", s[0] + 1, s[1] + 1)?;
            } else {
                writeln!(w, "f {} {} {}", s[0] + 1, s[1] + 1, s[2] + 1)?;
            }
        }
        Ok(())
    }

    pub fn export_obj(&self, path: &Path) -> io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_obj(io::BufWriter::new(f))
    }
}
