//! The Gauss image of a level on the unit sphere.
//!
//! Each mesh simplex maps to the spherical simplex spanned by its vertex
//! normals. Counting, for every cell center `u` of an equal-area partition,
//! the spherical simplices that contain it gives `#ν_t⁻¹(u)`; summing their
//! orientations gives the degree. Areas of the multiplicity strata then
//! reproduce `|K|` and `K`.

mod escape;
mod limit;
mod partition;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::ScalarField;
use crate::geometry::shape_operator;
use crate::levelset::{LevelSetError, LevelSetMesh};
use crate::{oracle, par, Vec3};

pub use escape::{escape_diagnostic, EscapeComponent, EscapeParams, EscapeReport};
pub use limit::{bistrata, one_sided_limit, outside_ring, LimitParams, OneSidedLimit, Side};
pub use partition::SpherePartition;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SphImageError {
    #[error("Hausdorff distance needs two non-empty sets")]
    EmptySet,
    #[error(transparent)]
    Extract(#[from] LevelSetError),
}

/// A spherical simplex spanned by the vertex normals of one mesh simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSimplex {
    pub simplex: usize,
    pub arity: usize,
    pub normals: [Vec3; 3],
    /// Unit vector at the middle of the image and the angular radius of a
    /// cap around it containing the whole image.
    pub center: Vec3,
    pub radius: f64,
    /// n = 2: counter-clockwise angle from the first to the second normal.
    /// n = 3: `det(ν₀, ν₁, ν₂)`.
    pub spread: f64,
    /// Orientation of the image relative to the mesh; 0 when degenerate.
    pub sign: i8,
    /// Near a stratum boundary: mixed or degenerate vertex indices, normal
    /// spread above 90°, or vanishing image.
    pub flagged: bool,
}

/// Image area below which a spherical simplex counts as degenerate.
pub const MIN_IMAGE_AREA: f64 = 1e-12;

fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

impl GaussSimplex {
    pub fn from_mesh(mesh: &LevelSetMesh, i: usize) -> Option<Self> {
        let s = mesh.simplex(i);
        if s.iter().any(|&v| mesh.singular[v as usize]) {
            return None;
        }
        let pcs: Vec<_> = s.iter().map(|&v| mesh.per_vertex[v as usize]).collect();
        let mixed = pcs.iter().any(|p| p.degenerate || p.index != pcs[0].index);
        let mut normals = [Vec3::zeros(); 3];
        for (k, &v) in s.iter().enumerate() {
            normals[k] = mesh.normals[v as usize];
        }
        if mesh.arity == 2 {
            let [na, nb, _] = normals;
            let spread = (na.x * nb.y - na.y * nb.x).atan2(na.dot(&nb));
            let (sn, cs) = (0.5 * spread).sin_cos();
            let center = Vec3::new(na.x * cs - na.y * sn, na.x * sn + na.y * cs, 0.0);
            let degenerate = spread.abs() < MIN_IMAGE_AREA;
            // Counter-clockwise images belong to negatively curved arcs.
            let sign = if degenerate { 0 } else if spread < 0.0 { 1 } else { -1 };
            normals[2] = nb;
            return Some(GaussSimplex {
                simplex: i,
                arity: 2,
                normals,
                center,
                radius: 0.5 * spread.abs(),
                spread,
                sign,
                flagged: mixed || degenerate || spread.abs() > std::f64::consts::FRAC_PI_2,
            });
        }
        let [a, b, c] = normals;
        let spread = det3(&a, &b, &c);
        let sum = a + b + c;
        let center = if sum.norm() > 1e-9 { sum.normalize() } else { a };
        let radius = normals.iter().map(|n| center.dot(n).clamp(-1.0, 1.0).acos()).fold(0.0, f64::max);
        let wide = [(a, b), (b, c), (c, a)].iter().any(|(p, q)| p.dot(q) < 0.0);
        let degenerate = 0.5 * spread.abs() < MIN_IMAGE_AREA;
        let sign = if degenerate { 0 } else if spread > 0.0 { 1 } else { -1 };
        Some(GaussSimplex {
            simplex: i,
            arity: 3,
            normals,
            center,
            radius,
            spread,
            sign,
            flagged: mixed || degenerate || wide,
        })
    }

    /// Barycentric weights of `u` if the image contains it.
    ///
    /// Arcs are half-open so consecutive arcs that turn the same way never
    /// both claim their shared endpoint.
    pub fn contains(&self, u: &Vec3) -> Option<[f64; 3]> {
        if self.sign == 0 {
            return None;
        }
        if self.arity == 2 {
            let na = self.normals[0];
            let alpha = (na.x * u.y - na.y * u.x).atan2(na.dot(u));
            let d = self.spread;
            let inside = if d > 0.0 { alpha >= 0.0 && alpha < d } else { alpha > d && alpha <= 0.0 };
            if !inside {
                return None;
            }
            let w = alpha / d;
            return Some([1.0 - w, w, 0.0]);
        }
        if u.dot(&self.center) <= 0.0 {
            return None;
        }
        let [a, b, c] = self.normals;
        let s = self.spread.signum();
        let w = [det3(u, &b, &c) * s, det3(&a, u, &c) * s, det3(&a, &b, u) * s];
        if w.iter().any(|x| *x < 0.0) {
            return None;
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return None;
        }
        Some(w.map(|x| x / total))
    }
}

pub fn gauss_simplices(mesh: &LevelSetMesh) -> Vec<GaussSimplex> {
    par::map_range(mesh.simplices.len(), |i| GaussSimplex::from_mesh(mesh, i))
        .into_iter()
        .flatten()
        .collect()
}

/// Multiplicity and degree of the Gauss image over an equal-area partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphericalRaster {
    pub level: f64,
    pub partition: SpherePartition,
    /// `#ν_t⁻¹(u)` at each cell center.
    pub fiber_count: Vec<u32>,
    /// Signed count at each cell center.
    pub degree: Vec<i32>,
    /// Cells covered by a flagged image simplex; exempt from degree checks.
    pub flagged: Vec<bool>,
}

impl SphericalRaster {
    pub fn empty(level: f64, partition: SpherePartition) -> Self {
        let m = partition.len();
        SphericalRaster { level, partition, fiber_count: vec![0; m], degree: vec![0; m], flagged: vec![false; m] }
    }

    pub fn covered(&self, c: usize) -> bool {
        self.fiber_count[c] > 0
    }

    pub fn covered_cells(&self) -> Vec<usize> {
        (0..self.fiber_count.len()).filter(|&c| self.covered(c)).collect()
    }

    pub fn covered_area(&self) -> f64 {
        self.covered_cells().len() as f64 * self.partition.cell_area()
    }

    /// `Σ_c fiber_count·area`, the raster estimate of `|K|`.
    pub fn abs_total(&self) -> f64 {
        self.fiber_count.iter().map(|&k| k as u64).sum::<u64>() as f64 * self.partition.cell_area()
    }

    /// `Σ_c degree·area`, the raster estimate of `K`.
    pub fn signed_total(&self) -> f64 {
        self.degree.iter().map(|&k| k as i64).sum::<i64>() as f64 * self.partition.cell_area()
    }

    /// Unflagged cells breaking `|deg| ≤ #fiber` or `deg ≡ #fiber (mod 2)`.
    pub fn parity_violations(&self) -> usize {
        (0..self.fiber_count.len())
            .filter(|&c| !self.flagged[c])
            .filter(|&c| {
                let (k, d) = (self.fiber_count[c] as i64, self.degree[c] as i64);
                d.abs() > k || (k - d).rem_euclid(2) != 0
            })
            .count()
    }

    /// CSV: one row per cell with center, area, fiber count and degree.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,z,area,fiber_count,degree,flagged")?;
        let area = self.partition.cell_area();
        for c in 0..self.fiber_count.len() {
            let u = self.partition.center(c);
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                u.x, u.y, u.z, area, self.fiber_count[c], self.degree[c], self.flagged[c] as u8
            )?;
        }
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> io::Result<()> {
        self.write_csv(io::BufWriter::new(std::fs::File::create(path)?))
    }
}

pub fn rasterize(mesh: &LevelSetMesh, partition: &SpherePartition) -> SphericalRaster {
    assert_eq!(mesh.arity, partition.arity, "mesh and partition dimensions differ");
    let mut raster = SphericalRaster::empty(mesh.level, partition.clone());
    let images = gauss_simplices(mesh);
    let centers = partition.centers();
    let hits = par::map_range(images.len().div_ceil(512), |chunk| {
        let mut out: Vec<(u32, i8, bool)> = Vec::new();
        let mut cand = Vec::new();
        for g in &images[chunk * 512..((chunk + 1) * 512).min(images.len())] {
            if g.sign == 0 {
                out.push((partition.locate(&g.center) as u32, 0, true));
                continue;
            }
            partition.candidates(&g.center, g.radius, &mut cand);
            for &c in &cand {
                if g.contains(&centers[c]).is_some() {
                    out.push((c as u32, g.sign, g.flagged));
                }
            }
        }
        out
    });
    for (c, sign, flagged) in hits.into_iter().flatten() {
        let c = c as usize;
        if sign != 0 {
            raster.fiber_count[c] += 1;
            raster.degree[c] += sign as i32;
        }
        raster.flagged[c] |= flagged;
    }
    raster
}

/// `k ↦ area(U_{k,t})` for every multiplicity `k ≥ 1` that occurs.
pub fn strata_areas(raster: &SphericalRaster) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    let area = raster.partition.cell_area();
    for &k in raster.fiber_count.iter().filter(|k| **k > 0) {
        *out.entry(k).or_insert(0.0) += area;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HausdorffEstimate {
    /// Chordal Hausdorff distance.
    pub value: f64,
    /// A point of one set and its nearest point in the other realizing it.
    pub witness: [Vec3; 2],
}

fn directed(a: &[Vec3], b: &[Vec3]) -> (f64, [Vec3; 2]) {
    let best = par::map(a, |p| {
        let (d2, q) = b
            .iter()
            .map(|q| ((p - q).norm_squared(), *q))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .expect("non-empty");
        (d2, [*p, q])
    });
    best.into_iter()
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(d2, w)| (d2.sqrt(), w))
        .expect("non-empty")
}

/// Hausdorff distance between two finite point sets on the sphere.
pub fn hausdorff_points(a: &[Vec3], b: &[Vec3]) -> Result<HausdorffEstimate, SphImageError> {
    if a.is_empty() || b.is_empty() {
        return Err(SphImageError::EmptySet);
    }
    let (dab, wab) = directed(a, b);
    let (dba, wba) = directed(b, a);
    Ok(if dab >= dba {
        HausdorffEstimate { value: dab, witness: wab }
    } else {
        HausdorffEstimate { value: dba, witness: wba }
    })
}

/// Hausdorff distance between two cell sets, measured between centers.
pub fn hausdorff(partition: &SpherePartition, a: &[usize], b: &[usize]) -> Result<HausdorffEstimate, SphImageError> {
    let pa: Vec<Vec3> = a.iter().map(|&c| partition.center(c)).collect();
    let pb: Vec<Vec3> = b.iter().map(|&c| partition.center(c)).collect();
    hausdorff_points(&pa, &pb)
}

/// Outcome of comparing raster degrees with `Σ(−1)^λ` over located fibers.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DegreeCheck {
    pub sampled: usize,
    pub agreed: usize,
    /// Samples whose fiber hit a degenerate point or failed to converge.
    pub flagged: usize,
    /// `(cell, raster degree, Σ(−1)^λ)` for each disagreement.
    pub mismatches: Vec<(usize, i32, i32)>,
}

impl DegreeCheck {
    /// Agreement rate over samples that were not flagged.
    pub fn rate(&self) -> f64 {
        let n = self.sampled - self.flagged;
        if n == 0 {
            1.0
        } else {
            self.agreed as f64 / n as f64
        }
    }

    pub fn merge(&mut self, other: &DegreeCheck) {
        self.sampled += other.sampled;
        self.agreed += other.agreed;
        self.flagged += other.flagged;
        self.mismatches.extend(other.mismatches.iter().copied());
    }
}

/// Located preimages `x ∈ F_t ∩ B_R` with `ν_f(x) = u`, refined from
/// every image simplex containing `u`, and the number of refinements that
/// diverged.
pub fn locate_fiber(field: &ScalarField, mesh: &LevelSetMesh, images: &[GaussSimplex], u: &Vec3) -> (Vec<Vec3>, usize) {
    let mut out: Vec<Vec3> = Vec::new();
    let mut diverged = 0;
    for g in images {
        if u.dot(&g.center) < (g.radius + 1e-12).min(std::f64::consts::PI).cos() {
            continue;
        }
        let Some(w) = g.contains(u) else { continue };
        let pts = mesh.simplex_points(g.simplex);
        let x0 = pts[0] * w[0] + pts[1] * w[1] + pts[2] * w[2];
        let Some(x) = oracle::solve_aligned(field, mesh.level, u, &x0, 4.0 * mesh.cell_size) else {
            diverged += 1;
            continue;
        };
        if x.norm() > mesh.radius {
            continue;
        }
        let tol = 1e-6 * (1.0 + x.norm());
        if out.iter().all(|p| (p - x).norm() > tol) {
            out.push(x);
        }
    }
    (out, diverged)
}

/// Compare `degree[c]` with `Σ_{x ∈ ν_t⁻¹(u_c)} (−1)^{λ(x)}` on up to
/// `samples` random unflagged covered cells.
pub fn degree_check(
    raster: &SphericalRaster,
    mesh: &LevelSetMesh,
    field: &ScalarField,
    samples: usize,
    seed: u64,
) -> DegreeCheck {
    let mut cells: Vec<usize> = (0..raster.fiber_count.len())
        .filter(|&c| raster.covered(c) && !raster.flagged[c])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cells.shuffle(&mut rng);
    cells.truncate(samples);
    let images = gauss_simplices(mesh);
    let results = par::map(&cells, |&c| {
        let u = raster.partition.center(c);
        let (fiber, diverged) = locate_fiber(field, mesh, &images, &u);
        if diverged > 0 {
            return None;
        }
        let mut sum = 0;
        for x in &fiber {
            let pc = shape_operator(field, x).ok()?;
            if pc.degenerate {
                return None;
            }
            sum += if pc.index % 2 == 0 { 1 } else { -1 };
        }
        Some(sum)
    });
    let mut out = DegreeCheck { sampled: cells.len(), ..Default::default() };
    for (&c, r) in cells.iter().zip(results) {
        match r {
            None => out.flagged += 1,
            Some(s) if s == raster.degree[c] => out.agreed += 1,
            Some(s) => out.mismatches.push((c, raster.degree[c], s)),
        }
    }
    out
}
