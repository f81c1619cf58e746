//! An independent count of `K` and `|K|` from linear projections.
//!
//! The critical points of `φ_u = ⟨·, u⟩` on a level are the points where
//! `ν_f = ±u`. Averaging the number of aligned points (and their signs
//! `(−1)^λ`) over directions `u` recovers `|K|` (and `K`) as integrals over
//! the sphere. The mesh is used only to seed Newton solves of
//! `{f = t, ν_f = u}`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::ScalarField;
use crate::geometry::{shape_operator, GeometryError, TangentFrame};
use crate::levelset::{extract_level, LevelSetError, LevelSetMesh};
use crate::sphimage::{gauss_simplices, GaussSimplex};
use crate::{par, Vec3};

/// Alignment tolerance `|u − ⟨u,ν⟩ν|` for accepted critical points.
pub const ALIGN_TOL: f64 = 1e-8;

/// Solve `f(x) = t`, `ν_f(x) = u` by damped Newton from `x0`, refusing
/// solutions more than `max_move` away or with `ν_f = −u`.
pub fn solve_aligned(field: &ScalarField, t: f64, u: &Vec3, x0: &Vec3, max_move: f64) -> Option<Vec3> {
    let n = field.arity();
    let frame = TangentFrame::new(*x0, *u, n);
    let basis = frame.tangent_basis();
    let residual = |jet: &crate::Jet2| {
        let g = jet.gradient();
        let mut r = Vec3::zeros();
        r[0] = jet.value - t;
        for (k, e) in basis.iter().enumerate() {
            r[k + 1] = e.dot(&g);
        }
        r
    };
    let mut x = *x0;
    let mut jet = field.eval2(&x).ok()?;
    let mut r = residual(&jet);
    for _ in 0..60 {
        let g = jet.gradient();
        let gn = g.norm();
        if gn == 0.0 {
            return None;
        }
        let tangential = (g - u * g.dot(u)).norm() / gn;
        if (jet.value - t).abs() <= 1e-12 * (1.0 + t.abs()) && tangential <= 1e-12 {
            break;
        }
        let h = jet.hessian();
        let mut j = Matrix3::zeros();
        for c in 0..3 {
            j[(0, c)] = g[c];
        }
        for (k, e) in basis.iter().enumerate() {
            let row = h * e;
            for c in 0..3 {
                j[(k + 1, c)] = row[c];
            }
        }
        if n == 2 {
            j[(2, 2)] = 1.0;
        }
        let step = j.lu().solve(&r)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let y = x - step * lambda;
            if let Ok(jy) = field.eval2(&y) {
                let ry = residual(&jy);
                if ry.norm() < r.norm() || ry.norm() == 0.0 {
                    x = y;
                    jet = jy;
                    r = ry;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted || (x - x0).norm() > max_move {
            break;
        }
    }
    let g = jet.gradient();
    let nu = g / g.norm();
    let ok = (jet.value - t).abs() <= 1e-9 * (1.0 + t.abs())
        && (u - nu * u.dot(&nu)).norm() < ALIGN_TOL
        && nu.dot(u) > 0.0
        && (x - x0).norm() <= max_move;
    ok.then_some(x)
}

/// A critical point of `φ_u` restricted to the level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionCritical {
    pub point: Vec3,
    pub direction: Vec3,
    /// Index of the shape operator at the point.
    pub morse_index: usize,
    /// `ν_f = +u` rather than `−u`.
    pub aligned: bool,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProjectionScan {
    pub criticals: Vec<ProjectionCritical>,
    /// Candidates whose Newton refinement failed.
    pub diverged: usize,
    /// Some candidate came from a simplex near a stratum boundary.
    pub near_boundary: bool,
}

fn scan_with(field: &ScalarField, mesh: &LevelSetMesh, images: &[GaussSimplex], u: &Vec3) -> ProjectionScan {
    let mut scan = ProjectionScan::default();
    for aligned in [true, false] {
        let w = if aligned { *u } else { -u };
        let mut found: Vec<Vec3> = Vec::new();
        for g in images {
            if w.dot(&g.center) < (g.radius + 1e-12).min(PI).cos() {
                continue;
            }
            let Some(b) = g.contains(&w) else { continue };
            scan.near_boundary |= g.flagged;
            let pts = mesh.simplex_points(g.simplex);
            let x0 = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2];
            let Some(x) = solve_aligned(field, mesh.level, &w, &x0, 4.0 * mesh.cell_size) else {
                scan.diverged += 1;
                continue;
            };
            if x.norm() > mesh.radius || found.iter().any(|p| (p - x).norm() <= 1e-6 * (1.0 + x.norm())) {
                continue;
            }
            found.push(x);
            let Ok(pc) = shape_operator(field, &x) else {
                scan.diverged += 1;
                continue;
            };
            scan.criticals.push(ProjectionCritical {
                point: x,
                direction: *u,
                morse_index: pc.index as usize,
                aligned,
                nondegenerate: !pc.degenerate,
            });
        }
    }
    scan
}

/// Critical points of `φ_u` on the mesh's level, both aligned (`ν = u`) and
/// anti-aligned (`ν = −u`), located from the image simplices containing `±u`.
pub fn find_projection_criticals(mesh: &LevelSetMesh, field: &ScalarField, u: &Vec3) -> ProjectionScan {
    scan_with(field, mesh, &gauss_simplices(mesh), &u.normalize())
}

/// Morse index at `p` of the height `−⟨·, ν_f(p)⟩` on the level, from
/// second differences of the level written as a graph over its tangent
/// plane: `x = p + Σ sᵢeᵢ + g(s)ν`.
pub fn graph_morse_index(field: &ScalarField, p: &Vec3) -> Result<usize, GeometryError> {
    let n = field.arity();
    let t = field.value(p)?;
    let pc = shape_operator(field, p)?;
    let nu = crate::geometry::gauss_map(field, p)?;
    let frame = TangentFrame::new(*p, nu, n);
    let kmax = pc.principal().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let delta = 1e-3 / kmax.max(1.0 / (1.0 + p.norm()));
    let height = |s: [f64; 2]| -> Result<f64, GeometryError> {
        let base = p + frame.tangents[0] * s[0] + frame.tangents[1] * s[1];
        let mut g = 0.0;
        for _ in 0..60 {
            let x = base + nu * g;
            let jet = field.eval2(&x)?;
            let r = jet.value - t;
            let slope = jet.gradient().dot(&nu);
            let step = r / slope;
            g -= step;
            if step.abs() <= 1e-16 * (1.0 + x.norm()) {
                break;
            }
        }
        Ok(g)
    };
    let g0 = height([0.0, 0.0])?;
    let d2 = |i: usize| -> Result<f64, GeometryError> {
        let mut a = [0.0; 2];
        a[i] = delta;
        let mut b = [0.0; 2];
        b[i] = -delta;
        Ok((height(a)? - 2.0 * g0 + height(b)?) / (delta * delta))
    };
    let hess_positive = if n == 2 {
        usize::from(d2(0)? > 0.0)
    } else {
        let (a, d) = (d2(0)?, d2(1)?);
        let mixed = (height([delta, delta])? - height([delta, -delta])? - height([-delta, delta])?
            + height([-delta, -delta])?)
            / (4.0 * delta * delta);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + mixed * mixed).sqrt();
        [mean - r, mean + r].iter().filter(|e| **e > 0.0).count()
    };
    // Index of −g counts the positive eigenvalues of the graph Hessian.
    Ok(hess_positive)
}

/// Compare the shape-operator index with the graph construction.
pub fn morse_index_check(field: &ScalarField, p: &ProjectionCritical) -> bool {
    graph_morse_index(field, &p.point).is_ok_and(|k| k == p.morse_index)
}

/// How directions are drawn for [`mc_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Additive-recurrence (Kronecker) sequence offset by the seed.
    LowDiscrepancy { seed: u64 },
    /// Uniform pseudo-random directions.
    Random { seed: u64 },
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::LowDiscrepancy { seed: 0 }
    }
}

/// Endless stream of unit directions on Sⁿ⁻¹.
pub struct Directions {
    arity: usize,
    k: u64,
    offset: [f64; 2],
    rng: Option<ChaCha8Rng>,
}

impl Directions {
    pub fn new(arity: usize, sampling: Sampling) -> Self {
        match sampling {
            Sampling::LowDiscrepancy { seed } => {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                Directions { arity, k: 0, offset: [r.random(), r.random()], rng: None }
            }
            Sampling::Random { seed } => {
                Directions { arity, k: 0, offset: [0.0; 2], rng: Some(ChaCha8Rng::seed_from_u64(seed)) }
            }
        }
    }
}

impl Iterator for Directions {
    type Item = Vec3;

    fn next(&mut self) -> Option<Vec3> {
        let (a, b) = match &mut self.rng {
            Some(r) => (r.random::<f64>(), r.random::<f64>()),
            None => {
                self.k += 1;
                let k = self.k as f64;
                if self.arity == 2 {
                    // Golden-ratio rotation.
                    ((self.offset[0] + k * 0.618_033_988_749_894_9).fract(), 0.0)
                } else {
                    // Plastic-number R2 sequence.
                    let g = 1.324_717_957_244_746;
                    ((self.offset[0] + k / g).fract(), (self.offset[1] + k / (g * g)).fract())
                }
            }
        };
        Some(if self.arity == 2 {
            let phi = 2.0 * PI * a;
            Vec3::new(phi.cos(), phi.sin(), 0.0)
        } else {
            let z = 1.0 - 2.0 * a;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * b;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    #[serde(rename = "K_est")]
    pub k_est: f64,
    #[serde(rename = "absK_est")]
    pub abs_k_est: f64,
    /// Standard error of `absK_est`.
    pub stderr: f64,
    /// Standard error of `K_est`.
    pub stderr_signed: f64,
    pub n_used: usize,
    pub n_rejected: usize,
}

/// Per-direction outcome: `(#aligned preimages, Σ(−1)^λ)` or rejection.
fn direction_counts(field: &ScalarField, mesh: &LevelSetMesh, images: &[GaussSimplex], u: &Vec3) -> Option<(f64, f64)> {
    let scan = scan_with(field, mesh, images, u);
    if scan.diverged > 0 || scan.near_boundary {
        return None;
    }
    let mut count = 0.0;
    let mut signed = 0.0;
    for c in scan.criticals.iter().filter(|c| c.aligned) {
        if !c.nondegenerate {
            return None;
        }
        count += 1.0;
        signed += if c.morse_index % 2 == 0 { 1.0 } else { -1.0 };
    }
    Some((count, signed))
}

/// Monte-Carlo `|K| = ∫ #ν_t⁻¹(u) du`, `K = ∫ Σ(−1)^λ du` over directions.
/// Directions near a stratum boundary are rejected and replaced.
pub fn mc_estimate_on(field: &ScalarField, mesh: &LevelSetMesh, n_samples: usize, sampling: Sampling) -> McEstimate {
    let images = gauss_simplices(mesh);
    let mut dirs = Directions::new(mesh.arity, sampling);
    let mut used: Vec<(f64, f64)> = Vec::with_capacity(n_samples);
    let mut rejected = 0;
    let budget = 4 * n_samples.max(1);
    while used.len() < n_samples && used.len() + rejected < budget {
        let batch: Vec<Vec3> = dirs.by_ref().take(n_samples - used.len()).collect();
        for r in par::map(&batch, |u| direction_counts(field, mesh, &images, u)) {
            match r {
                Some(c) => used.push(c),
                None => rejected += 1,
            }
        }
    }
    let area = if mesh.arity == 2 { 2.0 * PI } else { 4.0 * PI };
    let m = used.len() as f64;
    let stats = |xs: Vec<f64>| {
        let mean = xs.iter().sum::<f64>() / m.max(1.0);
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        (area * mean, area * (var / m.max(1.0)).sqrt())
    };
    let (abs_k_est, stderr) = stats(used.iter().map(|c| c.0).collect());
    let (k_est, stderr_signed) = stats(used.iter().map(|c| c.1).collect());
    McEstimate { k_est, abs_k_est, stderr, stderr_signed, n_used: used.len(), n_rejected: rejected }
}

/// [`mc_estimate_on`] for the level `t` meshed at cell size `h` in `B_R`.
pub fn mc_estimate(
    field: &ScalarField,
    t: f64,
    radius: f64,
    h: f64,
    n_samples: usize,
    sampling: Sampling,
) -> Result<McEstimate, LevelSetError> {
    let mesh = extract_level(field, t, radius, h)?;
    Ok(mc_estimate_on(field, &mesh, n_samples, sampling))
}
