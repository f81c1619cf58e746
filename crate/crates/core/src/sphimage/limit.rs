//! One-sided Hausdorff limits of Gauss images as `t → c±`.
//!
//! Rasters are built at `t_j = c ± δ₀·2^{−j}`; a cell belongs to the limit
//! when its membership has been constant over the last few rasters. This is
//! an estimate: the true limit would need `j → ∞`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{hausdorff, rasterize, SphImageError, SpherePartition, SphericalRaster};
use crate::expr::ScalarField;
use crate::levelset::{extract_level, CellRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub delta0: f64,
    /// Rasters at j = 0..=steps.
    pub steps: usize,
    /// Number of trailing rasters that must agree.
    pub window: usize,
    pub radius: f64,
    /// Grow the ball as `R·δ₀/|t_j − c|` so that features escaping to
    /// infinity like `1/|t − c|` stay inside.
    pub grow_radius: bool,
    pub cell: CellRule,
    /// Cells of the partition; 0 picks the default for the arity.
    pub cells: usize,
}

impl Default for LimitParams {
    fn default() -> Self {
        LimitParams {
            delta0: 0.1,
            steps: 12,
            window: 3,
            radius: 10.0,
            grow_radius: false,
            cell: CellRule::ADAPTIVE,
            cells: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneSidedLimit {
    pub c: f64,
    pub side: Side,
    pub partition: SpherePartition,
    pub levels: Vec<f64>,
    pub radii: Vec<f64>,
    /// Covered area and `Σ fiber·area` of each raster in the sequence.
    pub covered_areas: Vec<f64>,
    pub abs_totals: Vec<f64>,
    /// Hausdorff distance between consecutive covered sets (`None` when
    /// one of them is empty).
    pub hausdorff_steps: Vec<Option<f64>>,
    /// Cells covered in every raster of the window.
    pub limit_cells: Vec<usize>,
    /// Cells whose multiplicity is `k` in every raster of the window.
    pub limit_by_k: BTreeMap<u32, Vec<usize>>,
    /// Cells whose coverage changed inside the window; excluded.
    pub unstable: usize,
    /// Covered cells whose multiplicity changed inside the window.
    pub unstable_multiplicity: usize,
}

impl OneSidedLimit {
    pub fn area(&self) -> f64 {
        self.limit_cells.len() as f64 * self.partition.cell_area()
    }

    pub fn areas_by_k(&self) -> BTreeMap<u32, f64> {
        let a = self.partition.cell_area();
        self.limit_by_k.iter().map(|(k, v)| (*k, v.len() as f64 * a)).collect()
    }

    /// `Σ_k k·area(V_k)`.
    pub fn abs_total(&self) -> f64 {
        self.areas_by_k().iter().map(|(k, a)| *k as f64 * a).sum()
    }
}

pub fn one_sided_limit(
    field: &ScalarField,
    c: f64,
    side: Side,
    params: &LimitParams,
) -> Result<OneSidedLimit, SphImageError> {
    let arity = field.arity();
    let partition = if params.cells == 0 {
        SpherePartition::default_for(arity)
    } else {
        SpherePartition::new(arity, params.cells)
    };
    let mut out = OneSidedLimit {
        c,
        side,
        partition: partition.clone(),
        levels: Vec::new(),
        radii: Vec::new(),
        covered_areas: Vec::new(),
        abs_totals: Vec::new(),
        hausdorff_steps: Vec::new(),
        limit_cells: Vec::new(),
        limit_by_k: BTreeMap::new(),
        unstable: 0,
        unstable_multiplicity: 0,
    };
    let mut rasters: Vec<SphericalRaster> = Vec::new();
    for j in 0..=params.steps {
        let delta = params.delta0 * 0.5f64.powi(j as i32);
        let t = c + side.sign() * delta;
        let radius = if params.grow_radius { params.radius * params.delta0 / delta } else { params.radius };
        let mesh = extract_level(field, t, radius, params.cell.cell_for(t))?;
        let raster = rasterize(&mesh, &partition);
        out.levels.push(t);
        out.radii.push(radius);
        out.covered_areas.push(raster.covered_area());
        out.abs_totals.push(raster.abs_total());
        if let Some(prev) = rasters.last() {
            let h = hausdorff(&partition, &prev.covered_cells(), &raster.covered_cells()).ok();
            out.hausdorff_steps.push(h.map(|h| h.value));
        }
        rasters.push(raster);
    }
    let window = &rasters[rasters.len().saturating_sub(params.window.max(1))..];
    for cell in 0..partition.len() {
        let covered = window.iter().filter(|r| r.covered(cell)).count();
        if covered == 0 {
            continue;
        }
        if covered < window.len() {
            out.unstable += 1;
            continue;
        }
        out.limit_cells.push(cell);
        let k = window[0].fiber_count[cell];
        if window.iter().all(|r| r.fiber_count[cell] == k) {
            out.limit_by_k.entry(k).or_default().push(cell);
        } else {
            out.unstable_multiplicity += 1;
        }
    }
    Ok(out)
}

/// Cells of `V_{k,l} = V_k^− ∩ V_l^+`, with `k = 0` or `l = 0` for cells
/// outside one of the limits. Both limits must share a partition.
pub fn bistrata(minus: &OneSidedLimit, plus: &OneSidedLimit) -> BTreeMap<(u32, u32), Vec<usize>> {
    let label = |lim: &OneSidedLimit| {
        let mut v = vec![0u32; lim.partition.len()];
        for (k, cells) in &lim.limit_by_k {
            for &c in cells {
                v[c] = *k;
            }
        }
        v
    };
    let (a, b) = (label(minus), label(plus));
    let mut out: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for c in 0..a.len().min(b.len()) {
        if a[c] != 0 || b[c] != 0 {
            out.entry((a[c], b[c])).or_default().push(c);
        }
    }
    out
}

/// Cells of `a` farther than one cell diameter from every cell of `b`.
pub fn outside_ring(partition: &SpherePartition, a: &[usize], b: &[usize]) -> Vec<usize> {
    let reach = partition.cell_diameter() * (1.0 + 1e-9);
    let pb: Vec<_> = b.iter().map(|&c| partition.center(c)).collect();
    a.iter()
        .copied()
        .filter(|&c| {
            let u = partition.center(c);
            pb.iter().all(|q| (u - q).norm() > reach)
        })
        .collect()
}
