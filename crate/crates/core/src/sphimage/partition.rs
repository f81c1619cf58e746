//! Equal-area partitions of the unit circle and the unit sphere.
//!
//! The sphere is cut into latitude bands whose boundaries are chosen so
//! that every band holds a whole number of cells of area `4π/m`; each band
//! is then split evenly in longitude.

use std::f64::consts::PI;

use serde::Serialize;

use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Band {
    /// `z` at the upper and lower edge (`z_top > z_bottom`).
    z_top: f64,
    z_bottom: f64,
    count: usize,
    first: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpherePartition {
    /// Ambient dimension n; the partition lives on Sⁿ⁻¹.
    pub arity: usize,
    cells: usize,
    bands: Vec<Band>,
}

fn wrap(phi: f64) -> f64 {
    let p = phi.rem_euclid(2.0 * PI);
    if p >= 2.0 * PI {
        0.0
    } else {
        p
    }
}

impl SpherePartition {
    pub const DEFAULT_CELLS_2D: usize = 720;
    pub const DEFAULT_CELLS_3D: usize = 10242;

    /// `m` cells on Sⁿ⁻¹ (n = 2 or 3).
    pub fn new(arity: usize, m: usize) -> Self {
        assert!(arity == 2 || arity == 3, "arity must be 2 or 3");
        let m = m.max(1);
        if arity == 2 {
            return SpherePartition { arity, cells: m, bands: Vec::new() };
        }
        let n_bands = (((PI * m as f64).sqrt() / 2.0).round() as usize).clamp(1, m);
        // Ideal counts from equal-colatitude bands, rounded by largest
        // remainder so they sum to m with at least one cell each.
        let ideal: Vec<f64> = (0..n_bands)
            .map(|i| {
                let (a, b) = (i as f64 * PI / n_bands as f64, (i + 1) as f64 * PI / n_bands as f64);
                m as f64 * (a.cos() - b.cos()) / 2.0
            })
            .collect();
        let mut counts: Vec<usize> = ideal.iter().map(|x| (x.floor() as usize).max(1)).collect();
        let mut total: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..n_bands).collect();
        order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
        let mut k = 0;
        while total < m {
            counts[order[k % n_bands]] += 1;
            total += 1;
            k += 1;
        }
        while total > m {
            let i = (0..n_bands).filter(|&i| counts[i] > 1).max_by_key(|&i| counts[i]).expect("m ≥ bands");
            counts[i] -= 1;
            total -= 1;
        }
        let mut bands = Vec::with_capacity(n_bands);
        let (mut z, mut first) = (1.0, 0);
        for (i, &count) in counts.iter().enumerate() {
            let z_bottom = if i + 1 == n_bands { -1.0 } else { z - 2.0 * count as f64 / m as f64 };
            bands.push(Band { z_top: z, z_bottom, count, first });
            z = z_bottom;
            first += count;
        }
        SpherePartition { arity, cells: m, bands }
    }

    pub fn default_for(arity: usize) -> Self {
        let m = if arity == 2 { Self::DEFAULT_CELLS_2D } else { Self::DEFAULT_CELLS_3D };
        Self::new(arity, m)
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    /// Area of Sⁿ⁻¹.
    pub fn total_area(&self) -> f64 {
        if self.arity == 2 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.total_area() / self.cells as f64
    }

    fn band_of_cell(&self, c: usize) -> &Band {
        let i = self.bands.partition_point(|b| b.first + b.count <= c);
        &self.bands[i]
    }

    pub fn center(&self, c: usize) -> Vec3 {
        if self.arity == 2 {
            let phi = (c as f64 + 0.5) * 2.0 * PI / self.cells as f64;
            return Vec3::new(phi.cos(), phi.sin(), 0.0);
        }
        let b = self.band_of_cell(c);
        let z = 0.5 * (b.z_top + b.z_bottom);
        let phi = ((c - b.first) as f64 + 0.5) * 2.0 * PI / b.count as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }

    pub fn centers(&self) -> Vec<Vec3> {
        (0..self.cells).map(|c| self.center(c)).collect()
    }

    /// Cell containing the unit vector `u`.
    pub fn locate(&self, u: &Vec3) -> usize {
        let phi = wrap(u.y.atan2(u.x));
        if self.arity == 2 {
            return ((phi / (2.0 * PI) * self.cells as f64) as usize).min(self.cells - 1);
        }
        let z = u.z.clamp(-1.0, 1.0);
        let i = self.bands.partition_point(|b| b.z_bottom > z).min(self.bands.len() - 1);
        let b = &self.bands[i];
        b.first + ((phi / (2.0 * PI) * b.count as f64) as usize).min(b.count - 1)
    }

    /// Largest chordal diameter of a cell.
    pub fn cell_diameter(&self) -> f64 {
        if self.arity == 2 {
            return 2.0 * (PI / self.cells as f64).min(PI / 2.0).sin();
        }
        let point = |z: f64, phi: f64| {
            let r = (1.0 - z * z).max(0.0).sqrt();
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        };
        self.bands
            .iter()
            .map(|b| {
                let dphi = (2.0 * PI / b.count as f64).min(PI);
                let d1 = (point(b.z_top, 0.0) - point(b.z_bottom, dphi)).norm();
                let d2 = (point(b.z_bottom, 0.0) - point(b.z_bottom, dphi)).norm();
                let d3 = (point(b.z_top, 0.0) - point(b.z_top, dphi)).norm();
                d1.max(d2).max(d3)
            })
            .fold(0.0, f64::max)
    }

    /// Cells whose centers may lie within angle `radius` of the unit vector
    /// `center`; a superset, to be filtered by the caller.
    pub fn candidates(&self, center: &Vec3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let phi_c = wrap(center.y.atan2(center.x));
        if self.arity == 2 {
            let m = self.cells as f64;
            let span = radius + PI / m;
            if span >= PI {
                out.extend(0..self.cells);
                return;
            }
            let lo = ((phi_c - span) / (2.0 * PI) * m).floor() as i64;
            let hi = ((phi_c + span) / (2.0 * PI) * m).ceil() as i64;
            out.extend((lo..=hi).map(|k| k.rem_euclid(self.cells as i64) as usize));
            out.sort_unstable();
            out.dedup();
            return;
        }
        let theta_c = center.z.clamp(-1.0, 1.0).acos();
        let (t_lo, t_hi) = (theta_c - radius, theta_c + radius);
        let z_hi = if t_lo <= 0.0 { 1.0 } else { t_lo.cos() };
        let z_lo = if t_hi >= PI { -1.0 } else { t_hi.cos() };
        let polar = t_lo <= 0.0 || t_hi >= PI;
        for b in &self.bands {
            if b.z_bottom > z_hi || b.z_top < z_lo {
                continue;
            }
            let s_min = (1.0 - b.z_top * b.z_top).sqrt().min((1.0 - b.z_bottom * b.z_bottom).sqrt());
            let half = PI / b.count as f64;
            if polar || s_min <= radius.sin() || radius >= PI / 2.0 || b.count <= 4 {
                out.extend(b.first..b.first + b.count);
                continue;
            }
            let dphi = (radius.sin() / s_min).asin() + half;
            let k = b.count as f64;
            let lo = ((phi_c - dphi) / (2.0 * PI) * k - 0.5).floor() as i64;
            let hi = ((phi_c + dphi) / (2.0 * PI) * k - 0.5).ceil() as i64;
            if hi - lo + 1 >= b.count as i64 {
                out.extend(b.first..b.first + b.count);
                continue;
            }
            out.extend((lo..=hi).map(|j| b.first + j.rem_euclid(b.count as i64) as usize));
        }
        out.sort_unstable();
        out.dedup();
    }
}
