//! Interval-pruned traversal of the uniform grid and per-leaf contouring.
//!
//! Nodes sit at `(i + ½)·h` on every axis. The cell index box covering
//! `[-R, R]ⁿ` is split recursively; a box is discarded when it misses the
//! ball or when the interval enclosure of `f` over it excludes `t`. Pruning
//! only removes cells whose corner values all lie strictly on one side of
//! `t`, so the contour equals the one of the full grid.

use std::collections::HashMap;

use super::contour::{cube_loops, edge_corners, square_segments};
use crate::expr::ScalarField;
use crate::Vec3;

/// Grid edge: lower node index and axis.
pub(crate) type EdgeKey = (i32, i32, i32, u8);

#[derive(Debug, Clone, Copy)]
pub(crate) struct CellBox {
    pub lo: [i32; 3],
    pub hi: [i32; 3],
}

#[derive(Debug, Default)]
pub(crate) struct Patch {
    pub keys: Vec<EdgeKey>,
    /// Grid edge endpoints and the values of `f − t` there.
    pub edges: Vec<([Vec3; 2], [f64; 2])>,
    pub simplices: Vec<[u32; 3]>,
    pub undefined_cells: usize,
}

pub(crate) struct Grid<'a> {
    pub field: &'a ScalarField,
    pub level: f64,
    pub radius: f64,
    pub h: f64,
    pub dim: usize,
}

impl<'a> Grid<'a> {
    #[inline]
    pub fn coord(&self, i: i32) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn node(&self, i: i32, j: i32, k: i32) -> Vec3 {
        let z = if self.dim == 3 { self.coord(k) } else { 0.0 };
        Vec3::new(self.coord(i), self.coord(j), z)
    }

    fn leaf_extent(&self) -> i32 {
        if self.dim == 2 {
            8
        } else {
            4
        }
    }

    pub fn root(&self) -> CellBox {
        let lo = (-self.radius / self.h - 0.5).floor() as i32;
        let hi = (self.radius / self.h - 0.5).ceil() as i32;
        let mut b = CellBox { lo: [lo; 3], hi: [hi; 3] };
        if self.dim == 2 {
            b.lo[2] = 0;
            b.hi[2] = 1;
        }
        b
    }

    fn corners(&self, b: &CellBox) -> (Vec3, Vec3) {
        let lo = self.node(b.lo[0], b.lo[1], b.lo[2]);
        let hi = self.node(b.hi[0], b.hi[1], b.hi[2]);
        (lo, hi)
    }

    fn misses_ball(&self, lo: &Vec3, hi: &Vec3) -> bool {
        let mut d2 = 0.0;
        for a in 0..3 {
            let c = 0.0f64.clamp(lo[a], hi[a]);
            d2 += c * c;
        }
        d2 > self.radius * self.radius
    }

    fn may_cross(&self, b: &CellBox) -> bool {
        let (lo, hi) = self.corners(b);
        if self.misses_ball(&lo, &hi) {
            return false;
        }
        match self.field.range(&lo, &hi) {
            Ok(r) => r.contains(self.level),
            Err(_) => false,
        }
    }

    /// Leaves that may contain part of the level, in a fixed order.
    pub fn leaves(&self) -> Vec<CellBox> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        let leaf = self.leaf_extent();
        while let Some(b) = stack.pop() {
            if !self.may_cross(&b) {
                continue;
            }
            let axes = if self.dim == 2 { 2 } else { 3 };
            let (axis, ext) = (0..axes)
                .map(|a| (a, b.hi[a] - b.lo[a]))
                .max_by_key(|&(a, e)| (e, std::cmp::Reverse(a)))
                .expect("non-empty");
            if ext <= leaf {
                out.push(b);
                continue;
            }
            let mid = b.lo[axis] + ext / 2;
            let mut lower = b;
            let mut upper = b;
            lower.hi[axis] = mid;
            upper.lo[axis] = mid;
            // Pushed in reverse so the lower half is expanded first.
            stack.push(upper);
            stack.push(lower);
        }
        out
    }

    /// Contour one leaf box.
    pub fn contour(&self, b: &CellBox) -> Patch {
        let n = [
            (b.hi[0] - b.lo[0] + 1) as usize,
            (b.hi[1] - b.lo[1] + 1) as usize,
            if self.dim == 3 { (b.hi[2] - b.lo[2] + 1) as usize } else { 1 },
        ];
        let mut nodes = Vec::with_capacity(n[0] * n[1] * n[2]);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    nodes.push(self.node(b.lo[0] + i as i32, b.lo[1] + j as i32, b.lo[2] + k as i32));
                }
            }
        }
        let mut values = Vec::with_capacity(nodes.len());
        self.field.values_into(&nodes, &mut values);
        for v in &mut values {
            *v -= self.level;
        }
        let at = |i: usize, j: usize, k: usize| i + n[0] * (j + n[1] * k);

        let mut patch = Patch::default();
        let mut local: HashMap<EdgeKey, u32> = HashMap::new();
        let mut vertex = |patch: &mut Patch, base: [usize; 3], e: u8| -> u32 {
            let (ca, cb) = edge_corners(e);
            let axis = e % 3;
            let off = |c: u8| [(c & 1) as usize, ((c >> 1) & 1) as usize, ((c >> 2) & 1) as usize];
            let (oa, ob) = (off(ca), off(cb));
            let ia = at(base[0] + oa[0], base[1] + oa[1], base[2] + oa[2]);
            let ib = at(base[0] + ob[0], base[1] + ob[1], base[2] + ob[2]);
            let key = (
                b.lo[0] + (base[0] + oa[0]) as i32,
                b.lo[1] + (base[1] + oa[1]) as i32,
                b.lo[2] + (base[2] + oa[2]) as i32,
                axis,
            );
            *local.entry(key).or_insert_with(|| {
                patch.keys.push(key);
                patch.edges.push(([nodes[ia], nodes[ib]], [values[ia], values[ib]]));
                (patch.edges.len() - 1) as u32
            })
        };

        if self.dim == 2 {
            let mut segs = Vec::new();
            for j in 0..n[1] - 1 {
                for i in 0..n[0] - 1 {
                    let v = [values[at(i, j, 0)], values[at(i + 1, j, 0)], values[at(i, j + 1, 0)], values[at(i + 1, j + 1, 0)]];
                    if v.iter().any(|x| x.is_nan()) {
                        patch.undefined_cells += 1;
                        continue;
                    }
                    square_segments(&v, &mut segs);
                    for &(ea, eb) in &segs {
                        let a = vertex(&mut patch, [i, j, 0], ea);
                        let bv = vertex(&mut patch, [i, j, 0], eb);
                        patch.simplices.push([a, bv, bv]);
                    }
                }
            }
        } else {
            let mut loops = Vec::new();
            let mut ids = Vec::with_capacity(12);
            for k in 0..n[2] - 1 {
                for j in 0..n[1] - 1 {
                    for i in 0..n[0] - 1 {
                        let v: [f64; 8] = std::array::from_fn(|c| {
                            values[at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))]
                        });
                        if v.iter().any(|x| x.is_nan()) {
                            patch.undefined_cells += 1;
                            continue;
                        }
                        let pos = v.iter().filter(|x| **x >= 0.0).count();
                        if pos == 0 || pos == 8 {
                            continue;
                        }
                        cube_loops(&v, &mut loops);
                        for lp in &loops {
                            ids.clear();
                            ids.extend(lp.iter().map(|&e| vertex(&mut patch, [i, j, k], e)));
                            for w in 1..ids.len() - 1 {
                                patch.simplices.push([ids[0], ids[w], ids[w + 1]]);
                            }
                        }
                    }
                }
            }
        }
        patch
    }
}
