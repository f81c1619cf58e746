//! Sign-pattern contouring of a single grid cell.
//!
//! Corners are numbered `dx + 2·dy + 4·dz`. A square face is walked
//! counter-clockwise as seen from outside the cell; along the walk an edge is
//! an *exit* when it goes from a non-negative to a negative corner and an
//! *entry* otherwise. Every contour segment runs from an exit crossing to an
//! entry crossing, which orients polylines and triangle loops so that their
//! normal points toward increasing `f`.

/// Faces of the unit cube, counter-clockwise seen from outside.
pub(crate) const CUBE_FACES: [[u8; 4]; 6] = [
    [0, 4, 6, 2], // -x
    [1, 3, 7, 5], // +x
    [0, 1, 5, 4], // -y
    [2, 6, 7, 3], // +y
    [0, 2, 3, 1], // -z
    [4, 5, 7, 6], // +z
];

/// The unit square, counter-clockwise.
pub(crate) const SQUARE: [u8; 4] = [0, 1, 3, 2];

#[inline]
pub(crate) fn positive(v: f64) -> bool {
    v >= 0.0
}

/// Cell edge id `lower_corner·3 + axis` for the edge joining corners `a`, `b`.
#[inline]
pub(crate) fn edge_id(a: u8, b: u8) -> u8 {
    let lower = a & b;
    let axis = (a ^ b).trailing_zeros() as u8;
    lower * 3 + axis
}

/// Segments on one face, as pairs `(exit edge, entry edge)` of face-local
/// edge numbers; edge `k` joins face corners `k` and `k+1 mod 4`. Ambiguous
/// faces are split with the asymptotic decider.
pub(crate) fn face_segments(v: [f64; 4], out: &mut Vec<(usize, usize)>) {
    let p = v.map(positive);
    let mut exits = [0usize; 2];
    let mut entries = [0usize; 2];
    let (mut nx, mut nn) = (0, 0);
    for k in 0..4 {
        let (a, b) = (p[k], p[(k + 1) % 4]);
        if a && !b {
            exits[nx] = k;
            nx += 1;
        } else if !a && b {
            entries[nn] = k;
            nn += 1;
        }
    }
    match nx {
        0 => {}
        1 => out.push((exits[0], entries[0])),
        _ => {
            let denom = v[0] + v[2] - v[1] - v[3];
            let saddle = (v[0] * v[2] - v[1] * v[3]) / denom;
            let cut_negative = positive(saddle);
            for (k, &pk) in p.iter().enumerate() {
                if pk != cut_negative {
                    let before = (k + 3) % 4;
                    if cut_negative {
                        out.push((before, k));
                    } else {
                        out.push((k, before));
                    }
                }
            }
        }
    }
}

/// Closed loops of cell edge ids for a cube with corner values `v`.
pub(crate) fn cube_loops(v: &[f64; 8], loops: &mut Vec<Vec<u8>>) {
    loops.clear();
    let mut next = [u8::MAX; 24];
    let mut segs = Vec::with_capacity(4);
    for face in &CUBE_FACES {
        let fv = face.map(|c| v[c as usize]);
        segs.clear();
        face_segments(fv, &mut segs);
        for &(a, b) in &segs {
            let ea = edge_id(face[a], face[(a + 1) % 4]);
            let eb = edge_id(face[b], face[(b + 1) % 4]);
            next[ea as usize] = eb;
        }
    }
    for start in 0..24u8 {
        if next[start as usize] == u8::MAX {
            continue;
        }
        let mut lp = Vec::with_capacity(6);
        let mut e = start;
        while next[e as usize] != u8::MAX {
            lp.push(e);
            let n = next[e as usize];
            next[e as usize] = u8::MAX;
            e = n;
        }
        loops.push(lp);
    }
}

/// Segments of a square cell as pairs of cell edge ids.
pub(crate) fn square_segments(v: &[f64; 4], out: &mut Vec<(u8, u8)>) {
    out.clear();
    let fv = SQUARE.map(|c| v[c as usize]);
    let mut segs = Vec::with_capacity(2);
    face_segments(fv, &mut segs);
    for (a, b) in segs {
        out.push((
            edge_id(SQUARE[a], SQUARE[(a + 1) % 4]),
            edge_id(SQUARE[b], SQUARE[(b + 1) % 4]),
        ));
    }
}

/// Corners joined by a cell edge id.
#[inline]
pub(crate) fn edge_corners(e: u8) -> (u8, u8) {
    let lower = e / 3;
    let axis = e % 3;
    (lower, lower | (1 << axis))
}
