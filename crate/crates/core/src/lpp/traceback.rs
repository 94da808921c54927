//! Geodesic recovery.
//!
//! Backtracking from the far corner steps to the predecessor with the larger
//! value and to the lowest-axis predecessor on ties, so the recovered path is
//! the leftmost maximizer.

use crate::lattice::LatticeWeights;
use crate::lpp::sweep::best_of;
use crate::par::join;

const FROM_X: u8 = 0;
const FROM_Y: u8 = 1;
const FROM_Z: u8 = 2;
const START: u8 = 3;

/// Full backpointer table over `lo..=hi`; returns the value and the forward
/// path as a flat coordinate buffer.
pub(crate) fn full_table_2d<W: LatticeWeights + ?Sized>(
    w: &W,
    lo: [u32; 2],
    hi: [u32; 2],
) -> (f64, Vec<u32>) {
    let width = (hi[0] - lo[0]) as usize + 1;
    let height = (hi[1] - lo[1]) as usize + 1;
    let mut bp = vec![START; width * height];
    let mut row = vec![0.0f64; width];
    for (yi, y) in (lo[1]..=hi[1]).enumerate() {
        let base = yi * width;
        for i in 0..width {
            let xv = w.weight2(lo[0] + i as u32, y);
            let (val, from) = match (i > 0, yi > 0) {
                (true, true) => {
                    let from = if row[i] > row[i - 1] { FROM_Y } else { FROM_X };
                    (xv + best_of(row[i - 1], row[i]), from)
                }
                (true, false) => (xv + row[i - 1], FROM_X),
                (false, true) => (xv + row[i], FROM_Y),
                (false, false) => (xv, START),
            };
            row[i] = val;
            bp[base + i] = from;
        }
    }
    let mut rev = Vec::with_capacity(2 * (width + height));
    let (mut i, mut j) = (width - 1, height - 1);
    loop {
        rev.push([lo[0] + i as u32, lo[1] + j as u32]);
        match bp[j * width + i] {
            FROM_X => i -= 1,
            FROM_Y => j -= 1,
            _ => break,
        }
    }
    let coords = rev.iter().rev().flatten().copied().collect();
    (row[width - 1], coords)
}

/// Full backpointer table over a three-dimensional box.
pub(crate) fn full_table_3d<W: LatticeWeights + ?Sized>(
    w: &W,
    lo: [u32; 3],
    hi: [u32; 3],
) -> (f64, Vec<u32>) {
    let wx = (hi[0] - lo[0]) as usize + 1;
    let wy = (hi[1] - lo[1]) as usize + 1;
    let wz = (hi[2] - lo[2]) as usize + 1;
    let mut bp = vec![START; wx * wy * wz];
    let mut plane = vec![0.0f64; wx * wy];
    for (zi, z) in (lo[2]..=hi[2]).enumerate() {
        for (yi, y) in (lo[1]..=hi[1]).enumerate() {
            for (xi, x) in (lo[0]..=hi[0]).enumerate() {
                let idx = yi * wx + xi;
                let mut best = f64::NEG_INFINITY;
                let mut from = START;
                if xi > 0 {
                    best = plane[idx - 1];
                    from = FROM_X;
                }
                if yi > 0 && plane[idx - wx] > best {
                    best = plane[idx - wx];
                    from = FROM_Y;
                }
                if zi > 0 && plane[idx] > best {
                    best = plane[idx];
                    from = FROM_Z;
                }
                let xv = w.weight3(x, y, z);
                plane[idx] = if from == START { xv } else { xv + best };
                bp[zi * wx * wy + idx] = from;
            }
        }
    }
    let mut rev = Vec::new();
    let (mut i, mut j, mut k) = (wx - 1, wy - 1, wz - 1);
    loop {
        rev.push([lo[0] + i as u32, lo[1] + j as u32, lo[2] + k as u32]);
        match bp[k * wx * wy + j * wx + i] {
            FROM_X => i -= 1,
            FROM_Y => j -= 1,
            FROM_Z => k -= 1,
            _ => break,
        }
    }
    let coords = rev.iter().rev().flatten().copied().collect();
    (plane[wx * wy - 1], coords)
}

/// Linear-memory recovery by splitting at the middle anti-diagonal.
///
/// A forward sweep over `a..=b` tags every cell beyond the anti-diagonal
/// `x + y = D` with the column at which its backtracked path crosses `D`.
/// The tag at `b` gives the crossing vertex `c`; the two halves `a..=c` and
/// `c..=b` are solved recursively. Rectangles of at most `leaf_cells` cells
/// use the full table.
pub(crate) fn divide_and_conquer_2d<W: LatticeWeights + ?Sized>(
    w: &W,
    a: [u32; 2],
    b: [u32; 2],
    leaf_cells: usize,
) -> (f64, Vec<u32>) {
    if is_leaf(a, b, leaf_cells) {
        return full_table_2d(w, a, b);
    }
    let (value, crossing) = labelled_sweep(w, a, b);
    let coords = match crossing {
        Some(c) => split(w, a, c, b, leaf_cells),
        None => full_table_2d(w, a, b).1,
    };
    (value, coords)
}

fn is_leaf(a: [u32; 2], b: [u32; 2], leaf_cells: usize) -> bool {
    let width = (b[0] - a[0]) as usize + 1;
    let height = (b[1] - a[1]) as usize + 1;
    width * height <= leaf_cells || width == 1 || height == 1
}

fn trace<W: LatticeWeights + ?Sized>(w: &W, a: [u32; 2], b: [u32; 2], leaf_cells: usize) -> Vec<u32> {
    if is_leaf(a, b, leaf_cells) {
        return full_table_2d(w, a, b).1;
    }
    match labelled_sweep(w, a, b).1 {
        Some(c) => split(w, a, c, b, leaf_cells),
        None => full_table_2d(w, a, b).1,
    }
}

fn split<W: LatticeWeights + ?Sized>(
    w: &W,
    a: [u32; 2],
    c: [u32; 2],
    b: [u32; 2],
    leaf_cells: usize,
) -> Vec<u32> {
    let (mut head, tail) = join(
        || trace(w, a, c, leaf_cells),
        || trace(w, c, b, leaf_cells),
    );
    // `c` ends the head and starts the tail
    head.extend_from_slice(&tail[2..]);
    head
}

/// Row sweep over `a..=b` returning the value at `b` and the vertex where
/// the backtracked path from `b` meets the middle anti-diagonal, or `None`
/// when the rectangle is too thin to split.
fn labelled_sweep<W: LatticeWeights + ?Sized>(w: &W, a: [u32; 2], b: [u32; 2]) -> (f64, Option<[u32; 2]>) {
    let width = (b[0] - a[0]) as usize + 1;
    let sa = a[0] as u64 + a[1] as u64;
    let sb = b[0] as u64 + b[1] as u64;
    let mid = (sa + sb) / 2;
    let mut row = vec![0.0f64; width];
    let mut label = vec![0u32; width];
    for (yi, y) in (a[1]..=b[1]).enumerate() {
        for i in 0..width {
            let x = a[0] + i as u32;
            let xv = w.weight2(x, y);
            let (val, from_x) = match (i > 0, yi > 0) {
                (true, true) => (xv + best_of(row[i - 1], row[i]), !(row[i] > row[i - 1])),
                (true, false) => (xv + row[i - 1], true),
                (false, true) => (xv + row[i], false),
                (false, false) => (xv, true),
            };
            row[i] = val;
            let s = x as u64 + y as u64;
            if s == mid {
                label[i] = x;
            } else if s > mid && from_x {
                label[i] = label[i - 1];
            }
            // otherwise the label carried in `label[i]` from the row below
            // is the one inherited from the y-predecessor
        }
    }
    let value = row[width - 1];
    if sb - sa < 2 {
        return (value, None);
    }
    let cx = label[width - 1];
    let cy = (mid - cx as u64) as u32;
    (value, Some([cx, cy]))
}
