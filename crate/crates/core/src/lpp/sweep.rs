//! Value-only dynamic programming sweeps.
//!
//! Each cell is updated as `L(v) = X(v) + max(L(v − e_i))` over in-rectangle
//! predecessors. Row-major and anti-diagonal orders perform the same
//! floating-point operations on every cell, so they return identical bits.

use crate::lattice::LatticeWeights;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order in which the planar DP visits cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStrategy {
    /// One row at a time with a single buffer of width `hi.x − lo.x + 1`.
    RowMajor,
    /// Anti-diagonal wavefront; cells of a diagonal are independent and are
    /// split across threads when the `parallel` feature is enabled.
    Wavefront,
}

/// Smallest diagonal length worth splitting across threads.
#[cfg(feature = "parallel")]
const PAR_CHUNK: usize = 2048;

impl SweepStrategy {
    /// Row-major unless there are spare threads and the grid is wide.
    pub fn auto(width: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            if width >= 2 * PAR_CHUNK && rayon::current_num_threads() > 1 {
                return Self::Wavefront;
            }
        }
        let _ = width;
        Self::RowMajor
    }
}

/// The larger of two predecessor values; the first argument (lower axis)
/// wins ties. Every sweep and traceback goes through this comparison so that
/// they agree bit for bit.
#[inline(always)]
pub(crate) fn best_of(first: f64, second: f64) -> f64 {
    if second > first {
        second
    } else {
        first
    }
}

/// Last passage value from `lo` to `hi` (inclusive) in a planar field.
pub fn rect_value_2d<W: LatticeWeights + ?Sized>(
    w: &W,
    lo: [u32; 2],
    hi: [u32; 2],
    strategy: SweepStrategy,
) -> f64 {
    match strategy {
        SweepStrategy::RowMajor => row_major_2d(w, lo, hi),
        SweepStrategy::Wavefront => wavefront_2d(w, lo, hi),
    }
}

pub(crate) fn row_major_2d<W: LatticeWeights + ?Sized>(w: &W, lo: [u32; 2], hi: [u32; 2]) -> f64 {
    let width = (hi[0] - lo[0]) as usize + 1;
    let mut row = vec![0.0f64; width];
    let y0 = lo[1];
    row[0] = w.weight2(lo[0], y0);
    for i in 1..width {
        row[i] = w.weight2(lo[0] + i as u32, y0) + row[i - 1];
    }
    for y in lo[1] + 1..=hi[1] {
        row[0] += w.weight2(lo[0], y);
        for i in 1..width {
            let best = best_of(row[i - 1], row[i]);
            row[i] = w.weight2(lo[0] + i as u32, y) + best;
        }
    }
    row[width - 1]
}

fn wavefront_2d<W: LatticeWeights + ?Sized>(w: &W, lo: [u32; 2], hi: [u32; 2]) -> f64 {
    let width = (hi[0] - lo[0]) as usize + 1;
    let height = (hi[1] - lo[1]) as usize + 1;
    // buffers indexed by the relative x coordinate
    let mut prev = vec![f64::NEG_INFINITY; width];
    let mut cur = vec![f64::NEG_INFINITY; width];
    for t in 0..width + height - 1 {
        let x_min = t.saturating_sub(height - 1);
        let x_max = t.min(width - 1);
        let cell = |i: usize, prev: &[f64]| -> f64 {
            let x = lo[0] + i as u32;
            let y = lo[1] + (t - i) as u32;
            let left = if i > 0 && i > x_prev_min(t, height) {
                Some(prev[i - 1])
            } else {
                None
            };
            let down = if t > i && i <= x_prev_max(t, width) {
                Some(prev[i])
            } else {
                None
            };
            let xv = w.weight2(x, y);
            match (left, down) {
                (Some(a), Some(b)) => xv + best_of(a, b),
                (Some(a), None) | (None, Some(a)) => xv + a,
                (None, None) => xv,
            }
        };
        let span = &mut cur[x_min..=x_max];
        #[cfg(feature = "parallel")]
        {
            if span.len() >= PAR_CHUNK {
                let prev_ref = &prev;
                span.par_chunks_mut(PAR_CHUNK / 2)
                    .enumerate()
                    .for_each(|(c, chunk)| {
                        let base = x_min + c * (PAR_CHUNK / 2);
                        for (j, slot) in chunk.iter_mut().enumerate() {
                            *slot = cell(base + j, prev_ref);
                        }
                    });
            } else {
                for (j, slot) in span.iter_mut().enumerate() {
                    *slot = cell(x_min + j, &prev);
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        for (j, slot) in span.iter_mut().enumerate() {
            *slot = cell(x_min + j, &prev);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[width - 1]
}

#[inline]
fn x_prev_min(t: usize, height: usize) -> usize {
    // diagonal t − 1 starts at x = max(0, t − 1 − (height − 1))
    (t.saturating_sub(1)).saturating_sub(height - 1)
}

#[inline]
fn x_prev_max(t: usize, width: usize) -> usize {
    (t.saturating_sub(1)).min(width - 1)
}

/// Last passage value over the box `lo..=hi` of a three-dimensional field.
pub fn box_value_3d<W: LatticeWeights + ?Sized>(w: &W, lo: [u32; 3], hi: [u32; 3]) -> f64 {
    let wx = (hi[0] - lo[0]) as usize + 1;
    let wy = (hi[1] - lo[1]) as usize + 1;
    let mut plane = vec![f64::NEG_INFINITY; wx * wy];
    for (zi, z) in (lo[2]..=hi[2]).enumerate() {
        for (yi, y) in (lo[1]..=hi[1]).enumerate() {
            for (xi, x) in (lo[0]..=hi[0]).enumerate() {
                let idx = yi * wx + xi;
                let mut best = f64::NEG_INFINITY;
                if xi > 0 {
                    best = plane[idx - 1];
                }
                if yi > 0 && plane[idx - wx] > best {
                    best = plane[idx - wx];
                }
                if zi > 0 && plane[idx] > best {
                    best = plane[idx];
                }
                let xv = w.weight3(x, y, z);
                plane[idx] = if best == f64::NEG_INFINITY { xv } else { xv + best };
            }
        }
    }
    plane[wx * wy - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvironmentKind, EnvironmentSpec, WeightField};
    use crate::lattice::DenseField;

    #[test]
    fn strategies_are_bit_identical() {
        for (kind, n) in [(EnvironmentKind::IidPareto2, 37u64), (EnvironmentKind::Brw, 32)] {
            let f = WeightField::new(EnvironmentSpec::new(kind, n, 4)).unwrap();
            let s = f.side() - 1;
            for (lo, hi) in [([0, 0], [s, s]), ([3, 5], [s - 2, s]), ([1, 1], [1, 9]), ([2, 4], [20, 4])] {
                let a = rect_value_2d(&f, lo, hi, SweepStrategy::RowMajor);
                let b = rect_value_2d(&f, lo, hi, SweepStrategy::Wavefront);
                assert_eq!(a.to_bits(), b.to_bits(), "{kind:?} {lo:?} {hi:?}");
            }
        }
    }

    #[test]
    fn wide_wavefront_matches_row_sweep() {
        let f = WeightField::new(EnvironmentSpec::new(EnvironmentKind::IidPareto2, 4200, 8)).unwrap();
        let lo = [0, 0];
        let hi = [4200, 40];
        assert_eq!(
            rect_value_2d(&f, lo, hi, SweepStrategy::RowMajor).to_bits(),
            rect_value_2d(&f, lo, hi, SweepStrategy::Wavefront).to_bits()
        );
    }

    #[test]
    fn three_dimensional_unit_weights() {
        let f = DenseField::new(3, 3, vec![1.0; 27]).unwrap();
        assert_eq!(box_value_3d(&f, [0, 0, 0], [2, 2, 2]), 7.0);
        assert_eq!(box_value_3d(&f, [1, 1, 1], [1, 1, 1]), 1.0);
    }
}
