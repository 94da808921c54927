use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentKind, WeightField};
use crate::error::{Error, Result};
use crate::lpp::{compensated_sum, DirectedPath};
use crate::par::map_collect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkeletonSide {
    Up,
    Down,
}

impl SkeletonSide {
    pub fn name(self) -> &'static str {
        match self {
            SkeletonSide::Up => "up",
            SkeletonSide::Down => "down",
        }
    }
}

/// The skeleton kept in one slope-1 square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonChoice {
    pub level: u32,
    /// Lower-left vertex of the square.
    pub corner: [u32; 2],
    /// Vertices per side.
    pub side: u32,
    pub choice: SkeletonSide,
    /// The larger of the two off-diagonal box sums.
    pub gain: f64,
    pub alternative_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrwConstruction {
    pub path: DirectedPath,
    /// Every skeleton point, in path order, including both corners.
    pub points: Vec<[u32; 2]>,
    /// Choices level by level; within a level, in path order.
    pub choices: Vec<SkeletonChoice>,
    /// Number of slope-1 squares handled at each level.
    pub squares_per_level: Vec<u64>,
    pub weight: f64,
    /// Contribution of the box variables at scales `s, 2s, …, Ms`.
    pub l1: f64,
    /// The rest of the path weight.
    pub l2: f64,
}

/// Builds the skeleton tree with `M = ⌊log2 n / s⌋` levels.
///
/// In a square with lower-left corner `c`, side `S` and child side
/// `t = S / 2^s`, the up-skeleton passes through the lower-left and
/// upper-right vertices of the boxes `(j, j+1)`, `j = 0..2^s−1`, just above
/// the diagonal; the down-skeleton is its mirror image. The box variables at
/// scale `(ℓ+1)s` on either side, each weighted by the `2t − 1` vertices a
/// path spends in a box, are compared and the larger side is kept. The
/// recursion continues inside the kept boxes.
pub fn build_brw_path(field: &WeightField, s: u32) -> Result<BrwConstruction> {
    let spec = field.spec();
    if spec.kind != EnvironmentKind::Brw || spec.d != 1 {
        return Err(Error::Unsupported(format!(
            "the skeleton construction runs on planar brw fields, got {} with d = {}",
            spec.kind, spec.d
        )));
    }
    let log_n = field.brw_levels();
    if s == 0 || s > log_n {
        return Err(Error::Degenerate {
            level: 0,
            reason: format!("s = {s} must lie in 1..={log_n} for n = {}", spec.n),
        });
    }
    let levels = log_n / s;
    let n = spec.n as u32;
    let mut squares: Vec<[u32; 2]> = vec![[0, 0]];
    let mut side = n;
    let mut choices = Vec::new();
    let mut squares_per_level = Vec::with_capacity(levels as usize);
    let mut points: Vec<[u32; 2]> = vec![[0, 0], [n - 1, n - 1]];
    for level in 0..levels {
        squares_per_level.push(squares.len() as u64);
        let child = side >> s;
        let decided = map_collect(&squares, |&c| choose(field, level, c, side, child, s));
        let mut next = Vec::with_capacity(squares.len() * ((1usize << s) - 1));
        for (choice, boxes) in decided {
            for &bl in &boxes {
                points.push(bl);
                points.push([bl[0] + child - 1, bl[1] + child - 1]);
            }
            next.extend(boxes);
            choices.push(choice);
        }
        squares = next;
        side = child;
    }
    points.sort_unstable();
    points.dedup();
    let path = DirectedPath::leftmost_through(&points)?;
    let weight = path.weight_compensated(field);
    let l1 = compensated_sum(path.iter().flat_map(|v| {
        (1..=levels).map(move |l| {
            let k = l * s;
            let shift = log_n - k;
            field.brw_box_variable(k, &[v[0] >> shift, v[1] >> shift])
        })
    }));
    Ok(BrwConstruction {
        path,
        points,
        choices,
        squares_per_level,
        weight,
        l1,
        l2: weight - l1,
    })
}

/// Decides one square and returns the lower-left corners of the kept boxes.
fn choose(
    field: &WeightField,
    level: u32,
    corner: [u32; 2],
    side: u32,
    child: u32,
    s: u32,
) -> (SkeletonChoice, Vec<[u32; 2]>) {
    let k = (level + 1) * s;
    let count = (1u32 << s) - 1;
    let (bx, by) = (corner[0] / child, corner[1] / child);
    let steps = (2 * child - 1) as f64;
    let sum_side = |up: bool| {
        let xs = (0..count).map(|j| {
            let idx = if up { [bx + j, by + j + 1] } else { [bx + j + 1, by + j] };
            field.brw_box_variable(k, &idx)
        });
        steps * xs.sum::<f64>()
    };
    let (z_up, z_down) = (sum_side(true), sum_side(false));
    let up = z_up >= z_down;
    let boxes = (0..count)
        .map(|j| {
            let (dx, dy) = if up { (j, j + 1) } else { (j + 1, j) };
            [corner[0] + dx * child, corner[1] + dy * child]
        })
        .collect();
    let (gain, alternative_gain) = if up { (z_up, z_down) } else { (z_down, z_up) };
    let choice = SkeletonChoice {
        level,
        corner,
        side,
        choice: if up { SkeletonSide::Up } else { SkeletonSide::Down },
        gain,
        alternative_gain,
    };
    (choice, boxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentSpec;
    use crate::lattice::LatticeWeights;
    use crate::lpp::last_passage;

    fn brw(n: u64, seed: u64) -> WeightField {
        WeightField::new(EnvironmentSpec::new(EnvironmentKind::Brw, n, seed)).unwrap()
    }

    #[test]
    fn square_counts_follow_the_recursion() {
        for (n, s) in [(64u64, 1u32), (64, 2), (256, 3), (4096, 2)] {
            let f = brw(n, 11);
            let c = build_brw_path(&f, s).unwrap();
            let levels = f.brw_levels() / s;
            let expect: Vec<u64> = (0..levels).map(|l| ((1u64 << s) - 1).pow(l)).collect();
            assert_eq!(c.squares_per_level, expect);
            assert_eq!(c.choices.len() as u64, expect.iter().sum::<u64>());
        }
    }

    #[test]
    fn path_and_decomposition() {
        for seed in 0..6 {
            let f = brw(128, seed);
            let c = build_brw_path(&f, 2).unwrap();
            c.path.check_spans(f.side()).unwrap();
            assert!(c.path.passes_through(&c.points));
            assert!((c.l1 + c.l2 - c.weight).abs() <= 1e-9 * c.weight.abs().max(1.0));
            assert!(c.weight <= last_passage(&f).unwrap() + 1e-9);
            for ch in &c.choices {
                assert!(ch.gain >= ch.alternative_gain);
            }
        }
    }

    #[test]
    fn rejects_bad_separation() {
        let f = brw(16, 1);
        assert!(matches!(build_brw_path(&f, 5), Err(Error::Degenerate { .. })));
        assert!(matches!(build_brw_path(&f, 0), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn unit_child_boxes() {
        // s = log2 n: one level, children are single vertices
        let f = brw(8, 3);
        let c = build_brw_path(&f, 3).unwrap();
        assert_eq!(c.choices.len(), 1);
        assert_eq!(c.points.len(), 2 + 7);
    }
}
