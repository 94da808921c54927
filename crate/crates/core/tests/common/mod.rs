//! Independent oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use lpplab::geometry::{Cylinder, Point, Rect};
use lpplab::LatticeWeights;
use rand::Rng;

/// Exhaustive search over all up-right paths from the origin to the far
/// corner. Path values are left folds from the origin, matching the order
/// in which a dynamic program accumulates them. Among equal maxima the path
/// whose reversed step sequence is lexicographically smallest (lower axis
/// first) wins.
pub fn brute_force<W: LatticeWeights + ?Sized>(w: &W) -> (f64, Vec<Vec<u32>>) {
    let dim = w.dim();
    let m = w.side() - 1;
    let mut best: Option<(f64, Vec<u8>)> = None;
    let mut steps = Vec::with_capacity(dim * m as usize);
    let mut v = vec![0u32; dim];
    let start = w.weight(&v);
    enumerate(w, m, &mut v, start, &mut steps, &mut best);
    let (value, steps) = best.expect("at least one path");
    let mut v = vec![0u32; dim];
    let mut path = vec![v.clone()];
    for &a in &steps {
        v[a as usize] += 1;
        path.push(v.clone());
    }
    (value, path)
}

fn enumerate<W: LatticeWeights + ?Sized>(
    w: &W,
    m: u32,
    v: &mut Vec<u32>,
    acc: f64,
    steps: &mut Vec<u8>,
    best: &mut Option<(f64, Vec<u8>)>,
) {
    if v.iter().all(|&c| c == m) {
        let better = match best {
            None => true,
            Some((b, s)) => acc > *b || (acc == *b && steps.iter().rev().lt(s.iter().rev())),
        };
        if better {
            *best = Some((acc, steps.clone()));
        }
        return;
    }
    for axis in 0..v.len() {
        if v[axis] < m {
            v[axis] += 1;
            steps.push(axis as u8);
            let next = acc + w.weight(v);
            enumerate(w, m, v, next, steps, best);
            steps.pop();
            v[axis] -= 1;
        }
    }
}

/// Quadratic longest weighted chain under strict coordinatewise order.
pub fn chain_quadratic(points: &[(f64, f64, f64)]) -> f64 {
    let mut best = vec![0.0f64; points.len()];
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].0.total_cmp(&points[j].0));
    let mut overall = 0.0f64;
    for (a, &i) in order.iter().enumerate() {
        let (xi, yi, wi) = points[i];
        let mut pred = 0.0f64;
        for &j in &order[..a] {
            let (xj, yj, _) = points[j];
            if xj < xi && yj < yi {
                pred = pred.max(best[j]);
            }
        }
        best[i] = wi + pred;
        overall = overall.max(best[i]);
    }
    overall
}

/// Uniform point of a cylinder by rejection from its rectangle.
pub fn point_in_cylinder<R: Rng>(rng: &mut R, c: &Cylinder) -> Point {
    let (lo, hi) = (c.rect().lower(), c.rect().upper());
    loop {
        let p = [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
        if c.contains(p) {
            return p;
        }
    }
}

/// Three consecutive rectangles of one slope with the middle one weakly
/// largest, as a corner chain `a ≺ b ≺ c ≺ d`.
pub fn slope_chain<R: Rng>(rng: &mut R) -> [Point; 4] {
    let slope = 2f64.powf(rng.gen_range(-3.0..3.0));
    let mid = rng.gen_range(1.0..100.0);
    let first = mid * rng.gen_range(0.05..=1.0);
    let last = mid * rng.gen_range(0.05..=1.0);
    let a = [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
    let b = [a[0] + first, a[1] + slope * first];
    let c = [b[0] + mid, b[1] + slope * mid];
    let d = [c[0] + last, c[1] + slope * last];
    [a, b, c, d]
}

/// Positive blocks whose ratios stay within a factor `1 + δ` of the pooled
/// ratio.
pub fn cancellation_blocks<R: Rng>(rng: &mut R, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let k = rng.gen_range(1..=24);
    let base = 2f64.powf(rng.gen_range(-4.0..4.0));
    // pooled ratio moves by at most the inner factor, so each block stays
    // within its square
    let inner = (1.0 + delta).sqrt();
    let xs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..10.0)).collect();
    let ys = xs
        .iter()
        .map(|&x| {
            let q = inner.powf(rng.gen_range(-1.0..=1.0));
            x * base * q
        })
        .collect();
    (xs, ys)
}

/// Rectangle with sides in `[10/r, 1000]` anchored at a random real corner.
pub fn count_instance<R: Rng>(rng: &mut R) -> Cylinder {
    let r = rng.gen_range(0.011..0.99);
    let lo = 10.0 / r;
    let a = [rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0)];
    let (w, h) = (rng.gen_range(lo..=1000.0), rng.gen_range(lo..=1000.0));
    let rect = Rect::new(a, [a[0] + w, a[1] + h]).expect("positive sides");
    Cylinder::new(rect, r).expect("r in (0, 1)")
}
