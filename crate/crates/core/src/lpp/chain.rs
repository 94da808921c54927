//! Heaviest strictly increasing chains of weighted points in the plane.

use std::cmp::Ordering;

use crate::env::PoissonLayers;
use crate::error::{domain, Error, Result};

/// Largest point set accepted by the chain solver.
pub const MAX_CHAIN_POINTS: usize = 10_000_000;

/// Prefix maximum over `0..len` with point updates.
struct FenwickMax {
    tree: Vec<f64>,
}

impl FenwickMax {
    fn new(len: usize) -> Self {
        Self {
            tree: vec![f64::NEG_INFINITY; len + 1],
        }
    }

    fn update(&mut self, pos: usize, value: f64) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            if value > self.tree[i] {
                self.tree[i] = value;
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Maximum over positions `0..end`.
    fn prefix(&self, end: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut i = end;
        while i > 0 {
            if self.tree[i] > best {
                best = self.tree[i];
            }
            i -= i & i.wrapping_neg();
        }
        best
    }
}

/// Maximum total weight of a chain `p_1 < p_2 < …` that increases strictly in
/// both coordinates. The empty chain has weight 0. Points are `(x, y, w)`.
pub fn max_weight_chain(points: &[(f64, f64, f64)]) -> Result<f64> {
    if points.len() > MAX_CHAIN_POINTS {
        return Err(Error::Size(format!(
            "{} points exceed the chain solver limit of {MAX_CHAIN_POINTS}",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite() && p.2.is_finite())) {
        return Err(domain("chain points must have finite coordinates and weights"));
    }
    let mut ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let rank = |y: f64| ys.partition_point(|&v| v < y);

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].0.total_cmp(&points[j].0));

    let mut fen = FenwickMax::new(ys.len());
    let mut best = 0.0f64;
    let mut group: Vec<(usize, f64)> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let x = points[order[start]].0;
        let mut end = start;
        while end < order.len() && points[order[end]].0.total_cmp(&x) == Ordering::Equal {
            end += 1;
        }
        // points sharing an x cannot precede one another: query all, then insert
        group.clear();
        for &i in &order[start..end] {
            let (_, y, w) = points[i];
            let r = rank(y);
            let value = w + fen.prefix(r).max(0.0);
            group.push((r, value));
        }
        for &(r, value) in &group {
            fen.update(r, value);
            best = best.max(value);
        }
        start = end;
    }
    Ok(best)
}

/// Last passage value of the layered Poisson model: the heaviest increasing
/// chain through the union of all layers, each point carrying its layer
/// weight.
pub fn poisson_last_passage(layers: &PoissonLayers) -> Result<f64> {
    let total = layers.total_points();
    if total > MAX_CHAIN_POINTS {
        return Err(Error::Size(format!(
            "{total} points exceed the chain solver limit of {MAX_CHAIN_POINTS}"
        )));
    }
    let points: Vec<(f64, f64, f64)> = layers
        .layers
        .iter()
        .flat_map(|l| l.points.iter().map(move |&(x, y)| (x, y, l.weight)))
        .collect();
    max_weight_chain(&points)
}
