use serde::{Deserialize, Serialize};

use crate::construct::MultiScaleParams;
use crate::env::{EnvironmentKind, ScaleBuckets, WeightField};
use crate::error::{domain, Error, Result};
use crate::geometry::{Cylinder, Rect, GEOM_TOL};
use crate::lattice::LatticeWeights;
use crate::lpp::DirectedPath;
use crate::par::map_collect;

/// One rectangle `Rect(v_i, v_{i+1})` of a level together with its scan
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRect {
    pub level: u32,
    pub index: usize,
    pub lower: [u32; 2],
    pub upper: [u32; 2],
    /// Number of similar sub-rectangles covering the diagonal.
    pub m: u64,
    /// Cylinders scanned (odd sub-rectangles `3, 5, …, 2⌊m/2⌋ − 1`).
    pub scanned: u64,
    /// Scanned cylinders containing a vertex of the target scale.
    pub hits: u64,
}

/// Nested vertex sets `V^(0) ⊂ … ⊂ V^(M)` and the rectangles each level
/// demarcates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSets {
    pub n: u64,
    pub s: u32,
    /// `levels[ℓ]` is `V^(ℓ)` in increasing order.
    pub levels: Vec<Vec<[u32; 2]>>,
    /// `rects[ℓ]` lists the rectangles of `V^(ℓ)` for `ℓ < M`, the ones
    /// scanned to build level `ℓ + 1`.
    pub rects: Vec<Vec<LevelRect>>,
}

impl LevelSets {
    /// `V^(M)`.
    pub fn finest(&self) -> &[[u32; 2]] {
        self.levels.last().expect("at least one level")
    }

    /// Vertices added at `level`, i.e. `V^(ℓ) \ V^(ℓ−1)`.
    pub fn increment(&self, level: usize) -> Vec<[u32; 2]> {
        if level == 0 {
            return self.levels[0].clone();
        }
        let prev = &self.levels[level - 1];
        self.levels[level]
            .iter()
            .filter(|v| prev.binary_search(v).is_err())
            .copied()
            .collect()
    }

    /// Scale index targeted at `level`.
    pub fn scale_at(&self, level: usize) -> i32 {
        (level as u32 * self.s) as i32
    }

    /// Fraction of scanned cylinders that contained a vertex of the target
    /// scale when building `level + 1`; `None` when nothing was scanned.
    pub fn hit_fraction(&self, level: usize) -> Option<f64> {
        let (scanned, hits) = self.rects[level]
            .iter()
            .fold((0, 0), |(s, h), r| (s + r.scanned, h + r.hits));
        (scanned > 0).then(|| hits as f64 / scanned as f64)
    }
}

/// Runs the multi-scale construction on an i.i.d. critical Pareto field in
/// the plane and returns the leftmost path through `V^(M)`.
pub fn build_heavy_path(field: &WeightField, params: &MultiScaleParams) -> Result<(DirectedPath, LevelSets)> {
    let spec = field.spec();
    if spec.kind != EnvironmentKind::IidPareto2 || spec.d != 1 {
        return Err(Error::Unsupported(format!(
            "the heavy-tail construction runs on planar iid-pareto2 fields, got {} with d = {}",
            spec.kind, spec.d
        )));
    }
    if params.n != spec.n {
        return Err(domain(format!(
            "parameters were derived for n = {} but the field has n = {}",
            params.n, spec.n
        )));
    }
    if params.levels == 0 {
        return Err(Error::Degenerate {
            level: 0,
            reason: format!(
                "M = 0 (s = {}): no level to build; supply desk-scale s and M",
                params.s
            ),
        });
    }
    let n = spec.n as u32;
    let buckets = ScaleBuckets::new(spec.n);
    let mut sets = LevelSets {
        n: spec.n,
        s: params.s,
        levels: vec![vec![[0, 0], [n, n]]],
        rects: Vec::new(),
    };
    for level in 0..params.levels {
        let current = sets.finest().to_vec();
        let pairs: Vec<(usize, [u32; 2], [u32; 2])> = current
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[0], w[1]))
            .collect();
        let scanned = map_collect(&pairs, |&(i, a, b)| scan_rect(field, &buckets, params, level, i, a, b));
        let mut rects = Vec::with_capacity(scanned.len());
        let mut next = Vec::with_capacity(current.len());
        for (rect, picked) in scanned {
            let rect = rect?;
            next.push(rect.lower);
            next.extend(picked);
            rects.push(rect);
        }
        next.push(*current.last().expect("two corners"));
        if rects.iter().all(|r| r.m == 0) {
            return Err(Error::Degenerate {
                level: level as usize,
                reason: "no rectangle admits a sub-rectangle of the target area (m = 0)".into(),
            });
        }
        sets.rects.push(rects);
        sets.levels.push(next);
    }
    let path = DirectedPath::leftmost_through(sets.finest())?;
    Ok((path, sets))
}

/// Scans the cylinders of one rectangle and returns the lexicographically
/// smallest vertex of the target scale from each occupied one.
fn scan_rect(
    field: &WeightField,
    buckets: &ScaleBuckets,
    params: &MultiScaleParams,
    level: u32,
    index: usize,
    a: [u32; 2],
    b: [u32; 2],
) -> (Result<LevelRect>, Vec<[u32; 2]>) {
    let rect = match Rect::from_lattice(a, b) {
        Ok(r) => r,
        Err(e) => return (Err(Error::Internal(format!("level vertices out of order: {e}"))), vec![]),
    };
    let target = ((level + 1) * params.s) as i32;
    let m = (2f64.powi(target) / (params.lambda * params.n as f64) * rect.area().sqrt()).floor() as u64;
    let mut out = LevelRect {
        level,
        index,
        lower: a,
        upper: b,
        m,
        scanned: 0,
        hits: 0,
    };
    let mut picked = Vec::new();
    let last_j = (m / 2).saturating_sub(1);
    for j in 1..=last_j {
        // sub-rectangle 2j + 1 in one-based numbering
        let piece = rect.diagonal_piece(2 * j, m);
        let cyl = match Cylinder::new(piece, params.r()) {
            Ok(c) => c,
            Err(e) => return (Err(e), vec![]),
        };
        out.scanned += 1;
        if let Some(v) = first_in_scale(field, buckets, &cyl, target) {
            out.hits += 1;
            picked.push(v);
        }
    }
    (Ok(out), picked)
}

fn first_in_scale(field: &WeightField, buckets: &ScaleBuckets, cyl: &Cylinder, k: i32) -> Option<[u32; 2]> {
    let (x0, x1) = cyl.column_span();
    let max = field.side() as i64 - 1;
    for x in x0.max(0)..=x1.min(max) {
        if let Some((lo, hi)) = cyl.column_range(x) {
            for y in lo.max(0)..=hi.min(max) {
                if buckets.in_scale(field.weight2(x as u32, y as u32), k) {
                    return Some([x as u32, y as u32]);
                }
            }
        }
    }
    None
}

/// Area and slope checks for one rectangle of a level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectCheck {
    pub level: u32,
    pub index: usize,
    pub area: f64,
    pub slope: f64,
    /// `|R| ≥ λ² n² / 2^{2ℓs}`; not asserted at level 0.
    pub area_ok: Option<bool>,
    /// `(1+2r)^{−ℓ} ≤ Slope ≤ (1+2r)^ℓ`.
    pub slope_ok: bool,
    /// Slope within a factor `1+2r` of the enclosing rectangle one level up;
    /// not asserted at level 0.
    pub parent_slope_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub checks: Vec<RectCheck>,
}

impl AprioriReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| {
            c.slope_ok && c.area_ok.unwrap_or(true) && c.parent_slope_ok.unwrap_or(true)
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &RectCheck> {
        self.checks
            .iter()
            .filter(|c| !(c.slope_ok && c.area_ok.unwrap_or(true) && c.parent_slope_ok.unwrap_or(true)))
    }
}

/// Checks the area and slope bounds on every rectangle of every level.
pub fn verify_apriori(levels: &LevelSets, params: &MultiScaleParams) -> AprioriReport {
    let q = 1.0 + 2.0 * params.r();
    let n = levels.n as f64;
    let lambda2 = params.lambda * params.lambda;
    let mut checks = Vec::new();
    for (ell, verts) in levels.levels.iter().enumerate() {
        let parents = ell.checked_sub(1).map(|p| &levels.levels[p]);
        for (index, w) in verts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let rect = Rect::from_lattice(a, b);
            let (area, slope) = match &rect {
                Ok(r) => (r.area(), r.slope()),
                Err(_) => (0.0, f64::NAN),
            };
            let ell_f = ell as i32;
            let slope_ok = slope >= q.powi(-ell_f) * (1.0 - GEOM_TOL) && slope <= q.powi(ell_f) * (1.0 + GEOM_TOL);
            let area_ok = (ell > 0).then(|| {
                let bound = lambda2 * n * n / 2f64.powi(2 * ell_f * levels.s as i32);
                area >= bound * (1.0 - GEOM_TOL)
            });
            let parent_slope_ok = parents.map(|pv| match enclosing(pv, a, b) {
                Some((pa, pb)) => {
                    let ps = (pb[1] as f64 - pa[1] as f64) / (pb[0] as f64 - pa[0] as f64);
                    let ratio = slope / ps;
                    ratio >= (1.0 - GEOM_TOL) / q && ratio <= q * (1.0 + GEOM_TOL)
                }
                None => false,
            });
            checks.push(RectCheck {
                level: ell as u32,
                index,
                area,
                slope,
                area_ok,
                slope_ok,
                parent_slope_ok,
            });
        }
    }
    AprioriReport { checks }
}

/// Consecutive parent vertices `p ⪯ a` and `b ⪯ p'`.
fn enclosing(parents: &[[u32; 2]], a: [u32; 2], b: [u32; 2]) -> Option<([u32; 2], [u32; 2])> {
    let dominated = |p: &[u32; 2], v: [u32; 2]| p[0] <= v[0] && p[1] <= v[1];
    let i = parents.iter().rposition(|p| dominated(p, a))?;
    let next = *parents.get(i + 1)?;
    dominated(&b, next).then_some((parents[i], next))
}

/// Per-level fraction of scanned cylinders that contained a vertex of the
/// required scale; `None` where a level scanned nothing.
pub fn cylinder_hit_stats(field: &WeightField, params: &MultiScaleParams) -> Result<Vec<Option<f64>>> {
    let (_, sets) = build_heavy_path(field, params)?;
    Ok((0..sets.rects.len()).map(|l| sets.hit_fraction(l)).collect())
}
