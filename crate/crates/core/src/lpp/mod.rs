//! Exact last passage solvers and geodesic diagnostics.

mod chain;
mod path;
mod sweep;
mod traceback;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::ScaleBuckets;
use crate::error::{domain, Error, Result};
use crate::lattice::LatticeWeights;

pub use chain::{max_weight_chain, poisson_last_passage, MAX_CHAIN_POINTS};
pub use path::{compensated_sum, DirectedPath};
pub use sweep::{box_value_3d, rect_value_2d, SweepStrategy};

/// Largest planar grid side accepted by the solvers (`n = 2^15`).
pub const MAX_SIDE_2D: u32 = (1 << 15) + 1;
/// Largest side for three-dimensional grids (`n = 2^8`).
pub const MAX_SIDE_3D: u32 = (1 << 8) + 1;
/// Planar grids up to this side keep a full backpointer table.
pub const FULL_TABLE_MAX_SIDE: u32 = (1 << 12) + 1;
/// Rectangles with at most this many cells are leaves of the linear-memory
/// traceback.
pub const DC_LEAF_CELLS: usize = 1 << 20;

fn check_budget<W: LatticeWeights + ?Sized>(w: &W) -> Result<()> {
    let limit = match w.dim() {
        2 => MAX_SIDE_2D,
        3 => MAX_SIDE_3D,
        d => {
            return Err(Error::Unsupported(format!(
                "lattice solvers cover dimensions 2 and 3, got {d}"
            )))
        }
    };
    if w.side() == 0 {
        return Err(domain("empty grid"));
    }
    if w.side() > limit {
        return Err(Error::Size(format!(
            "grid side {} exceeds the solver budget of {limit} in dimension {}",
            w.side(),
            w.dim()
        )));
    }
    Ok(())
}

/// Last passage value from the origin to the far corner.
pub fn last_passage<W: LatticeWeights + ?Sized>(w: &W) -> Result<f64> {
    last_passage_with(w, SweepStrategy::auto(w.side() as usize))
}

/// [`last_passage`] with an explicit planar sweep order. Both orders return
/// the same bits.
pub fn last_passage_with<W: LatticeWeights + ?Sized>(w: &W, strategy: SweepStrategy) -> Result<f64> {
    check_budget(w)?;
    let m = w.side() - 1;
    Ok(match w.dim() {
        2 => rect_value_2d(w, [0, 0], [m, m], strategy),
        _ => box_value_3d(w, [0, 0, 0], [m, m, m]),
    })
}

/// Last passage value between two ordered grid vertices.
pub fn passage_between<W: LatticeWeights + ?Sized>(w: &W, u: &[u32], v: &[u32]) -> Result<f64> {
    check_budget(w)?;
    if !w.contains(u) || !w.contains(v) {
        return Err(domain(format!("{u:?} or {v:?} lies outside the grid")));
    }
    if u.iter().zip(v).any(|(a, b)| a > b) {
        return Err(domain(format!("{u:?} does not precede {v:?}")));
    }
    Ok(match w.dim() {
        2 => rect_value_2d(w, [u[0], u[1]], [v[0], v[1]], SweepStrategy::RowMajor),
        _ => box_value_3d(w, [u[0], u[1], u[2]], [v[0], v[1], v[2]]),
    })
}

/// How the geodesic is recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicMethod {
    /// Full backpointer table (one byte per cell).
    FullTable,
    /// Linear-memory splitting at middle anti-diagonals (planar only).
    DivideAndConquer { leaf_cells: usize },
}

impl GeodesicMethod {
    fn auto<W: LatticeWeights + ?Sized>(w: &W) -> Self {
        if w.dim() == 2 && w.side() > FULL_TABLE_MAX_SIDE {
            Self::DivideAndConquer {
                leaf_cells: DC_LEAF_CELLS,
            }
        } else {
            Self::FullTable
        }
    }
}

/// A scale bucket key; the residual bucket collects weights below the
/// smallest bucket floor and non-positive weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScaleKey {
    Scale(i32),
    Residual,
}

impl fmt::Display for ScaleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleKey::Scale(k) => write!(f, "{k}"),
            ScaleKey::Residual => f.write_str("residual"),
        }
    }
}

impl FromStr for ScaleKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "residual" {
            return Ok(ScaleKey::Residual);
        }
        s.parse()
            .map(ScaleKey::Scale)
            .map_err(|_| domain(format!("bad scale key {s:?}")))
    }
}

impl Serialize for ScaleKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScaleKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Solver output with geodesic diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageResult {
    pub value: f64,
    pub geodesic: Option<DirectedPath>,
    pub scale_sums: BTreeMap<ScaleKey, f64>,
    /// `max |x − y|` along the geodesic; planar grids only.
    pub transversal: Option<u64>,
}

/// Value, geodesic, scale decomposition and transversal fluctuation.
pub fn geodesic<W: LatticeWeights + ?Sized>(w: &W) -> Result<PassageResult> {
    geodesic_with(w, GeodesicMethod::auto(w))
}

pub fn geodesic_with<W: LatticeWeights + ?Sized>(w: &W, method: GeodesicMethod) -> Result<PassageResult> {
    check_budget(w)?;
    let m = w.side() - 1;
    let (value, coords) = match (w.dim(), method) {
        (2, GeodesicMethod::FullTable) => traceback::full_table_2d(w, [0, 0], [m, m]),
        (2, GeodesicMethod::DivideAndConquer { leaf_cells }) => {
            traceback::divide_and_conquer_2d(w, [0, 0], [m, m], leaf_cells.max(1))
        }
        (_, GeodesicMethod::FullTable) => traceback::full_table_3d(w, [0, 0, 0], [m, m, m]),
        (d, _) => {
            return Err(Error::Unsupported(format!(
                "linear-memory traceback is planar only, got dimension {d}"
            )))
        }
    };
    let path = DirectedPath::new(w.dim(), coords).map_err(|e| Error::Internal(e.to_string()))?;
    let scale_sums = scale_decomposition(&path, w, w.size_param());
    let transversal = path.transversal_fluctuation().ok();
    Ok(PassageResult {
        value,
        geodesic: Some(path),
        scale_sums,
        transversal,
    })
}

/// Sums of path weights per dyadic scale of `n`.
pub fn scale_decomposition<W: LatticeWeights + ?Sized>(
    path: &DirectedPath,
    w: &W,
    n: u64,
) -> BTreeMap<ScaleKey, f64> {
    let buckets = ScaleBuckets::new(n);
    let mut parts: BTreeMap<ScaleKey, Vec<f64>> = BTreeMap::new();
    for v in path.iter() {
        let x = w.weight(v);
        let key = match buckets.scale_of(x) {
            Ok(Some(k)) => ScaleKey::Scale(k),
            _ => ScaleKey::Residual,
        };
        parts.entry(key).or_default().push(x);
    }
    parts
        .into_iter()
        .map(|(k, xs)| (k, compensated_sum(xs)))
        .collect()
}

/// Path vertices whose weight exceeds `threshold`, in path order, with both
/// endpoints always kept.
pub fn skeleton<W: LatticeWeights + ?Sized>(path: &DirectedPath, w: &W, threshold: f64) -> Vec<Vec<u32>> {
    let last = path.len() - 1;
    path.iter()
        .enumerate()
        .filter(|&(i, v)| i == 0 || i == last || w.weight(v) > threshold)
        .map(|(_, v)| v.to_vec())
        .collect()
}

/// `max |x − y|` over a planar path.
pub fn transversal_fluctuation(path: &DirectedPath) -> Result<u64> {
    path.transversal_fluctuation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvironmentKind, EnvironmentSpec, WeightField};
    use crate::lattice::DenseField;

    fn pareto(n: u64, seed: u64) -> WeightField {
        WeightField::new(EnvironmentSpec::new(EnvironmentKind::IidPareto2, n, seed)).unwrap()
    }

    #[test]
    fn trivial_grids() {
        let single = DenseField::new(2, 1, vec![2.5]).unwrap();
        assert_eq!(last_passage(&single).unwrap(), 2.5);
        let ones = DenseField::new(2, 2, vec![1.0; 4]).unwrap();
        assert_eq!(last_passage(&ones).unwrap(), 3.0);
    }

    #[test]
    fn budget_guards() {
        let big = pareto(1 << 16, 1);
        assert!(matches!(last_passage(&big), Err(Error::Size(_))));
        let cube = WeightField::new(EnvironmentSpec::new(EnvironmentKind::IidPareto2, 512, 1).with_d(2)).unwrap();
        assert!(matches!(geodesic(&cube), Err(Error::Size(_))));
        let d3 = WeightField::new(EnvironmentSpec::new(EnvironmentKind::IidPareto2, 4, 1).with_d(3)).unwrap();
        assert!(matches!(last_passage(&d3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn all_ties_staircase() {
        let n = 5u32;
        let f = DenseField::new(2, n + 1, vec![2.0; ((n + 1) * (n + 1)) as usize]).unwrap();
        let r = geodesic(&f).unwrap();
        let p = r.geodesic.unwrap();
        assert_eq!(r.value, (2 * n + 1) as f64 * 2.0);
        let expect = DirectedPath::leftmost_through(&[[0, 0], [n, n]]).unwrap();
        assert_eq!(p, expect);
        assert_eq!(r.transversal, Some(n as u64));
    }

    #[test]
    fn geodesic_consistency() {
        for seed in 0..5 {
            let f = pareto(64, seed);
            let r = geodesic(&f).unwrap();
            let p = r.geodesic.as_ref().unwrap();
            p.check_spans(f.side()).unwrap();
            assert_eq!(r.value.to_bits(), last_passage(&f).unwrap().to_bits());
            assert_eq!(r.value.to_bits(), p.weight(&f).to_bits());
            let total: f64 = r.scale_sums.values().sum();
            assert!((total - r.value).abs() <= 1e-9 * r.value);
        }
    }

    #[test]
    fn divide_and_conquer_agrees_on_random_fields() {
        let f = pareto(300, 17);
        let full = geodesic_with(&f, GeodesicMethod::FullTable).unwrap();
        let dc = geodesic_with(&f, GeodesicMethod::DivideAndConquer { leaf_cells: 64 }).unwrap();
        assert_eq!(full.value.to_bits(), dc.value.to_bits());
        let p = dc.geodesic.unwrap();
        p.check_spans(f.side()).unwrap();
        assert!((p.weight_compensated(&f) - dc.value).abs() <= 1e-9 * dc.value);
    }

    #[test]
    fn passage_between_examples() {
        let f = pareto(10, 3);
        assert_eq!(passage_between(&f, &[4, 5], &[4, 5]).unwrap(), f.weight2(4, 5));
        assert_eq!(
            passage_between(&f, &[0, 0], &[10, 10]).unwrap(),
            last_passage(&f).unwrap()
        );
        assert!(passage_between(&f, &[5, 0], &[4, 9]).is_err());
        assert!(passage_between(&f, &[0, 0], &[11, 0]).is_err());
        // a 2 × 3 block has three monotone paths
        let (a, b) = ([2u32, 3u32], [3u32, 5u32]);
        let x = |i: u32, j: u32| f.weight2(i, j);
        let paths = [
            x(2, 3) + x(3, 3) + x(3, 4) + x(3, 5),
            x(2, 3) + x(2, 4) + x(3, 4) + x(3, 5),
            x(2, 3) + x(2, 4) + x(2, 5) + x(3, 5),
        ];
        let brute = paths.iter().cloned().fold(f64::MIN, f64::max);
        assert!((passage_between(&f, &a, &b).unwrap() - brute).abs() < 1e-12 * brute);
    }

    #[test]
    fn scale_decomposition_examples() {
        let n = 8u64;
        let mut f = DenseField::new(2, 3, vec![0.001; 9]).unwrap().with_size_param(n);
        let path = DirectedPath::leftmost_through(&[[0, 0], [2, 2]]).unwrap();
        let sums = scale_decomposition(&path, &f, n);
        assert_eq!(sums.keys().collect::<Vec<_>>(), vec![&ScaleKey::Residual]);
        f.set(&[0, 1], 12.0);
        let sums = scale_decomposition(&path, &f, n);
        assert_eq!(sums[&ScaleKey::Scale(0)], 12.0);
    }

    #[test]
    fn skeleton_examples() {
        let f = pareto(32, 5);
        let p = geodesic(&f).unwrap().geodesic.unwrap();
        let ends = skeleton(&p, &f, f64::INFINITY);
        assert_eq!(ends, vec![vec![0, 0], vec![32, 32]]);
        assert_eq!(skeleton(&p, &f, 0.0).len(), p.len());
    }

    #[test]
    fn scale_key_ordering_and_text() {
        let mut keys = vec![ScaleKey::Residual, ScaleKey::Scale(3), ScaleKey::Scale(-1)];
        keys.sort();
        assert_eq!(keys, vec![ScaleKey::Scale(-1), ScaleKey::Scale(3), ScaleKey::Residual]);
        for k in keys {
            assert_eq!(k.to_string().parse::<ScaleKey>().unwrap(), k);
        }
    }
}
