use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::LatticeWeights;

/// An up-right lattice path stored as a flat coordinate buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedPath {
    dim: usize,
    coords: Vec<u32>,
}

impl DirectedPath {
    /// Wraps a flat buffer of `dim`-tuples, checking that consecutive
    /// vertices differ by one unit step.
    pub fn new(dim: usize, coords: Vec<u32>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(domain("path buffer must hold a positive number of vertices"));
        }
        let path = Self { dim, coords };
        for i in 1..path.len() {
            if !is_unit_step(path.vertex(i - 1), path.vertex(i)) {
                return Err(domain(format!(
                    "vertices {:?} and {:?} are not one unit step apart",
                    path.vertex(i - 1),
                    path.vertex(i)
                )));
            }
        }
        Ok(path)
    }

    pub fn from_vertices<V: AsRef<[u32]>>(vertices: &[V]) -> Result<Self> {
        let dim = vertices.first().map(|v| v.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(dim * vertices.len());
        for v in vertices {
            if v.as_ref().len() != dim {
                return Err(domain("vertices of mixed dimension"));
            }
            coords.extend_from_slice(v.as_ref());
        }
        Self::new(dim, coords)
    }

    /// The leftmost path visiting `points` in order: between consecutive
    /// points, steps along the last axis come first and along the first axis
    /// last (in the plane: up, then right).
    pub fn leftmost_through<V: AsRef<[u32]>>(points: &[V]) -> Result<Self> {
        let first = points.first().ok_or_else(|| domain("no points to connect"))?;
        let dim = first.as_ref().len();
        let mut coords: Vec<u32> = first.as_ref().to_vec();
        let mut cur = coords.clone();
        for p in &points[1..] {
            let p = p.as_ref();
            if p.len() != dim || cur.iter().zip(p).any(|(a, b)| a > b) {
                return Err(domain(format!("{p:?} does not dominate {cur:?}")));
            }
            for axis in (0..dim).rev() {
                while cur[axis] < p[axis] {
                    cur[axis] += 1;
                    coords.extend_from_slice(&cur);
                }
            }
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &[u32] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn first(&self) -> &[u32] {
        self.vertex(0)
    }

    pub fn last(&self) -> &[u32] {
        self.vertex(self.len() - 1)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    /// Checks that the path runs from the origin to the far corner of a grid
    /// of the given side.
    pub fn check_spans(&self, side: u32) -> Result<()> {
        if self.first().iter().any(|&c| c != 0) {
            return Err(domain(format!("path starts at {:?}, not the origin", self.first())));
        }
        if self.last().iter().any(|&c| c + 1 != side) {
            return Err(domain(format!(
                "path ends at {:?}, not the far corner of side {side}",
                self.last()
            )));
        }
        Ok(())
    }

    /// Whether the vertices of `points` appear along the path in order.
    pub fn passes_through<V: AsRef<[u32]>>(&self, points: &[V]) -> bool {
        let mut it = self.iter();
        points
            .iter()
            .all(|p| it.by_ref().any(|v| v == p.as_ref()))
    }

    /// Plain left-to-right sum of weights along the path.
    pub fn weight<W: LatticeWeights + ?Sized>(&self, w: &W) -> f64 {
        self.iter().fold(0.0, |acc, v| acc + w.weight(v))
    }

    /// Neumaier-compensated sum of weights along the path.
    pub fn weight_compensated<W: LatticeWeights + ?Sized>(&self, w: &W) -> f64 {
        compensated_sum(self.iter().map(|v| w.weight(v)))
    }

    /// `max |x − y|` over the vertices of a planar path.
    pub fn transversal_fluctuation(&self) -> Result<u64> {
        if self.dim != 2 {
            return Err(Error::Unsupported(format!(
                "transversal fluctuation is defined for planar paths, got dimension {}",
                self.dim
            )));
        }
        Ok(self
            .iter()
            .map(|v| (v[0] as i64 - v[1] as i64).unsigned_abs())
            .max()
            .unwrap_or(0))
    }
}

fn is_unit_step(a: &[u32], b: &[u32]) -> bool {
    let mut moved = 0;
    for (&p, &q) in a.iter().zip(b) {
        if q == p + 1 {
            moved += 1;
        } else if q != p {
            return false;
        }
    }
    moved == 1
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unit_steps() {
        assert!(DirectedPath::from_vertices(&[[0, 0], [1, 1]]).is_err());
        assert!(DirectedPath::from_vertices(&[[0, 0], [0, 2]]).is_err());
        assert!(DirectedPath::from_vertices(&[[1, 0], [0, 0]]).is_err());
        assert!(DirectedPath::from_vertices(&[[0, 0], [0, 1], [1, 1]]).is_ok());
    }

    #[test]
    fn leftmost_goes_up_then_right() {
        let p = DirectedPath::leftmost_through(&[[0, 0], [2, 2]]).unwrap();
        let v: Vec<&[u32]> = p.iter().collect();
        assert_eq!(v, vec![&[0, 0][..], &[0, 1], &[0, 2], &[1, 2], &[2, 2]]);
        assert!(DirectedPath::leftmost_through(&[[0, 3], [2, 2]]).is_err());
        let q = DirectedPath::leftmost_through(&[[0, 0, 0], [1, 1, 1]]).unwrap();
        assert_eq!(q.vertex(1), &[0, 0, 1]);
        assert_eq!(q.vertex(2), &[0, 1, 1]);
    }

    #[test]
    fn transversal_examples() {
        let diag = DirectedPath::from_vertices(&[[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]]).unwrap();
        assert!(diag.transversal_fluctuation().unwrap() <= 1);
        let corner = DirectedPath::from_vertices(&[[0, 0], [1, 0], [2, 0], [2, 1], [2, 2]]).unwrap();
        assert_eq!(corner.transversal_fluctuation().unwrap(), 2);
        let p3 = DirectedPath::leftmost_through(&[[0, 0, 0], [1, 1, 1]]).unwrap();
        assert!(matches!(p3.transversal_fluctuation(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn passes_through_respects_order() {
        let p = DirectedPath::leftmost_through(&[[0, 0], [1, 1], [3, 3]]).unwrap();
        assert!(p.passes_through(&[[0, 0], [1, 1], [3, 3]]));
        assert!(!p.passes_through(&[[1, 1], [0, 0]]));
        assert!(!p.passes_through(&[[2, 0]]));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
