//! Weighted hypercubic grids as seen by the solvers.

use crate::error::{domain, Result};

/// A finite grid `⟦0, side−1⟧^dim` carrying one real weight per vertex.
///
/// Implementations must be pure: repeated calls with the same coordinate
/// return the same bits.
pub trait LatticeWeights: Sync {
    /// Number of coordinates per vertex (`d + 1`).
    fn dim(&self) -> usize;
    /// Vertices per axis.
    fn side(&self) -> u32;
    /// The size parameter `n` used for scale buckets.
    fn size_param(&self) -> u64;
    /// Weight at `v`. The caller guarantees `v` is inside the grid.
    fn weight(&self, v: &[u32]) -> f64;

    #[inline]
    fn weight2(&self, x: u32, y: u32) -> f64 {
        self.weight(&[x, y])
    }

    #[inline]
    fn weight3(&self, x: u32, y: u32, z: u32) -> f64 {
        self.weight(&[x, y, z])
    }

    fn contains(&self, v: &[u32]) -> bool {
        v.len() == self.dim() && v.iter().all(|&c| c < self.side())
    }

    fn checked_weight(&self, v: &[u32]) -> Result<f64> {
        if !self.contains(v) {
            return Err(domain(format!(
                "vertex {v:?} outside grid of side {} in dimension {}",
                self.side(),
                self.dim()
            )));
        }
        Ok(self.weight(v))
    }
}

/// Dense row-major weight array (first coordinate fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseField {
    dim: usize,
    side: u32,
    size_param: u64,
    data: Vec<f64>,
}

impl DenseField {
    /// Builds a field from explicit weights; `size_param` defaults to `side − 1`.
    pub fn new(dim: usize, side: u32, data: Vec<f64>) -> Result<Self> {
        let cells = (side as usize)
            .checked_pow(dim as u32)
            .ok_or_else(|| domain("grid too large"))?;
        if dim == 0 || side == 0 || data.len() != cells {
            return Err(domain(format!(
                "expected {cells} weights for side {side} in dimension {dim}, got {}",
                data.len()
            )));
        }
        Ok(Self {
            dim,
            side,
            size_param: side as u64 - 1,
            data,
        })
    }

    pub fn from_fn(dim: usize, side: u32, f: impl Fn(&[u32]) -> f64) -> Result<Self> {
        let cells = (side as usize).pow(dim as u32);
        let mut coord = vec![0u32; dim];
        let mut data = Vec::with_capacity(cells);
        for idx in 0..cells {
            let mut rest = idx;
            for c in coord.iter_mut() {
                *c = (rest % side as usize) as u32;
                rest /= side as usize;
            }
            data.push(f(&coord));
        }
        Self::new(dim, side, data)
    }

    pub fn with_size_param(mut self, n: u64) -> Self {
        self.size_param = n;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn set(&mut self, v: &[u32], w: f64) {
        let i = self.index(v);
        self.data[i] = w;
    }

    #[inline]
    fn index(&self, v: &[u32]) -> usize {
        let s = self.side as usize;
        v.iter().rev().fold(0usize, |acc, &c| acc * s + c as usize)
    }
}

impl LatticeWeights for DenseField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn side(&self) -> u32 {
        self.side
    }

    fn size_param(&self) -> u64 {
        self.size_param
    }

    #[inline]
    fn weight(&self, v: &[u32]) -> f64 {
        self.data[self.index(v)]
    }

    #[inline]
    fn weight2(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.side as usize + x as usize]
    }

    #[inline]
    fn weight3(&self, x: u32, y: u32, z: u32) -> f64 {
        let s = self.side as usize;
        self.data[(z as usize * s + y as usize) * s + x as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_first_coordinate_fastest() {
        let f = DenseField::from_fn(2, 3, |v| (v[0] + 10 * v[1]) as f64).unwrap();
        assert_eq!(f.weight2(2, 1), 12.0);
        assert_eq!(f.weight(&[2, 1]), 12.0);
        assert_eq!(f.data()[5], 12.0);
        let g = DenseField::from_fn(3, 2, |v| (v[0] + 10 * v[1] + 100 * v[2]) as f64).unwrap();
        assert_eq!(g.weight3(1, 0, 1), 101.0);
        assert_eq!(g.weight(&[0, 1, 1]), 110.0);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(DenseField::new(2, 3, vec![0.0; 8]).is_err());
    }

    #[test]
    fn checked_weight_guards_bounds() {
        let f = DenseField::new(2, 2, vec![1.0; 4]).unwrap();
        assert!(f.checked_weight(&[2, 0]).is_err());
        assert!(f.checked_weight(&[0]).is_err());
        assert_eq!(f.checked_weight(&[1, 1]).unwrap(), 1.0);
    }
}
