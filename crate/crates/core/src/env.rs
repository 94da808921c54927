//! Random environments: i.i.d. critical heavy tails, the branching random
//! walk, and layered Poisson point processes.
//!
//! Lattice weights are never drawn from a sequential stream. Each weight is a
//! keyed hash of `(seed, coordinates)` pushed through a fixed quantile
//! transform, so a field costs no memory unless it is explicitly
//! materialized.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{DenseField, LatticeWeights};
use crate::rng::{gaussian, hash3, hash_words, unit_half_open, unit_open};

const STREAM_IID: u64 = 0x11D0;
const STREAM_BRW: u64 = 0xB4A0;
const STREAM_POISSON_COUNT: u64 = 0x9015;
const STREAM_POISSON_POINT: u64 = 0x9016;

/// Largest number of cells `WeightField::materialize` will allocate.
pub const MATERIALIZE_LIMIT: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum EnvironmentKind {
    /// Critical power law, `P(X > t) = (t0/t)^(d+1)` for `t ≥ t0`.
    #[serde(rename = "iid-pareto2")]
    IidPareto2,
    /// Critical power law with a logarithmic tail correction of exponent `beta`.
    #[serde(rename = "iid-logcorrected")]
    IidLogCorrected,
    /// Branching random walk on `⟦0, n−1⟧^(d+1)`.
    #[serde(rename = "brw")]
    Brw,
    /// Superposition of Poisson layers, one per dyadic scale.
    #[serde(rename = "poisson")]
    PoissonLayers,
}

impl EnvironmentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::IidPareto2 => "iid-pareto2",
            Self::IidLogCorrected => "iid-logcorrected",
            Self::Brw => "brw",
            Self::PoissonLayers => "poisson",
        }
    }

    pub fn is_lattice(self) -> bool {
        !matches!(self, Self::PoissonLayers)
    }
}

impl std::str::FromStr for EnvironmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid-pareto2" => Ok(Self::IidPareto2),
            "iid-logcorrected" => Ok(Self::IidLogCorrected),
            "brw" => Ok(Self::Brw),
            "poisson" => Ok(Self::PoissonLayers),
            other => Err(domain(format!("unknown model {other:?}"))),
        }
    }
}

impl std::fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_t0() -> f64 {
    1.0
}

fn default_d() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvParams {
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_count: Option<u32>,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            t0: 1.0,
            beta: None,
            layer_count: None,
        }
    }
}

/// Declarative description of a random environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub kind: EnvironmentKind,
    pub n: u64,
    #[serde(default = "default_d")]
    pub d: u32,
    pub seed: u64,
    #[serde(default)]
    pub params: EnvParams,
}

impl EnvironmentSpec {
    pub fn new(kind: EnvironmentKind, n: u64, seed: u64) -> Self {
        Self {
            kind,
            n,
            d: 1,
            seed,
            params: EnvParams::default(),
        }
    }

    pub fn with_d(mut self, d: u32) -> Self {
        self.d = d;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.params.beta = Some(beta);
        self
    }

    pub fn with_layer_count(mut self, layers: u32) -> Self {
        self.params.layer_count = Some(layers);
        self
    }

    pub fn with_n_seed(mut self, n: u64, seed: u64) -> Self {
        self.n = n;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(domain("codimension d must be at least 1"));
        }
        if !(self.params.t0 >= 1.0) || !self.params.t0.is_finite() {
            return Err(domain(format!("t0 = {} must be ≥ 1", self.params.t0)));
        }
        match self.kind {
            EnvironmentKind::Brw => {
                if self.n == 0 || !self.n.is_power_of_two() {
                    return Err(domain(format!(
                        "brw requires n to be a power of two, got {}",
                        self.n
                    )));
                }
            }
            EnvironmentKind::IidLogCorrected => {
                let beta = self
                    .params
                    .beta
                    .ok_or_else(|| domain("iid-logcorrected requires params.beta"))?;
                check_beta(beta, self.d)?;
            }
            EnvironmentKind::PoissonLayers => {
                if self.n == 0 {
                    return Err(domain("poisson layers need n ≥ 1"));
                }
                let max_layers = max_layer_count(self.n);
                if let Some(l) = self.params.layer_count {
                    if l == 0 || l > max_layers {
                        return Err(domain(format!(
                            "layer_count {l} must lie in 1..={max_layers} for n = {}",
                            self.n
                        )));
                    }
                }
            }
            EnvironmentKind::IidPareto2 => {}
        }
        if self.kind.is_lattice() && self.side().is_none() {
            return Err(Error::Size(format!("n = {} exceeds the coordinate range", self.n)));
        }
        Ok(())
    }

    /// Vertices per axis: `n + 1` for i.i.d. kinds, `n` for the BRW.
    pub fn side(&self) -> Option<u32> {
        let side = match self.kind {
            EnvironmentKind::Brw => self.n,
            _ => self.n + 1,
        };
        u32::try_from(side).ok()
    }

    pub fn layer_count(&self) -> u32 {
        self.params
            .layer_count
            .unwrap_or_else(|| max_layer_count(self.n))
    }
}

fn max_layer_count(n: u64) -> u32 {
    n.max(1).ilog2() + 1
}

fn check_beta(beta: f64, d: u32) -> Result<()> {
    let upper = (d as f64 + 2.0) / 2.0;
    if beta > 1.0 && beta < upper {
        Ok(())
    } else {
        Err(domain(format!("beta = {beta} must lie in (1, {upper}) for d = {d}")))
    }
}

/// Inverse-CDF draw with exact tail `P(X > t) = (t0/t)^2`, `t ≥ t0`.
pub fn sample_pareto2(u: f64, t0: f64) -> Result<f64> {
    sample_pareto_critical(u, t0, 1)
}

/// Inverse-CDF draw with exact tail `P(X > t) = (t0/t)^(d+1)`, `t ≥ t0`.
pub fn sample_pareto_critical(u: f64, t0: f64, d: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(domain(format!("uniform variate {u} outside [0, 1)")));
    }
    if !(t0 >= 1.0) {
        return Err(domain(format!("t0 = {t0} must be ≥ 1")));
    }
    Ok(pareto_unchecked(u, t0, d))
}

#[inline(always)]
fn pareto_unchecked(u: f64, t0: f64, d: u32) -> f64 {
    if d == 1 {
        t0 / (1.0 - u).sqrt()
    } else {
        t0 * (1.0 - u).powf(-1.0 / (d as f64 + 1.0))
    }
}

/// Tail `F̄(t) = min{1, t^-(d+1) (1 + log2 t)^-beta}` of the log-corrected law.
pub fn logcorrected_tail(t: f64, beta: f64, d: u32) -> f64 {
    if t <= 1.0 {
        return 1.0;
    }
    (t.powf(-(d as f64 + 1.0)) * (1.0 + t.log2()).powf(-beta)).min(1.0)
}

const BISECTION_CAP: usize = 400;

/// Quantile of the log-corrected law by monotone bisection in `log2 t`.
///
/// The root of `F̄(x) = 1 − u` is bracketed by `[1, (1−u)^(−1/(d+1))]`
/// because the correction factor never exceeds one. Bisection stops once the
/// bracket is narrower than `1e-12` relative in `x`.
pub fn sample_logcorrected(u: f64, beta: f64, d: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(domain(format!("uniform variate {u} outside [0, 1)")));
    }
    check_beta(beta, d)?;
    logcorrected_unchecked(u, beta, d)
}

fn logcorrected_unchecked(u: f64, beta: f64, d: u32) -> Result<f64> {
    if u == 0.0 {
        return Ok(1.0);
    }
    let alpha = d as f64 + 1.0;
    // work with y = log2 x: alpha*y + beta*log2(1+y) = -log2(1-u)
    let target = -(1.0 - u).log2();
    let g = |y: f64| alpha * y + beta * (1.0 + y).log2() - target;
    let (mut lo, mut hi) = (0.0f64, target / alpha);
    if g(hi) <= 0.0 {
        return Ok(hi.exp2());
    }
    // relative error of x = 2^y is ln2 * (hi - lo)
    let tol = 1e-12 / std::f64::consts::LN_2;
    for _ in 0..BISECTION_CAP {
        if hi - lo <= tol {
            return Ok((0.5 * (lo + hi)).exp2());
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Internal(format!(
        "log-corrected bisection did not converge for u = {u}"
    )))
}

/// Scale bucket of a weight: the unique `k` with `n/2^k < x ≤ n/2^(k−1)`.
///
/// Returns `None` for weights at or below the floor `n/2^k_max`, where
/// `k_max = ⌈log2 n⌉`. Weights above `2n` get negative indices.
pub fn scale_of(x: f64, n: u64) -> Result<Option<i32>> {
    ScaleBuckets::new(n).scale_of(x)
}

/// Dyadic scale buckets for a grid of size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBuckets {
    n: f64,
    k_max: i32,
}

impl ScaleBuckets {
    pub fn new(n: u64) -> Self {
        let n = n.max(1);
        Self {
            n: n as f64,
            k_max: n.next_power_of_two().ilog2() as i32,
        }
    }

    pub fn with_k_max(mut self, k_max: i32) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    /// Lower (open) end of bucket `k`: `n / 2^k`.
    #[inline]
    pub fn floor_of(&self, k: i32) -> f64 {
        self.n * 2f64.powi(-k)
    }

    pub fn scale_of(&self, x: f64) -> Result<Option<i32>> {
        if !(x > 0.0) {
            return Err(domain(format!("scale_of needs a positive weight, got {x}")));
        }
        if x <= self.floor_of(self.k_max) {
            return Ok(None);
        }
        let mut k = (self.n / x).log2().floor() as i32 + 1;
        // the float estimate can be off by one at bucket boundaries
        loop {
            if x <= self.floor_of(k) {
                k += 1;
            } else if x > self.floor_of(k - 1) {
                k -= 1;
            } else {
                return Ok(Some(k));
            }
        }
    }

    /// Whether `x` lies in bucket `k`, without computing the bucket.
    #[inline]
    pub fn in_scale(&self, x: f64, k: i32) -> bool {
        let lo = self.floor_of(k);
        x > lo && x <= 2.0 * lo
    }
}

/// A random environment evaluated coordinate by coordinate.
#[derive(Debug, Clone)]
pub struct WeightField {
    spec: EnvironmentSpec,
    side: u32,
    dim: usize,
    levels: u32,
    beta: f64,
    dense: Option<DenseField>,
}

impl WeightField {
    pub fn new(spec: EnvironmentSpec) -> Result<Self> {
        spec.validate()?;
        if !spec.kind.is_lattice() {
            return Err(Error::Unsupported(
                "poisson layers are a continuum environment; use gen_poisson_layers".into(),
            ));
        }
        let side = spec.side().expect("validated");
        let levels = if spec.kind == EnvironmentKind::Brw {
            spec.n.ilog2()
        } else {
            0
        };
        Ok(Self {
            spec,
            side,
            dim: spec.d as usize + 1,
            levels,
            beta: spec.params.beta.unwrap_or(0.0),
            dense: None,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn is_materialized(&self) -> bool {
        self.dense.is_some()
    }

    /// Checked evaluation at a lattice coordinate.
    pub fn eval(&self, v: &[u32]) -> Result<f64> {
        self.checked_weight(v)
    }

    /// Fills a dense array with every weight. Values are bit-identical to
    /// on-demand evaluation.
    pub fn materialize(&mut self) -> Result<()> {
        if self.dense.is_some() {
            return Ok(());
        }
        let cells = (self.side as usize)
            .checked_pow(self.dim as u32)
            .filter(|&c| c <= MATERIALIZE_LIMIT)
            .ok_or_else(|| {
                Error::Size(format!(
                    "materializing side {} in dimension {} exceeds {MATERIALIZE_LIMIT} cells",
                    self.side, self.dim
                ))
            })?;
        let dense = if self.spec.kind == EnvironmentKind::Brw {
            self.brw_dense(cells)
        } else {
            DenseField::from_fn(self.dim, self.side, |v| self.eval_lazy(v))?
        };
        self.dense = Some(dense.with_size_param(self.spec.n));
        Ok(())
    }

    pub fn materialized(mut self) -> Result<Self> {
        self.materialize()?;
        Ok(self)
    }

    /// Number of dyadic levels above the unit boxes (`log2 n` for the BRW).
    pub fn brw_levels(&self) -> u32 {
        self.levels
    }

    /// The Gaussian attached to the level-`k` box with index `box_index`
    /// (coordinates divided by the box side `n / 2^k`).
    #[inline]
    pub fn brw_box_variable(&self, k: u32, box_index: &[u32]) -> f64 {
        match box_index {
            [a, b] => gaussian(hash_words(
                self.spec.seed,
                &[STREAM_BRW, k as u64, *a as u64, *b as u64],
            )),
            _ => {
                let mut words = Vec::with_capacity(box_index.len() + 2);
                words.push(STREAM_BRW);
                words.push(k as u64);
                words.extend(box_index.iter().map(|&c| c as u64));
                gaussian(hash_words(self.spec.seed, &words))
            }
        }
    }

    fn brw_dense(&self, cells: usize) -> DenseField {
        if self.dim == 2 {
            return self.brw_dense_2d();
        }
        let mut data = vec![0.0f64; cells];
        let side = self.side as usize;
        let dim = self.dim;
        let mut box_coord = vec![0u32; dim];
        for k in 0..=self.levels {
            let shift = self.levels - k;
            let boxes_per_axis = 1usize << k;
            let box_side = 1usize << shift;
            let n_boxes = boxes_per_axis.pow(dim as u32);
            for b in 0..n_boxes {
                let mut rest = b;
                for c in box_coord.iter_mut() {
                    *c = (rest % boxes_per_axis) as u32;
                    rest /= boxes_per_axis;
                }
                let xi = self.brw_box_variable(k, &box_coord);
                add_to_box(&mut data, side, dim, &box_coord, box_side, xi);
            }
        }
        DenseField::new(dim, self.side, data).expect("sized above")
    }

    /// Partial sums level by level: each box adds its variable to the sum
    /// inherited from its parent, in the same order as on-demand evaluation.
    fn brw_dense_2d(&self) -> DenseField {
        let mut acc = vec![0.0f64];
        for k in 0..=self.levels {
            let per_axis = 1usize << k;
            let parent_axis = per_axis >> 1;
            let mut next = Vec::with_capacity(per_axis * per_axis);
            for by in 0..per_axis {
                for bx in 0..per_axis {
                    let base = if k == 0 { 0.0 } else { acc[(by >> 1) * parent_axis + (bx >> 1)] };
                    next.push(base + self.brw_box_variable(k, &[bx as u32, by as u32]));
                }
            }
            acc = next;
        }
        DenseField::new(2, self.side, acc).expect("one cell per unit box")
    }

    #[inline(always)]
    fn iid_from_hash(&self, h: u64) -> f64 {
        let u = unit_half_open(h);
        match self.spec.kind {
            EnvironmentKind::IidPareto2 => pareto_unchecked(u, self.spec.params.t0, self.spec.d),
            EnvironmentKind::IidLogCorrected => {
                self.spec.params.t0
                    * logcorrected_unchecked(u, self.beta, self.spec.d)
                        .expect("bisection on a monotone tail converges")
            }
            _ => unreachable!(),
        }
    }

    fn eval_lazy(&self, v: &[u32]) -> f64 {
        match self.spec.kind {
            EnvironmentKind::Brw => {
                let mut s = 0.0;
                let mut idx = vec![0u32; v.len()];
                for k in 0..=self.levels {
                    let shift = self.levels - k;
                    for (b, &c) in idx.iter_mut().zip(v) {
                        *b = c >> shift;
                    }
                    s += self.brw_box_variable(k, &idx);
                }
                s
            }
            _ => {
                let mut words = Vec::with_capacity(v.len() + 1);
                words.push(STREAM_IID);
                words.extend(v.iter().map(|&c| c as u64));
                self.iid_from_hash(hash_words(self.spec.seed, &words))
            }
        }
    }
}

fn add_to_box(data: &mut [f64], side: usize, dim: usize, b: &[u32], box_side: usize, xi: f64) {
    match dim {
        2 => {
            let (x0, y0) = (b[0] as usize * box_side, b[1] as usize * box_side);
            for y in y0..y0 + box_side {
                let row = &mut data[y * side + x0..y * side + x0 + box_side];
                for c in row {
                    *c += xi;
                }
            }
        }
        _ => {
            let cells = box_side.pow(dim as u32);
            for off in 0..cells {
                let mut rest = off;
                let mut idx = 0usize;
                let mut stride = 1usize;
                for &bc in b.iter() {
                    let c = bc as usize * box_side + rest % box_side;
                    rest /= box_side;
                    idx += c * stride;
                    stride *= side;
                }
                data[idx] += xi;
            }
        }
    }
}

impl LatticeWeights for WeightField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn side(&self) -> u32 {
        self.side
    }

    fn size_param(&self) -> u64 {
        self.spec.n
    }

    #[inline]
    fn weight(&self, v: &[u32]) -> f64 {
        match &self.dense {
            Some(d) => d.weight(v),
            None => self.eval_lazy(v),
        }
    }

    #[inline]
    fn weight2(&self, x: u32, y: u32) -> f64 {
        if let Some(d) = &self.dense {
            return d.weight2(x, y);
        }
        match self.spec.kind {
            EnvironmentKind::IidPareto2 | EnvironmentKind::IidLogCorrected => {
                self.iid_from_hash(hash3(self.spec.seed, STREAM_IID, x as u64, y as u64))
            }
            _ => {
                let mut s = 0.0;
                for k in 0..=self.levels {
                    let shift = self.levels - k;
                    s += self.brw_box_variable(k, &[x >> shift, y >> shift]);
                }
                s
            }
        }
    }

    #[inline]
    fn weight3(&self, x: u32, y: u32, z: u32) -> f64 {
        match &self.dense {
            Some(d) => d.weight3(x, y, z),
            None => self.eval_lazy(&[x, y, z]),
        }
    }
}

/// One Poisson layer: all points share the weight `n / 2^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonLayer {
    pub k: u32,
    pub weight: f64,
    pub points: Vec<(f64, f64)>,
}

/// Superposition of independent Poisson layers in `[0, n]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonLayers {
    pub n: f64,
    pub layers: Vec<PoissonLayer>,
}

impl PoissonLayers {
    pub fn total_points(&self) -> usize {
        self.layers.iter().map(|l| l.points.len()).sum()
    }
}

/// Layer `k` carries weight `n/2^k` and a Poisson(`4^k`) number of uniform
/// points in `[0, n]^2`, i.e. intensity `4^k / n^2`.
pub fn gen_poisson_layers(n: u64, layer_count: u32, seed: u64) -> Result<PoissonLayers> {
    if n == 0 {
        return Err(domain("poisson layers need n ≥ 1"));
    }
    let max_layers = max_layer_count(n);
    if layer_count > max_layers {
        return Err(domain(format!(
            "layer_count {layer_count} exceeds log2 n + 1 = {max_layers}"
        )));
    }
    let side = n as f64;
    let layers = (0..layer_count)
        .map(|k| {
            let mean = 4f64.powi(k as i32);
            PoissonLayer {
                k,
                weight: side / 2f64.powi(k as i32),
                points: poisson_points(side, mean / (side * side), seed, k as u64),
            }
        })
        .collect();
    Ok(PoissonLayers { n: side, layers })
}

/// Homogeneous Poisson process of the given intensity on `[0, side]^2`.
///
/// The count is drawn from a ChaCha stream keyed by `(seed, stream)`; point
/// coordinates are counter-based so the process is reproducible point by
/// point.
pub fn poisson_points(side: f64, intensity: f64, seed: u64, stream: u64) -> Vec<(f64, f64)> {
    let mean = intensity * side * side;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hash_words(seed, &[STREAM_POISSON_COUNT, stream]));
    let count = Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64;
    (0..count)
        .map(|i| {
            let x = unit_open(hash_words(seed, &[STREAM_POISSON_POINT, stream, i, 0]));
            let y = unit_open(hash_words(seed, &[STREAM_POISSON_POINT, stream, i, 1]));
            (x * side, y * side)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_examples() {
        assert_eq!(sample_pareto2(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(sample_pareto2(0.75, 1.0).unwrap(), 2.0);
        assert!((sample_pareto2(0.99, 1.0).unwrap() - 10.0).abs() < 1e-12);
        assert!(sample_pareto2(1.0, 1.0).is_err());
        assert!(sample_pareto2(-0.1, 1.0).is_err());
        assert!(sample_pareto2(0.5, 0.5).is_err());
    }

    #[test]
    fn pareto_tail_is_exact() {
        // P(X > t) = P(u > 1 - 1/t^2); at u = 1 - 1/t^2 the draw equals t
        for t in [1.5f64, 2.0, 4.0, 8.0, 100.0] {
            let u = 1.0 - 1.0 / (t * t);
            assert!((sample_pareto2(u, 1.0).unwrap() - t).abs() < 1e-9 * t);
        }
    }

    #[test]
    fn logcorrected_examples() {
        assert_eq!(sample_logcorrected(0.0, 1.2, 1).unwrap(), 1.0);
        let x = sample_logcorrected(0.5, 1.2, 1).unwrap();
        // root of x^2 (1 + log2 x)^1.2 = 2, computed independently at 40 digits
        assert!((x - 1.217_370_891_098_006).abs() < 1e-11);
        assert!((logcorrected_tail(x, 1.2, 1) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn logcorrected_rejects_bad_beta() {
        assert!(sample_logcorrected(0.3, 1.0, 1).is_err());
        assert!(sample_logcorrected(0.3, 1.5, 1).is_err());
        assert!(sample_logcorrected(0.3, 1.9, 2).is_ok());
    }

    #[test]
    fn scale_examples() {
        let n = 1024u64;
        let nf = n as f64;
        assert_eq!(scale_of(1.5 * nf, n).unwrap(), Some(0));
        assert_eq!(scale_of(0.75 * nf, n).unwrap(), Some(1));
        for k in 0..8 {
            assert_eq!(scale_of(nf / 2f64.powi(k), n).unwrap(), Some(k + 1));
        }
        assert_eq!(scale_of(1.0, n).unwrap(), None);
        assert_eq!(scale_of(1.5, n).unwrap(), Some(10));
        assert_eq!(scale_of(3.0 * nf, n).unwrap(), Some(-1));
        assert!(scale_of(0.0, n).is_err());
        assert!(scale_of(-2.0, n).is_err());
    }

    #[test]
    fn spec_json_schema() {
        let json = r#"{"kind":"iid-logcorrected","n":64,"d":1,"seed":3,"params":{"t0":1.0,"beta":1.2}}"#;
        let spec: EnvironmentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, EnvironmentKind::IidLogCorrected);
        assert_eq!(spec.params.beta, Some(1.2));
        let back: EnvironmentSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let minimal: EnvironmentSpec =
            serde_json::from_str(r#"{"kind":"brw","n":8,"seed":1}"#).unwrap();
        assert_eq!(minimal.d, 1);
        assert_eq!(minimal.params.t0, 1.0);
        assert!(serde_json::from_str::<EnvironmentSpec>(r#"{"kind":"brw","n":8,"seed":1,"bogus":2}"#).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(EnvironmentSpec::new(EnvironmentKind::Brw, 12, 0).validate().is_err());
        assert!(EnvironmentSpec::new(EnvironmentKind::Brw, 16, 0).validate().is_ok());
        assert!(EnvironmentSpec::new(EnvironmentKind::IidLogCorrected, 16, 0)
            .validate()
            .is_err());
        let mut s = EnvironmentSpec::new(EnvironmentKind::IidPareto2, 16, 0);
        s.params.t0 = 0.5;
        assert!(s.validate().is_err());
        assert!(EnvironmentSpec::new(EnvironmentKind::PoissonLayers, 16, 0)
            .with_layer_count(6)
            .validate()
            .is_err());
    }

    #[test]
    fn brw_single_level() {
        let f = WeightField::new(EnvironmentSpec::new(EnvironmentKind::Brw, 1, 5)).unwrap();
        assert_eq!(f.side(), 1);
        assert_eq!(f.eval(&[0, 0]).unwrap(), f.brw_box_variable(0, &[0, 0]));
    }

    #[test]
    fn brw_covariance_levels_from_box_index() {
        // u=(0,0), v=(0,1) at n=4 share the level-0 and level-1 boxes only
        let m = 2u32;
        let shared = (0..=m)
            .filter(|&k| {
                let shift = m - k;
                (0u32 >> shift, 0u32 >> shift) == (0u32 >> shift, 1u32 >> shift)
            })
            .count();
        assert_eq!(shared, 2);
    }

    #[test]
    fn materialized_brw_is_bit_identical() {
        for d in [1u32, 2] {
            let spec = EnvironmentSpec::new(EnvironmentKind::Brw, 8, 77).with_d(d);
            let lazy = WeightField::new(spec).unwrap();
            let dense = lazy.clone().materialized().unwrap();
            let side = lazy.side();
            let mut v = vec![0u32; d as usize + 1];
            for idx in 0..(side as usize).pow(d + 1) {
                let mut r = idx;
                for c in v.iter_mut() {
                    *c = (r % side as usize) as u32;
                    r /= side as usize;
                }
                assert_eq!(lazy.weight(&v).to_bits(), dense.weight(&v).to_bits());
            }
        }
    }

    #[test]
    fn fast_and_general_paths_agree() {
        for kind in [EnvironmentKind::IidPareto2, EnvironmentKind::Brw] {
            let f = WeightField::new(EnvironmentSpec::new(kind, 16, 9)).unwrap();
            for (x, y) in [(0, 0), (3, 7), (15, 15)] {
                assert_eq!(f.weight2(x, y).to_bits(), f.weight(&[x, y]).to_bits());
            }
        }
        let f = WeightField::new(
            EnvironmentSpec::new(EnvironmentKind::IidLogCorrected, 16, 9).with_beta(1.2),
        )
        .unwrap();
        assert_eq!(f.weight2(4, 5).to_bits(), f.weight(&[4, 5]).to_bits());
    }

    #[test]
    fn eval_rejects_out_of_grid() {
        let f = WeightField::new(EnvironmentSpec::new(EnvironmentKind::IidPareto2, 4, 1)).unwrap();
        assert!(f.eval(&[4, 4]).is_ok());
        assert!(f.eval(&[5, 0]).is_err());
        let b = WeightField::new(EnvironmentSpec::new(EnvironmentKind::Brw, 4, 1)).unwrap();
        assert!(b.eval(&[4, 0]).is_err());
    }

    #[test]
    fn poisson_layer_shapes() {
        let p = gen_poisson_layers(1024, 1, 3).unwrap();
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0].weight, 1024.0);
        let p = gen_poisson_layers(64, 4, 3).unwrap();
        for (k, layer) in p.layers.iter().enumerate() {
            assert_eq!(layer.k as usize, k);
            assert_eq!(layer.weight, 64.0 / 2f64.powi(k as i32));
            assert!(layer
                .points
                .iter()
                .all(|&(x, y)| x > 0.0 && x < 64.0 && y > 0.0 && y < 64.0));
        }
        assert_eq!(p, gen_poisson_layers(64, 4, 3).unwrap());
        assert!(gen_poisson_layers(64, 8, 3).is_err());
    }
}
