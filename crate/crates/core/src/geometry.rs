//! Rectangles, slopes and cylinders in the plane, with lattice counting and
//! checkers for the slope and cancellation inequalities used by the
//! multi-scale construction.
//!
//! Cylinder membership is measured relative to the rectangle's lower-left
//! corner: a point `p` of `Rect(a, b)` is in `Cyl_r` when
//! `|(p2 − a2) − Slope·(p1 − a1)| ≤ r (b2 − a2)`.

use crate::error::{domain, Error, Result};

/// Comparison tolerance for floating-point geometry.
pub const GEOM_TOL: f64 = 1e-9;

pub type Point = [f64; 2];

/// `a ≺ b`: strictly smaller in every coordinate.
#[inline]
pub fn strictly_below(a: Point, b: Point) -> bool {
    a[0] < b[0] && a[1] < b[1]
}

pub fn slope(a: Point, b: Point) -> Result<f64> {
    if !strictly_below(a, b) {
        return Err(domain(format!("slope needs a ≺ b, got {a:?} and {b:?}")));
    }
    Ok((b[1] - a[1]) / (b[0] - a[0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    a: Point,
    b: Point,
}

impl Rect {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if !strictly_below(a, b) {
            return Err(domain(format!("rectangle corners must satisfy a ≺ b, got {a:?}, {b:?}")));
        }
        Ok(Self { a, b })
    }

    pub fn from_lattice(a: [u32; 2], b: [u32; 2]) -> Result<Self> {
        Self::new([a[0] as f64, a[1] as f64], [b[0] as f64, b[1] as f64])
    }

    pub fn lower(&self) -> Point {
        self.a
    }

    pub fn upper(&self) -> Point {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b[0] - self.a[0]
    }

    pub fn height(&self) -> f64 {
        self.b[1] - self.a[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn slope(&self) -> f64 {
        self.height() / self.width()
    }

    pub fn max_side(&self) -> f64 {
        self.width().max(self.height())
    }

    /// Point at fraction `t ∈ [0, 1]` along the corner-to-corner diagonal.
    pub fn diagonal_point(&self, t: f64) -> Point {
        [
            self.a[0] + t * self.width(),
            self.a[1] + t * self.height(),
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = GEOM_TOL * (1.0 + self.max_side());
        p[0] >= self.a[0] - tol
            && p[0] <= self.b[0] + tol
            && p[1] >= self.a[1] - tol
            && p[1] <= self.b[1] + tol
    }

    /// The `i`-th (0-based) of `m` similar rectangles covering the diagonal.
    pub fn diagonal_piece(&self, i: u64, m: u64) -> Rect {
        let lo = self.diagonal_point(i as f64 / m as f64);
        let hi = if i + 1 == m {
            self.b
        } else {
            self.diagonal_point((i + 1) as f64 / m as f64)
        };
        Rect { a: lo, b: hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    rect: Rect,
    r: f64,
}

impl Cylinder {
    pub fn new(rect: Rect, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(domain(format!("cylinder width fraction {r} outside (0, 1)")));
        }
        Ok(Self { rect, r })
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `(2 − r) r |R|`.
    pub fn area(&self) -> f64 {
        (2.0 - self.r) * self.r * self.rect.area()
    }

    fn half_band(&self) -> f64 {
        self.r * self.rect.height()
    }

    fn tol(&self) -> f64 {
        GEOM_TOL * (1.0 + self.rect.max_side())
    }

    pub fn contains(&self, p: Point) -> bool {
        if !self.rect.contains(p) {
            return false;
        }
        let a = self.rect.a;
        let dev = (p[1] - a[1]) - self.rect.slope() * (p[0] - a[0]);
        dev.abs() <= self.half_band() + self.tol()
    }

    pub fn contains_lattice(&self, x: i64, y: i64) -> bool {
        self.contains([x as f64, y as f64])
    }

    /// Integer `y` range of cylinder points in column `x`, or `None`.
    pub fn column_range(&self, x: i64) -> Option<(i64, i64)> {
        let (a, b) = (self.rect.a, self.rect.b);
        let tol = self.tol();
        let xf = x as f64;
        if xf < a[0] - tol || xf > b[0] + tol {
            return None;
        }
        let center = a[1] + self.rect.slope() * (xf - a[0]);
        let lo = (center - self.half_band()).max(a[1]);
        let hi = (center + self.half_band()).min(b[1]);
        let lo = (lo - tol).ceil() as i64;
        let hi = (hi + tol).floor() as i64;
        (lo <= hi).then_some((lo, hi))
    }

    /// Integer column range of the bounding rectangle.
    pub fn column_span(&self) -> (i64, i64) {
        let tol = self.tol();
        (
            (self.rect.a[0] - tol).ceil() as i64,
            (self.rect.b[0] + tol).floor() as i64,
        )
    }
}

/// Largest side extent `lattice_count_in_cyl` will enumerate.
pub const LATTICE_COUNT_GUARD: f64 = 1e5;

/// Exact number of integer points in the cylinder.
pub fn lattice_count_in_cyl(c: &Cylinder) -> Result<u64> {
    if c.rect.max_side() > LATTICE_COUNT_GUARD {
        return Err(Error::Size(format!(
            "cylinder extent {} exceeds the enumeration guard {LATTICE_COUNT_GUARD}",
            c.rect.max_side()
        )));
    }
    let (x0, x1) = c.column_span();
    Ok((x0..=x1)
        .filter_map(|x| c.column_range(x))
        .map(|(lo, hi)| (hi - lo + 1) as u64)
        .sum())
}

/// Whether the lattice-count lower bound `|Cyl ∩ Z²| ≥ |Cyl| − 100·max side`
/// holds; `None` when the cylinder has no lattice point (hypothesis fails).
pub fn lattice_count_bound_holds(c: &Cylinder) -> Result<Option<bool>> {
    let count = lattice_count_in_cyl(c)?;
    if count == 0 {
        return Ok(None);
    }
    Ok(Some(count as f64 >= c.area() - 100.0 * c.rect.max_side()))
}

fn approx_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= GEOM_TOL * x.abs().max(y.abs()).max(1.0)
}

fn approx_ge(x: f64, y: f64) -> bool {
    x >= y - GEOM_TOL * x.abs().max(y.abs()).max(1.0)
}

/// Worst-case slope bound between points of two cylinders separated by a
/// larger similar rectangle.
///
/// Checks the hypotheses first (each violation is a domain error) and then
/// returns whether `1/(1+2r) ≤ Slope(v,w)/Slope(b,c) ≤ 1+2r`.
#[allow(clippy::too_many_arguments)]
pub fn check_slope_bound(
    a: Point,
    b: Point,
    c: Point,
    d: Point,
    r: f64,
    v: Point,
    w: Point,
) -> Result<bool> {
    let first = Rect::new(a, b)?;
    let middle = Rect::new(b, c)?;
    let last = Rect::new(c, d)?;
    if !approx_eq(first.slope(), middle.slope()) || !approx_eq(middle.slope(), last.slope()) {
        return Err(domain("the three rectangles must share one slope"));
    }
    for i in 0..2 {
        let mid = c[i] - b[i];
        if !approx_ge(mid, b[i] - a[i]) || !approx_ge(mid, d[i] - c[i]) {
            return Err(domain("the middle rectangle must be weakly the largest"));
        }
    }
    let cyl_first = Cylinder::new(first, r)?;
    let cyl_last = Cylinder::new(last, r)?;
    if !cyl_first.contains(v) {
        return Err(domain(format!("{v:?} is not in the first cylinder")));
    }
    if !cyl_last.contains(w) {
        return Err(domain(format!("{w:?} is not in the last cylinder")));
    }
    let ratio = slope(v, w)? / middle.slope();
    let bound = 1.0 + 2.0 * r;
    Ok(approx_ge(ratio, 1.0 / bound) && approx_ge(bound, ratio))
}

/// Both sides of `Σ sqrt(x_j y_j) ≥ (1 − δ²) sqrt(x y)`.
///
/// Every block ratio must satisfy `(1+δ)^-1 (y/x) ≤ y_j/x_j ≤ (1+δ)(y/x)`.
pub fn cancellation_gap(xs: &[f64], ys: &[f64], delta: f64) -> Result<(f64, f64)> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(domain("xs and ys must be non-empty and of equal length"));
    }
    if !(delta > 0.0) {
        return Err(domain("delta must be positive"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(domain("all entries must be positive"));
    }
    let x: f64 = xs.iter().sum();
    let y: f64 = ys.iter().sum();
    let base = y / x;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        let q = (yj / xj) / base;
        if !approx_ge(q, 1.0 / (1.0 + delta)) || !approx_ge(1.0 + delta, q) {
            return Err(domain(format!(
                "block {j} has ratio {q} outside [1/(1+δ), 1+δ] for δ = {delta}"
            )));
        }
    }
    let lhs = xs.iter().zip(ys).map(|(&xj, &yj)| (xj * yj).sqrt()).sum();
    Ok((lhs, (1.0 - delta * delta) * (x * y).sqrt()))
}
