//! Outward-rounded interval arithmetic and axis-aligned boxes.
//!
//! Rounding is done after the fact: every sum and product is computed in
//! round-to-nearest and then checked with an error-free transformation
//! (TwoSum for addition, FMA for multiplication). Only results that were
//! actually rounded are pushed one ulp outward, so exact computations such
//! as `[1,2] + [3,4]` stay tight.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Products smaller than this may have lost bits to gradual underflow, which
/// the FMA residual does not capture. They are widened unconditionally.
const UNDERFLOW_GUARD: f64 = 1.0e-290;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("axis {axis} cannot be split further")]
    Unsplittable { axis: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("axis {axis} out of range for a {dim}-dimensional box")]
    AxisOutOfRange { axis: usize, dim: usize },
}

/// Sum of `x` and `y` rounded toward negative infinity.
pub fn add_down(x: f64, y: f64) -> f64 {
    let s = x + y;
    if !s.is_finite() {
        if x.is_finite() && y.is_finite() && s > 0.0 {
            return f64::MAX;
        }
        return s;
    }
    if two_sum_residual(x, y, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// Sum of `x` and `y` rounded toward positive infinity.
pub fn add_up(x: f64, y: f64) -> f64 {
    let s = x + y;
    if !s.is_finite() {
        if x.is_finite() && y.is_finite() && s < 0.0 {
            return f64::MIN;
        }
        return s;
    }
    if two_sum_residual(x, y, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Product of `x` and `y` rounded toward negative infinity. `0 * inf` is 0.
pub fn mul_down(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let p = x * y;
    if !p.is_finite() {
        if x.is_finite() && y.is_finite() && p > 0.0 {
            return f64::MAX;
        }
        return p;
    }
    if p.abs() < UNDERFLOW_GUARD {
        return p.next_down();
    }
    if x.mul_add(y, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

/// Product of `x` and `y` rounded toward positive infinity. `0 * inf` is 0.
pub fn mul_up(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let p = x * y;
    if !p.is_finite() {
        if x.is_finite() && y.is_finite() && p < 0.0 {
            return f64::MIN;
        }
        return p;
    }
    if p.abs() < UNDERFLOW_GUARD {
        return p.next_up();
    }
    if x.mul_add(y, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

// Knuth's TwoSum: exact `x + y - s` for finite operands.
#[inline]
fn two_sum_residual(x: f64, y: f64, s: f64) -> f64 {
    let yy = s - x;
    let xx = s - yy;
    (x - xx) + (y - yy)
}

/// A closed interval `[lo, hi]` of extended reals, or the empty set.
///
/// Endpoints are never NaN. The empty interval is its own state, tested by
/// [`Interval::is_empty`], and every operation maps empty input to empty
/// output.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    /// Builds `[lo, hi]`.
    ///
    /// Panics if an endpoint is NaN, if `lo > hi`, or if the interval would
    /// contain no real number (`[inf, inf]`). Use [`Interval::checked`] for
    /// untrusted input.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::checked(lo, hi).unwrap_or_else(|| panic!("invalid interval [{lo}, {hi}]"))
    }

    pub fn checked(lo: f64, hi: f64) -> Option<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
        {
            return None;
        }
        // normalise -0.0 so that equality and printing are predictable
        Some(Interval {
            lo: lo + 0.0,
            hi: hi + 0.0,
        })
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_bounded(&self) -> bool {
        !self.is_empty() && self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Width rounded up; 0 for the empty interval.
    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            add_up(self.hi, -self.lo)
        }
    }

    /// Midpoint computed without overflow. `None` when no representable value
    /// lies strictly between the endpoints, or when an endpoint is infinite.
    pub fn split_point(&self) -> Option<f64> {
        if !self.is_bounded() {
            return None;
        }
        let mid = 0.5 * self.lo + 0.5 * self.hi;
        (self.lo < mid && mid < self.hi).then_some(mid + 0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset(&self, other: &Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        if !self.intersects(other) {
            return Interval::EMPTY;
        }
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "[empty]")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        if self.is_empty() {
            return self;
        }
        Interval {
            lo: -self.hi + 0.0,
            hi: -self.lo + 0.0,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        if self.is_empty() || rhs.is_empty() {
            return Interval::EMPTY;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval { lo: lo + 0.0, hi: hi + 0.0 }
    }
}

/// An axis-aligned box: one interval per dimension.
///
/// Dimension names are owned by whoever owns the box (a quantifier, a
/// paving, a cache); the box itself is purely positional.
#[derive(Clone, PartialEq, Debug)]
pub struct IntervalBox {
    sides: Vec<Interval>,
}

impl IntervalBox {
    /// Panics on a zero-dimensional box.
    pub fn new(sides: Vec<Interval>) -> Self {
        assert!(!sides.is_empty(), "a box needs at least one dimension");
        IntervalBox { sides }
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Self {
        Self::new(bounds.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    #[inline]
    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }

    #[inline]
    pub fn side(&self, axis: usize) -> Interval {
        self.sides[axis]
    }

    pub fn set_side(&mut self, axis: usize, side: Interval) {
        self.sides[axis] = side;
    }

    pub fn is_empty(&self) -> bool {
        self.sides.iter().any(Interval::is_empty)
    }

    pub fn is_bounded(&self) -> bool {
        self.sides.iter().all(Interval::is_bounded)
    }

    /// Product of the side widths, rounded up. Infinite if the box is
    /// unbounded, 0 if it is empty or flat.
    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.sides
            .iter()
            .fold(1.0, |acc, side| mul_up(acc, side.width()))
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        self.sides.iter().map(Interval::lo).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.sides
            .iter()
            .map(|s| 0.5 * s.lo() + 0.5 * s.hi())
            .collect()
    }

    /// Index of the widest side, ties going to the lowest index.
    pub fn widest_axis(&self) -> usize {
        let mut best = 0;
        let mut best_width = self.sides[0].width();
        for (axis, side) in self.sides.iter().enumerate().skip(1) {
            let w = side.width();
            if w > best_width {
                best = axis;
                best_width = w;
            }
        }
        best
    }

    pub fn max_width(&self) -> f64 {
        self.sides.iter().map(Interval::width).fold(0.0, f64::max)
    }

    /// Splits the box at the midpoint of `axis`. The shared hyperplane
    /// belongs to both children.
    pub fn bisect(&self, axis: usize) -> Result<(IntervalBox, IntervalBox), IntervalError> {
        let side = self
            .sides
            .get(axis)
            .ok_or(IntervalError::AxisOutOfRange {
                axis,
                dim: self.dim(),
            })?;
        let mid = side
            .split_point()
            .ok_or(IntervalError::Unsplittable { axis })?;
        Ok(self.split_at(axis, mid))
    }

    /// Splits at a caller-supplied coordinate, which must lie inside the side.
    pub(crate) fn split_at(&self, axis: usize, mid: f64) -> (IntervalBox, IntervalBox) {
        let side = self.sides[axis];
        let mut left = self.clone();
        let mut right = self.clone();
        left.sides[axis] = Interval::new(side.lo(), mid);
        right.sides[axis] = Interval::new(mid, side.hi());
        (left, right)
    }

    fn check_dim(&self, other: &IntervalBox) -> Result<(), IntervalError> {
        if self.dim() != other.dim() {
            return Err(IntervalError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub fn hull(&self, other: &IntervalBox) -> Result<IntervalBox, IntervalError> {
        self.check_dim(other)?;
        Ok(IntervalBox {
            sides: self
                .sides
                .iter()
                .zip(&other.sides)
                .map(|(a, b)| a.hull(b))
                .collect(),
        })
    }

    /// Componentwise intersection; disjoint boxes give a box with at least one
    /// empty side (see [`IntervalBox::is_empty`]).
    pub fn intersect(&self, other: &IntervalBox) -> Result<IntervalBox, IntervalError> {
        self.check_dim(other)?;
        Ok(IntervalBox {
            sides: self
                .sides
                .iter()
                .zip(&other.sides)
                .map(|(a, b)| a.intersect(b))
                .collect(),
        })
    }

    pub fn is_subset(&self, other: &IntervalBox) -> Result<bool, IntervalError> {
        self.check_dim(other)?;
        Ok(self
            .sides
            .iter()
            .zip(&other.sides)
            .all(|(a, b)| a.is_subset(b)))
    }

    pub fn intersects(&self, other: &IntervalBox) -> Result<bool, IntervalError> {
        self.check_dim(other)?;
        Ok(self
            .sides
            .iter()
            .zip(&other.sides)
            .all(|(a, b)| a.intersects(b)))
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool, IntervalError> {
        if point.len() != self.dim() {
            return Err(IntervalError::DimensionMismatch {
                left: self.dim(),
                right: point.len(),
            });
        }
        Ok(self.sides.iter().zip(point).all(|(s, &x)| s.contains(x)))
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, side) in self.sides.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{side}")?;
        }
        Ok(())
    }
}
