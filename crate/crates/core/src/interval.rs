//! Closed real intervals and the small amount of interval arithmetic needed by the
//! inclusion functions in [`crate::reach`].
//!
//! Rounding is round-to-nearest; enclosures are sound up to floating-point rounding,
//! which is orders of magnitude below the tolerances used by the containment checks.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    /// Builds an interval, swapping the endpoints if they arrive out of order.
    pub fn new(a: f64, b: f64) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn centered(mid: f64, radius: f64) -> Self {
        Interval::new(mid - radius, mid + radius)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Largest absolute value attained on the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Intersection; `None` when the intervals are disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Maximum deviation of any point in `self` from `x`.
    pub fn max_dev_from(&self, x: f64) -> f64 {
        (x - self.lo).abs().max((self.hi - x).abs())
    }

    pub fn scale(&self, c: f64) -> Interval {
        Interval::new(self.lo * c, self.hi * c)
    }

    pub fn square(&self) -> Interval {
        if self.lo >= 0.0 {
            Interval::new(self.lo * self.lo, self.hi * self.hi)
        } else if self.hi <= 0.0 {
            Interval::new(self.hi * self.hi, self.lo * self.lo)
        } else {
            Interval::new(0.0, self.mag() * self.mag())
        }
    }

    pub fn recip(&self) -> Interval {
        debug_assert!(
            self.lo > 0.0 || self.hi < 0.0,
            "reciprocal of interval containing zero"
        );
        Interval::new(1.0 / self.hi, 1.0 / self.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo - rhs.hi,
            hi: self.hi - rhs.lo,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl Div for Interval {
    type Output = Interval;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Interval) -> Interval {
        self * rhs.recip()
    }
}

/// Arithmetic shared by point and interval evaluation of the model's partial
/// derivatives, so one set of formulas yields both the Jacobian and its enclosure.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn square(self) -> Self;
    /// Smallest value represented.
    fn lower(self) -> f64;
    /// Largest value represented.
    fn upper(self) -> f64;
    fn finite(self) -> bool;
    /// Narrows an interval to `[lo, hi]` when they overlap; points pass through.
    fn meet(self, lo: f64, hi: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn square(self) -> Self {
        self * self
    }
    fn lower(self) -> f64 {
        self
    }
    fn upper(self) -> f64 {
        self
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn meet(self, _lo: f64, _hi: f64) -> Self {
        self
    }
}

impl Scalar for Interval {
    fn cst(x: f64) -> Self {
        Interval::point(x)
    }
    fn square(self) -> Self {
        Interval::square(&self)
    }
    fn lower(self) -> f64 {
        self.lo
    }
    fn upper(self) -> f64 {
        self.hi
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn meet(self, lo: f64, hi: f64) -> Self {
        self.intersect(&Interval { lo, hi }).unwrap_or(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_covers_sign_cases() {
        let a = Interval::new(-1.0, 2.0);
        let b = Interval::new(-3.0, 0.5);
        let p = a * b;
        assert_eq!(p, Interval::new(-6.0, 3.0));
    }

    #[test]
    fn square_of_straddling_interval_starts_at_zero() {
        assert_eq!(Interval::new(-2.0, 1.0).square(), Interval::new(0.0, 4.0));
    }

    #[test]
    fn subtraction_is_not_cancellative() {
        let a = Interval::new(1.0, 2.0);
        assert_eq!(a - a, Interval::new(-1.0, 1.0));
    }

    #[test]
    fn intersect_disjoint_is_none() {
        assert!(Interval::new(0.0, 1.0)
            .intersect(&Interval::new(2.0, 3.0))
            .is_none());
    }
}
