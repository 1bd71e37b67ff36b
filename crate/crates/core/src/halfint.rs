//! Exact half-integer arithmetic for spin labels.
//!
//! A spin label J, K, M or a magnetic index m, i is stored as twice its value,
//! so all admissibility checks (triangle rules, index ranges) are exact
//! integer comparisons. Square roots of the associated integers only enter
//! at matrix-build time, in double precision.

use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    pub fn from_twice(twice: i64) -> Self {
        HalfInt { twice }
    }

    pub fn from_int(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    pub fn twice(self) -> i64 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn is_negative(self) -> bool {
        self.twice < 0
    }

    pub fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }

    /// Dimension 2J+1 of the spin-J representation. Panics for negative J.
    pub fn dim(self) -> usize {
        assert!(self.twice >= 0, "representation label must be non-negative");
        (self.twice + 1) as usize
    }

    /// True when `m` is an admissible magnetic index for spin `self`:
    /// |m| <= J and J - m is an integer.
    pub fn admits(self, m: HalfInt) -> bool {
        m.twice.abs() <= self.twice && (self.twice - m.twice) % 2 == 0
    }

    /// Magnetic indices J, J-1, ..., -J in descending order, matching the
    /// row/column ordering of all spin matrices in this crate.
    pub fn magnetic_indices(self) -> impl Iterator<Item = HalfInt> {
        let top = self.twice;
        (0..self.dim() as i64).map(move |k| HalfInt::from_twice(top - 2 * k))
    }

    /// Row index of `m` in the descending magnetic basis.
    pub fn index_of(self, m: HalfInt) -> usize {
        debug_assert!(self.admits(m));
        ((self.twice - m.twice) / 2) as usize
    }

    /// True when (self, k, m) can be coupled: |k - self| <= m <= k + self
    /// with self + k - m an integer.
    pub fn triangle(self, k: HalfInt, m: HalfInt) -> bool {
        m.twice >= (self.twice - k.twice).abs()
            && m.twice <= self.twice + k.twice
            && (self.twice + k.twice - m.twice) % 2 == 0
    }

    /// Parses "3/2", "1.5" or "2".
    pub fn parse(s: &str) -> Option<HalfInt> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().ok()?;
            let den: i64 = den.trim().parse().ok()?;
            return match den {
                1 => Some(HalfInt::from_int(num)),
                2 => Some(HalfInt::from_twice(num)),
                _ => None,
            };
        }
        if let Ok(n) = s.parse::<i64>() {
            return Some(HalfInt::from_int(n));
        }
        let x: f64 = s.parse().ok()?;
        let twice = (2.0 * x).round();
        if (2.0 * x - twice).abs() < 1e-9 {
            Some(HalfInt::from_twice(twice as i64))
        } else {
            None
        }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dim_and_indices() {
        let j = HalfInt::from_twice(3); // J = 3/2
        assert_eq!(j.dim(), 4);
        let ms: Vec<i64> = j.magnetic_indices().map(|m| m.twice()).collect();
        assert_eq!(ms, vec![3, 1, -1, -3]);
        assert_eq!(j.index_of(HalfInt::from_twice(-1)), 2);
        assert!(j.admits(HalfInt::from_twice(1)));
        assert!(!j.admits(HalfInt::from_twice(2)));
        assert!(!j.admits(HalfInt::from_twice(5)));
    }

    #[test]
    fn triangle_rule() {
        let h = HalfInt::HALF;
        assert!(h.triangle(h, HalfInt::ZERO));
        assert!(h.triangle(h, HalfInt::ONE));
        assert!(!h.triangle(h, HalfInt::HALF)); // J+K-M not integer
        assert!(!HalfInt::ONE.triangle(HalfInt::from_int(3), HalfInt::ONE));
    }

    #[test]
    fn parsing() {
        assert_eq!(HalfInt::parse("3/2"), Some(HalfInt::from_twice(3)));
        assert_eq!(HalfInt::parse("1.5"), Some(HalfInt::from_twice(3)));
        assert_eq!(HalfInt::parse("2"), Some(HalfInt::from_int(2)));
        assert_eq!(HalfInt::parse("0.3"), None);
        assert_eq!(HalfInt::parse("-1/2"), Some(HalfInt::from_twice(-1)));
    }

    #[test]
    fn display() {
        assert_eq!(HalfInt::from_twice(3).to_string(), "3/2");
        assert_eq!(HalfInt::from_int(2).to_string(), "2");
        assert_eq!(HalfInt::from_twice(-1).to_string(), "-1/2");
    }
}
