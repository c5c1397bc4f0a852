use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Currency amount in minor units (cents).
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

pub const MINOR_PER_MAJOR: i64 = 100;

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_major(units: i64) -> Self {
        Money(units * MINOR_PER_MAJOR)
    }

    pub const fn millions(m: i64) -> Self {
        Money::from_major(m * 1_000_000)
    }

    pub const fn minor(self) -> i64 {
        self.0
    }

    /// Value in minor units as a float, for statistics.
    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn major_f64(self) -> f64 {
        self.0 as f64 / MINOR_PER_MAJOR as f64
    }

    /// Rounds a float amount of minor units to the nearest cent.
    pub fn from_f64(minor: f64) -> Self {
        Money(minor.round() as i64)
    }

    pub fn clamp_non_negative(self) -> Self {
        Money(self.0.max(0))
    }

    /// Rounds to the nearest multiple of `grid`, never returning zero for a positive input.
    pub fn round_to_grid(self, grid: Money) -> Self {
        if grid.0 <= 0 {
            return self;
        }
        let q = (self.0 as f64 / grid.0 as f64).round() as i64;
        Money((q.max(1)) * grid.0)
    }

    pub fn scale(self, factor: f64) -> Self {
        Money::from_f64(self.0 as f64 * factor)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl fmt::Display for Money {
    /// `USD 1,234,567` for whole amounts, `USD 1,234.56` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let major = abs / MINOR_PER_MAJOR as u64;
        let cents = abs % MINOR_PER_MAJOR as u64;
        let digits = major.to_string();
        let mut grouped = String::with_capacity(digits.len() + digits.len() / 3);
        for (i, ch) in digits.chars().enumerate() {
            if i > 0 && (digits.len() - i).is_multiple_of(3) {
                grouped.push(',');
            }
            grouped.push(ch);
        }
        if cents == 0 {
            write!(f, "{sign}USD {grouped}")
        } else {
            write!(f, "{sign}USD {grouped}.{cents:02}")
        }
    }
}
