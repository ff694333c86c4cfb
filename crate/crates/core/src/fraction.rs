//! Exact non-negative ratios.
//!
//! Every count-based metric is carried as a reduced fraction so that
//! partitions (overlap by length, coverage by length) sum back to their
//! totals exactly. Decimal values only appear when a report is written.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_rational::Ratio;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u64>);

impl Fraction {
    pub const ZERO: Fraction = Fraction(Ratio::new_raw(0, 1));
    pub const ONE: Fraction = Fraction(Ratio::new_raw(1, 1));

    /// Builds `num / den` in lowest terms. Panics when `den == 0`.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "fraction with zero denominator");
        Fraction(Ratio::new(num, den))
    }

    pub fn from_counts(num: usize, den: usize) -> Self {
        Self::new(num as u64, den as u64)
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.numer() == 0
    }
}

impl Default for Fraction {
    fn default() -> Self {
        Fraction::ZERO
    }
}

impl Add for Fraction {
    type Output = Fraction;

    fn add(self, rhs: Fraction) -> Fraction {
        Fraction(self.0 + rhs.0)
    }
}

impl Sum for Fraction {
    fn sum<I: Iterator<Item = Fraction>>(iter: I) -> Fraction {
        iter.fold(Fraction::ZERO, |acc, f| acc + f)
    }
}

impl<'a> Sum<&'a Fraction> for Fraction {
    fn sum<I: Iterator<Item = &'a Fraction>>(iter: I) -> Fraction {
        iter.copied().sum()
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    value: f64,
    num: u64,
    den: u64,
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FractionRepr {
            value: self.to_f64(),
            num: self.numer(),
            den: self.denom(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = FractionRepr::deserialize(deserializer)?;
        if repr.den == 0 {
            return Err(D::Error::custom("fraction with zero denominator"));
        }
        Ok(Fraction::new(repr.num, repr.den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_sums_exactly() {
        let parts = [Fraction::new(1, 3), Fraction::new(1, 6), Fraction::new(2, 4)];
        assert_eq!(parts.iter().sum::<Fraction>(), Fraction::ONE);
        assert_eq!(Fraction::new(2, 4), Fraction::new(1, 2));
    }

    #[test]
    fn json_keeps_exact_value() {
        let f = Fraction::new(2, 3);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"num\":2") && json.contains("\"den\":3"));
        let back: Fraction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
