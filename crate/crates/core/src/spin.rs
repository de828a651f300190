use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An SU(2) spin label, stored as `2j` so half-integers are exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Spin(u32);

impl Spin {
    pub const ZERO: Spin = Spin(0);
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub const fn from_twice(twice_j: u32) -> Self {
        Spin(twice_j)
    }

    /// `j` as an integer; panics on half-integers.
    pub fn integer(j: u32) -> Self {
        Spin(2 * j)
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Dimension of the representation, `2j + 1`.
    pub fn dim(self) -> u32 {
        self.0 + 1
    }

    /// `j(j+1)`, the Casimir.
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// All spins `0, 1/2, ..., max` in ascending order.
    pub fn range_to(max: Spin) -> impl Iterator<Item = Spin> {
        (0..=max.0).map(Spin)
    }

    /// Spins `lo, lo + 1/2, ..., hi`.
    pub fn range(lo: Spin, hi: Spin) -> impl Iterator<Item = Spin> {
        (lo.0..=hi.0).map(Spin)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl fmt::Debug for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Spin({self})")
    }
}

impl FromStr for Spin {
    type Err = Error;

    /// Accepts `"3/2"`, `"1"`, or decimal halves such as `"1.5"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || Error::Config(format!("not a spin label: {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            return match den.trim() {
                "2" => Ok(Spin(num)),
                "1" => Ok(Spin(2 * num)),
                _ => Err(bad()),
            };
        }
        if let Ok(j) = s.parse::<u32>() {
            return Ok(Spin(2 * j));
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        let twice = 2.0 * x;
        if x < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(bad());
        }
        Ok(Spin(twice.round() as u32))
    }
}

impl From<Spin> for String {
    fn from(s: Spin) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Spin {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}
