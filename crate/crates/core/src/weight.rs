//! Edge weights: strictly positive reals plus a dedicated `+inf` sentinel
//! that marks the absence of an edge.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A weight in `(0, +inf]`.
///
/// `Weight::INFINITE` is the only way to obtain an infinite weight; the
/// checked constructor refuses non-finite input, so an overflowing
/// computation can never silently become "no edge".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight(f64);

impl Weight {
    pub const INFINITE: Weight = Weight(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Weight(value))
        } else {
            Err(Error::InvalidWeight(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// Applies a strictly increasing map to a finite weight; `+inf` stays `+inf`.
    pub fn map(self, f: impl Fn(f64) -> f64) -> Result<Self> {
        if self.is_finite() {
            Weight::new(f(self.0))
        } else {
            Ok(self)
        }
    }
}

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}
