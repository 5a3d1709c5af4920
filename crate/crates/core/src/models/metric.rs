use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segment coordinates are multiples of `side * 2^-SEGMENT_BITS`. With 52
/// bits, `rho + |x - y|` is an integer multiple of the quantum below
/// `2^53` quanta, so the tie-broken metric is computed without rounding.
pub const SEGMENT_BITS: u32 = 52;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    EuclideanTorus,
    HierarchicalRho,
    HierarchicalRhoTilde,
}

impl MetricKind {
    pub fn is_hierarchical(self) -> bool {
        !matches!(self, MetricKind::EuclideanTorus)
    }
}

/// Minimum-image Euclidean distance on the torus `[0, side)^d`.
pub fn torus_distance(a: &[f64], b: &[f64], side: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            let d = d.min(side - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// The dyadic ultrametric `2^-sup{k : floor(2^k x) = floor(2^k y)}` on
/// `[0, inf)`. Exact: all scalings are by powers of two.
pub fn rho(x: f64, y: f64) -> f64 {
    debug_assert!(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite());
    if x == y {
        return 0.0;
    }
    let agree = |k: i32| libm::scalbn(x, k).floor() == libm::scalbn(y, k).floor();
    let top = x.max(y);
    // Start at a level where both floors are 0.
    let mut k = -(top.log2().floor() as i32) - 1;
    while libm::scalbn(top, k) >= 1.0 {
        k -= 1;
    }
    while agree(k + 1) {
        k += 1;
    }
    libm::scalbn(1.0, -k)
}

/// `rho(x, y) + |x - y|`, which orders pairs like `rho` but has no ties on
/// generic points.
pub fn rho_tilde(x: f64, y: f64) -> f64 {
    rho(x, y) + (x - y).abs()
}

/// Rounds `x in [0, side)` down to the segment grid; `side` must be a power
/// of two.
pub fn quantize(x: f64, side: f64) -> Result<f64> {
    check_dyadic_side(side)?;
    if !(0.0..side).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "coordinate {x} outside [0, {side})"
        )));
    }
    let quantum = libm::scalbn(side, -(SEGMENT_BITS as i32));
    Ok((x / quantum).floor() * quantum)
}

pub(crate) fn check_dyadic_side(side: f64) -> Result<()> {
    if side > 0.0 && side.is_finite() && libm::frexp(side).0 == 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "hierarchical window length must be a power of two, got {side}"
        )))
    }
}
