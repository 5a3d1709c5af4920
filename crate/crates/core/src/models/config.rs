use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::metric::{check_dyadic_side, MetricKind, SEGMENT_BITS};
use super::rule::{ColorRule, RuleKind};
use crate::error::{Error, Result};
use crate::rng::{Rng, SeedStream};

/// Parameters of a coloured Poisson configuration; the config JSON schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigParams {
    pub rate: f64,
    pub dimension: usize,
    pub side: f64,
    pub color_probs: Vec<f64>,
    pub rule: RuleKind,
    pub metric: MetricKind,
    #[serde(default)]
    pub seed: u64,
}

impl ConfigParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate must be positive, got {}",
                self.rate
            )));
        }
        if self.dimension == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if !(self.side >= 0.0 && self.side.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "side must be non-negative, got {}",
                self.side
            )));
        }
        check_probability_vector(&self.color_probs)?;
        self.color_rule()?;
        if self.metric.is_hierarchical() {
            if self.dimension != 1 {
                return Err(Error::InvalidParameter(
                    "hierarchical metrics are defined on a segment (dimension 1)".into(),
                ));
            }
            if self.side > 0.0 {
                check_dyadic_side(self.side)?;
            }
        }
        Ok(())
    }

    pub fn color_rule(&self) -> Result<ColorRule> {
        ColorRule::from_kind(self.rule, self.color_probs.len())
    }

    /// Expected number of points, `rate * side^d`.
    pub fn expected_points(&self) -> f64 {
        self.rate * self.side.powi(self.dimension as i32)
    }
}

pub(crate) fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "not a probability vector: {p:?}"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

pub fn draw_color(rng: &mut Rng, probs: &[f64]) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    // rounding in the cumulative sum: fall back to the last colour with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

/// A finite coloured point set on the torus `[0, side)^d`, or on the segment
/// `[0, side)` for hierarchical metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfig {
    pub dimension: usize,
    pub side: f64,
    coords: Vec<f64>,
    colors: Vec<u32>,
    /// Point 0 is the added Palm point at the origin.
    pub palm_origin: bool,
}

impl PointConfig {
    pub fn new(dimension: usize, side: f64, coords: Vec<f64>, colors: Vec<u32>) -> Result<Self> {
        if dimension == 0 || coords.len() != dimension * colors.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not describe {} points in dimension {dimension}",
                coords.len(),
                colors.len()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !(0.0..side).contains(*x)) {
            return Err(Error::InvalidParameter(format!(
                "coordinate {x} outside [0, {side})"
            )));
        }
        Ok(PointConfig {
            dimension,
            side,
            coords,
            colors,
            palm_origin: false,
        })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    #[inline]
    pub fn color(&self, i: usize) -> u32 {
        self.colors[i]
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn count_color(&self, c: u32) -> usize {
        self.colors.iter().filter(|&&x| x == c).count()
    }
}

/// Samples a configuration with the generator derived from `params.seed`.
pub fn sample_config(params: &ConfigParams) -> Result<PointConfig> {
    let mut rng = SeedStream::new(params.seed).rng("config", 0);
    sample_config_with(params, &mut rng)
}

/// Poisson(`rate * side^d`) points, i.i.d. uniform positions and i.i.d.
/// colours. Hierarchical configurations are placed on the dyadic grid of
/// `side * 2^-52`.
pub fn sample_config_with(params: &ConfigParams, rng: &mut Rng) -> Result<PointConfig> {
    params.validate()?;
    let d = params.dimension;
    let mean = params.expected_points();
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let mut coords = Vec::with_capacity(n * d);
    let mut colors = Vec::with_capacity(n);
    let grid = (1u64 << SEGMENT_BITS) as f64;
    for _ in 0..n {
        if params.metric.is_hierarchical() {
            let u = rng.random_range(0..(1u64 << SEGMENT_BITS)) as f64;
            coords.push(u / grid * params.side);
        } else {
            for _ in 0..d {
                let x = rng.random::<f64>() * params.side;
                // guard the half-open interval against rounding up to `side`
                coords.push(if x < params.side { x } else { 0.0 });
            }
        }
        colors.push(draw_color(rng, &params.color_probs));
    }
    PointConfig::new(d, params.side, coords, colors)
}

/// Adds a point at the origin with an independently drawn colour, as point 0.
pub fn palm_version(
    config: &PointConfig,
    color_probs: &[f64],
    rng: &mut Rng,
) -> Result<PointConfig> {
    check_probability_vector(color_probs)?;
    let d = config.dimension;
    let mut coords = Vec::with_capacity(config.coords.len() + d);
    coords.extend(std::iter::repeat_n(0.0, d));
    coords.extend_from_slice(&config.coords);
    let mut colors = Vec::with_capacity(config.len() + 1);
    colors.push(draw_color(rng, color_probs));
    colors.extend_from_slice(&config.colors);
    let side = if config.side > 0.0 {
        config.side
    } else {
        f64::MIN_POSITIVE
    };
    Ok(PointConfig {
        dimension: d,
        side,
        coords,
        colors,
        palm_origin: true,
    })
}
