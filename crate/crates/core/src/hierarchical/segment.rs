//! Monte Carlo on the segment `[0, 2^K)` under the tie-broken dyadic metric.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::pmf::{g, ExcessPmf, Interval};
use crate::error::{Error, Result};
use crate::matching::{stable_match_view, Matching};
use crate::models::{
    sample_config_with, ColorRule, ConfigParams, ConfigView, MetricKind, PointConfig, RuleKind,
    BLUE, RED, SEGMENT_BITS,
};
use crate::rng::SeedStream;

pub const MAX_SEGMENT_LEVEL: u32 = 24;

/// Excess table of one segment, computed two ways.
#[derive(Clone, Debug)]
pub struct SegmentSample {
    pub levels: u32,
    pub config: PointConfig,
    pub matching: Matching,
    /// `recursion[k][m]`: `N_k(m)` by the `g` recursion from cells holding at
    /// most one point.
    pub recursion: Vec<Vec<i64>>,
    /// Same table read off the stable matching.
    pub from_matching: Vec<Vec<i64>>,
    /// Blue points left unmatched in the whole segment.
    pub unmatched_blue: u64,
}

impl SegmentSample {
    pub fn consistent(&self) -> bool {
        self.recursion == self.from_matching
    }

    /// `N_k(m) >= N_{k-1}(2m) + N_{k-1}(2m+1)` everywhere.
    pub fn superadditive(&self) -> bool {
        (1..self.recursion.len()).all(|k| {
            self.recursion[k]
                .iter()
                .enumerate()
                .all(|(m, &n)| n >= self.recursion[k - 1][2 * m] + self.recursion[k - 1][2 * m + 1])
        })
    }

    pub fn top_excess(&self) -> i64 {
        self.recursion[self.levels as usize][0]
    }
}

fn sign(color: u32) -> Result<i64> {
    match color {
        BLUE => Ok(1),
        RED => Ok(-1),
        c => Err(Error::InvalidParameter(format!(
            "segment colours must be red or blue, got {c}"
        ))),
    }
}

fn grid_index(x: f64, side: f64) -> Result<u64> {
    let u = libm::scalbn(x / side, SEGMENT_BITS as i32);
    if !(0.0..(1u64 << SEGMENT_BITS) as f64).contains(&u) || u.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coordinate {x} is not on the segment grid"
        )));
    }
    Ok(u as u64)
}

/// Excess of the points `idx` (sorted by grid index) sharing their top
/// bits, splitting on bit `bit - 1` downward.
fn sub_cell_excess(idx: &[usize], grid: &[u64], signs: &[i64], bit: u32) -> Result<i64> {
    match idx.len() {
        0 => Ok(0),
        1 => Ok(signs[idx[0]]),
        _ if bit == 0 => Err(Error::InvalidParameter(
            "coincident points on the segment".into(),
        )),
        _ => {
            let split = idx.partition_point(|&i| (grid[i] >> (bit - 1)) & 1 == 0);
            let a = sub_cell_excess(&idx[..split], grid, signs, bit - 1)?;
            let b = sub_cell_excess(&idx[split..], grid, signs, bit - 1)?;
            g(a, b)
        }
    }
}

/// Excess tables for a red/blue configuration on `[0, 2^levels)`.
pub fn segment_excess(config: &PointConfig, levels: u32) -> Result<SegmentSample> {
    if levels > MAX_SEGMENT_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "K = {levels} exceeds {MAX_SEGMENT_LEVEL}"
        )));
    }
    let side = libm::scalbn(1.0, levels as i32);
    if config.dimension != 1 || config.side != side {
        return Err(Error::InvalidParameter(format!(
            "expected a segment of length 2^{levels}"
        )));
    }
    let n = config.len();
    let grid: Vec<u64> = (0..n)
        .map(|i| grid_index(config.point(i)[0], side))
        .collect::<Result<_>>()?;
    let signs: Vec<i64> = config
        .colors()
        .iter()
        .map(|&c| sign(c))
        .collect::<Result<_>>()?;
    let unit_shift = SEGMENT_BITS - levels;
    let cells = 1usize << levels;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| grid[i]);
    let mut recursion = vec![vec![0i64; cells]];
    let mut start = 0;
    while start < n {
        let cell = grid[order[start]] >> unit_shift;
        let end = start + order[start..].partition_point(|&i| grid[i] >> unit_shift == cell);
        recursion[0][cell as usize] =
            sub_cell_excess(&order[start..end], &grid, &signs, unit_shift)?;
        start = end;
    }
    for k in 1..=levels as usize {
        let below = &recursion[k - 1];
        let row = (0..below.len() / 2)
            .map(|m| g(below[2 * m], below[2 * m + 1]))
            .collect::<Result<Vec<_>>>()?;
        recursion.push(row);
    }

    let view = ConfigView::new(
        config,
        &ColorRule::asymmetric(),
        MetricKind::HierarchicalRhoTilde,
    )?;
    let matching = stable_match_view(&view)?;
    let mut from_matching: Vec<Vec<i64>> = (0..=levels).map(|k| vec![0i64; cells >> k]).collect();
    for i in 0..n {
        let partner = matching.partner_of(i).map(|j| grid[j]);
        for (k, row) in from_matching.iter_mut().enumerate() {
            let shift = unit_shift + k as u32;
            let cell = grid[i] >> shift;
            if partner.is_none_or(|p| p >> shift != cell) {
                row[cell as usize] += signs[i];
            }
        }
    }

    let unmatched_blue = recursion[levels as usize][0].max(0) as u64;
    Ok(SegmentSample {
        levels,
        config: config.clone(),
        matching,
        recursion,
        from_matching,
        unmatched_blue,
    })
}

fn segment_params(lambda: f64, eps: f64, levels: u32, seed: u64) -> ConfigParams {
    ConfigParams {
        rate: lambda,
        dimension: 1,
        side: libm::scalbn(1.0, levels as i32),
        color_probs: vec![1.0 - eps, eps],
        rule: RuleKind::AsymmetricTwoType,
        metric: MetricKind::HierarchicalRhoTilde,
        seed,
    }
}

/// One Poisson segment of intensity `lambda` with blue fraction `eps`.
pub fn mc_segment(lambda: f64, eps: f64, levels: u32, seed: u64) -> Result<SegmentSample> {
    mc_segment_replicate(lambda, eps, levels, seed, 0)
}

pub fn mc_segment_replicate(
    lambda: f64,
    eps: f64,
    levels: u32,
    seed: u64,
    replicate: u64,
) -> Result<SegmentSample> {
    if levels > MAX_SEGMENT_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "K = {levels} exceeds {MAX_SEGMENT_LEVEL}"
        )));
    }
    let params = segment_params(lambda, eps, levels, seed);
    let mut rng = SeedStream::new(seed).rng("hier_segment", replicate);
    let config = sample_config_with(&params, &mut rng)?;
    segment_excess(&config, levels)
}

/// Aggregates over independent segments.
#[derive(Clone, Debug, Serialize)]
pub struct SegmentSummary {
    pub lambda: f64,
    pub eps: f64,
    pub levels: u32,
    pub replicates: u64,
    /// Counts of `N_K(0)`.
    pub histogram: BTreeMap<i64, u64>,
    /// Unmatched blue points per unit length.
    pub density: f64,
    pub density_se: f64,
    /// Samples where the recursion and the matching disagree.
    pub inconsistent: u64,
    /// Samples violating superadditivity somewhere.
    pub non_superadditive: u64,
    pub mean_points: f64,
}

struct Row {
    top: i64,
    unmatched: u64,
    consistent: bool,
    superadditive: bool,
    points: usize,
}

pub fn mc_segments(
    lambda: f64,
    eps: f64,
    levels: u32,
    replicates: u64,
    seed: u64,
) -> Result<SegmentSummary> {
    if replicates == 0 {
        return Err(Error::InvalidParameter(
            "need at least one replicate".into(),
        ));
    }
    let rows: Vec<Row> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = mc_segment_replicate(lambda, eps, levels, seed, r)?;
            Ok(Row {
                top: s.top_excess(),
                unmatched: s.unmatched_blue,
                consistent: s.consistent(),
                superadditive: s.superadditive(),
                points: s.config.len(),
            })
        })
        .collect::<Result<_>>()?;
    let len = libm::scalbn(1.0, levels as i32);
    let n = replicates as f64;
    let mut histogram = BTreeMap::new();
    for row in &rows {
        *histogram.entry(row.top).or_insert(0) += 1;
    }
    let densities: Vec<f64> = rows.iter().map(|r| r.unmatched as f64 / len).collect();
    let density = densities.iter().sum::<f64>() / n;
    let var = if replicates > 1 {
        densities.iter().map(|d| (d - density).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SegmentSummary {
        lambda,
        eps,
        levels,
        replicates,
        histogram,
        density,
        density_se: (var / n).sqrt(),
        inconsistent: rows.iter().filter(|r| !r.consistent).count() as u64,
        non_superadditive: rows.iter().filter(|r| !r.superadditive).count() as u64,
        mean_points: rows.iter().map(|r| r.points as f64).sum::<f64>() / n,
    })
}

/// Empirical frequency of one support point against the certified interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PmfComparison {
    pub value: String,
    pub empirical: f64,
    pub reference: Interval,
    pub se: f64,
    pub within: bool,
}

/// Compares `N_K(0)` frequencies with `exact` per support point and per
/// overflow parity. The standard error uses the reference probability.
pub fn compare_pmf(exact: &ExcessPmf, summary: &SegmentSummary) -> Result<Vec<PmfComparison>> {
    if exact.level() != summary.levels as i32 {
        return Err(Error::InvalidParameter(format!(
            "exact pmf is at level {}, samples at {}",
            exact.level(),
            summary.levels
        )));
    }
    let n_max = exact.n_max() as i64;
    let n = summary.replicates as f64;
    let mut counts = vec![0u64; exact.n_max() + 2];
    let mut over = [0u64; 2];
    for (&x, &c) in &summary.histogram {
        if x > n_max {
            over[(x & 1) as usize] += c;
        } else {
            counts[(x + 1) as usize] += c;
        }
    }
    let make = |value: String, count: u64, reference: Interval| {
        let empirical = count as f64 / n;
        let p = 0.5 * (reference.lo + reference.hi);
        let se = (p * (1.0 - p) / n).sqrt();
        PmfComparison {
            value,
            empirical,
            reference,
            se,
            within: empirical >= reference.lo - 3.0 * se && empirical <= reference.hi + 3.0 * se,
        }
    };
    let mut out: Vec<PmfComparison> = (-1..=n_max)
        .map(|x| make(x.to_string(), counts[(x + 1) as usize], exact.mass(x)))
        .collect();
    out.push(make(format!(">{n_max} even"), over[0], exact.overflow(0)));
    out.push(make(format!(">{n_max} odd"), over[1], exact.overflow(1)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::verify_stable;

    fn segment(points: &[(f64, u32)], levels: u32) -> PointConfig {
        let side = libm::scalbn(1.0, levels as i32);
        PointConfig::new(
            1,
            side,
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn red_blue_pair_matches() {
        let s = segment_excess(&segment(&[(0.25, RED), (2.5, BLUE)], 2), 2).unwrap();
        assert!(s.consistent());
        assert_eq!(s.top_excess(), 0);
        assert_eq!(s.unmatched_blue, 0);
    }

    #[test]
    fn two_blues_stay_unmatched() {
        let s = segment_excess(&segment(&[(0.25, BLUE), (0.75, BLUE)], 3), 3).unwrap();
        assert!(s.consistent());
        assert_eq!(s.top_excess(), 2);
        assert_eq!(s.unmatched_blue, 2);
        assert_eq!(s.matching.unmatched().len(), 2);
    }

    #[test]
    fn lone_red() {
        let s = segment_excess(&segment(&[(1.5, RED)], 1), 1).unwrap();
        assert_eq!(s.recursion, vec![vec![0, -1], vec![-1]]);
        assert_eq!(s.unmatched_blue, 0);
    }

    #[test]
    fn sampled_segments_agree() {
        for r in 0..20 {
            let s = mc_segment_replicate(1.0, 0.4, 8, 7, r).unwrap();
            assert!(s.consistent(), "replicate {r}");
            assert!(s.superadditive());
            let view = ConfigView::new(
                &s.config,
                &ColorRule::asymmetric(),
                MetricKind::HierarchicalRhoTilde,
            )
            .unwrap();
            assert!(verify_stable(&view, &s.matching).unwrap().is_stable());
            let blue_unmatched = s
                .matching
                .unmatched()
                .iter()
                .filter(|&&i| s.config.color(i) == BLUE)
                .count();
            assert_eq!(blue_unmatched as u64, s.unmatched_blue);
        }
    }

    #[test]
    fn rejects_off_grid_points() {
        assert!(segment_excess(&segment(&[(0.1, RED)], 2), 2).is_err());
        assert!(segment_excess(&segment(&[(0.125, RED)], 2), 2).is_ok());
        let cfg = PointConfig::new(1, 4.0, vec![1e-300], vec![RED]).unwrap();
        assert!(segment_excess(&cfg, 2).is_err());
        assert!(segment_excess(&segment(&[(0.5, RED)], 2), 3).is_err());
    }

    #[test]
    fn summary_is_deterministic() {
        let a = mc_segments(1.0, 0.3, 6, 50, 11).unwrap();
        let b = mc_segments(1.0, 0.3, 6, 50, 11).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.density.to_bits(), b.density.to_bits());
        assert_eq!((a.inconsistent, a.non_superadditive), (0, 0));
    }
}
