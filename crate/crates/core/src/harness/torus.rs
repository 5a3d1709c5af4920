use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{f_d, f_d_inverse};
use super::records::{mean_se, proportion, Provenance, ResultRecord};
use super::svg::matching_svg;
use crate::error::{Error, Result};
use crate::matching::{stable_match_view, verify_stable, Matching};
use crate::models::{
    palm_version, sample_config_with, ConfigParams, ConfigView, MetricKind, ModelFamily,
    PointConfig,
};
use crate::rng::SeedStream;

fn default_rate() -> f64 {
    1.0
}
fn default_replicates() -> usize {
    20
}
fn default_bins() -> usize {
    20
}
fn default_bin_width() -> f64 {
    0.25
}
fn default_cap() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    #[serde(flatten)]
    pub family: ModelFamily,
    pub dimension: usize,
    pub side: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Palm replicates (origin added); 0 skips the Palm estimator.
    #[serde(default)]
    pub palm_replicates: usize,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Bin width in rescaled units `omega_d r^d`.
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default)]
    pub svg: bool,
    #[serde(default = "default_cap")]
    pub max_expected_points: f64,
}

impl TorusConfig {
    pub fn new(family: ModelFamily, dimension: usize, side: f64) -> Self {
        TorusConfig {
            family,
            dimension,
            side,
            rate: 1.0,
            replicates: default_replicates(),
            palm_replicates: 0,
            histogram_bins: default_bins(),
            bin_width: default_bin_width(),
            svg: false,
            max_expected_points: default_cap(),
        }
    }

    pub fn params(&self, seed: u64) -> ConfigParams {
        ConfigParams {
            rate: self.rate,
            dimension: self.dimension,
            side: self.side,
            color_probs: self.family.probs(),
            rule: self.family.rule().kind(),
            metric: MetricKind::EuclideanTorus,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        self.params(0).validate()?;
        let expected = self.rate * self.side.powi(self.dimension as i32);
        if expected > self.max_expected_points {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} points exceeds the cap {}",
                self.max_expected_points
            )));
        }
        if self.replicates == 0 || self.histogram_bins == 0 || !(self.bin_width > 0.0) {
            return Err(Error::InvalidParameter(
                "need replicates, bins and a positive bin width".into(),
            ));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "{};d={};side={};rate={}",
            family_label(&self.family),
            self.dimension,
            self.side,
            self.rate
        )
    }
}

pub fn family_label(f: &ModelFamily) -> String {
    match f {
        ModelFamily::OneType => "model=one".into(),
        ModelFamily::Asymmetric { eps } => format!("model=asym;eps={eps}"),
        ModelFamily::Symmetric { probs } => {
            format!(
                "model=sym;probs={}",
                probs
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join("/")
            )
        }
    }
}

pub fn color_labels(f: &ModelFamily) -> Vec<String> {
    match f {
        ModelFamily::OneType => vec!["x".into()],
        ModelFamily::Asymmetric { .. } => vec!["r".into(), "b".into()],
        ModelFamily::Symmetric { probs } => (1..=probs.len()).map(|i| format!("x{i}")).collect(),
    }
}

/// Histogram bin of match distances; `t` is the rescaled weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceBin {
    pub t_lo: f64,
    pub t_hi: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub count: u64,
}

#[derive(Clone, Debug)]
pub struct TorusReport {
    pub records: Vec<ResultRecord>,
    pub histogram: Vec<DistanceBin>,
    pub svg: Option<String>,
    /// First replicate, kept for dumps and plots.
    pub sample: (PointConfig, Matching),
}

struct Replicate {
    points: usize,
    per_color: Vec<usize>,
    unmatched: Vec<usize>,
    bins: Vec<u64>,
    distance_sum: f64,
    weight_sum: f64,
    matched: usize,
    unstable: bool,
    sample: Option<(PointConfig, Matching)>,
}

/// Samples, matches and verifies; `None` match weight means unmatched.
fn match_config(config: &PointConfig, family: &ModelFamily) -> Result<(Matching, bool)> {
    let view = ConfigView::new(config, &family.rule(), MetricKind::EuclideanTorus)?;
    let m = stable_match_view(&view)?;
    let stable = verify_stable(&view, &m)?.is_stable();
    Ok((m, stable))
}

/// Palm replicates: colour of the added origin point and its match distance
/// (`None` if unmatched). Also reports how many matchings failed to verify.
pub fn palm_origin_outcomes(
    cfg: &TorusConfig,
    seed: u64,
) -> Result<(Vec<(u32, Option<f64>)>, usize)> {
    let params = cfg.params(seed);
    let stream = SeedStream::new(seed);
    let rows: Vec<(u32, Option<f64>, bool)> = (0..cfg.palm_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.rng("torus_palm", r);
            let base = sample_config_with(&params, &mut rng)?;
            let config = palm_version(&base, &params.color_probs, &mut rng)?;
            let (m, stable) = match_config(&config, &cfg.family)?;
            let view = ConfigView::new(&config, &cfg.family.rule(), MetricKind::EuclideanTorus)?;
            let dist = m.partner_of(0).map(|j| view.distance(0, j));
            Ok((config.color(0), dist, stable))
        })
        .collect::<Result<_>>()?;
    let unstable = rows.iter().filter(|r| !r.2).count();
    Ok((rows.into_iter().map(|(c, d, _)| (c, d)).collect(), unstable))
}

pub fn run_torus_experiment(cfg: &TorusConfig, seed: u64, sigma: f64) -> Result<TorusReport> {
    cfg.validate()?;
    let params = cfg.params(seed);
    let stream = SeedStream::new(seed);
    let d = cfg.dimension;
    let k = cfg.family.colors();
    let reps: Vec<Replicate> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.rng("torus", r);
            let config = sample_config_with(&params, &mut rng)?;
            let (m, stable) = match_config(&config, &cfg.family)?;
            let view = ConfigView::new(&config, &cfg.family.rule(), MetricKind::EuclideanTorus)?;
            let mut per_color = vec![0; k];
            let mut unmatched = vec![0; k];
            let mut bins = vec![0u64; cfg.histogram_bins + 1];
            let (mut distance_sum, mut weight_sum, mut matched) = (0.0, 0.0, 0);
            for i in 0..config.len() {
                let c = config.color(i) as usize;
                per_color[c] += 1;
                match m.partner_of(i) {
                    None => unmatched[c] += 1,
                    Some(j) => {
                        let dist = view.distance(i, j);
                        let t = f_d(dist, d);
                        distance_sum += dist;
                        weight_sum += t;
                        matched += 1;
                        bins[((t / cfg.bin_width) as usize).min(cfg.histogram_bins)] += 1;
                    }
                }
            }
            Ok(Replicate {
                points: config.len(),
                per_color,
                unmatched,
                bins,
                distance_sum,
                weight_sum,
                matched,
                unstable: !stable,
                sample: (r == 0).then_some((config, m)),
            })
        })
        .collect::<Result<_>>()?;

    let base = cfg.describe();
    let labels = color_labels(&cfg.family);
    let volume = cfg.side.powi(d as i32);
    let mut records = Vec::new();
    let mut spatial = Vec::new();
    for c in 0..k {
        let fractions: Vec<f64> = reps
            .iter()
            .map(|r| {
                if r.points == 0 {
                    0.0
                } else {
                    r.unmatched[c] as f64 / r.points as f64
                }
            })
            .collect();
        let (f, f_se) = mean_se(&fractions);
        records.push(ResultRecord::info(
            "torus/unmatched_fraction",
            format!("{base};color={}", labels[c]),
            f,
            f_se,
        ));
        let own: Vec<f64> = reps
            .iter()
            .map(|r| {
                if r.per_color[c] == 0 {
                    0.0
                } else {
                    r.unmatched[c] as f64 / r.per_color[c] as f64
                }
            })
            .collect();
        let (g, g_se) = mean_se(&own);
        records.push(ResultRecord::info(
            "torus/unmatched_fraction_of_color",
            format!("{base};color={}", labels[c]),
            g,
            g_se,
        ));
        let intensity: Vec<f64> = reps
            .iter()
            .map(|r| r.unmatched[c] as f64 / volume)
            .collect();
        let (s, s_se) = mean_se(&intensity);
        records.push(ResultRecord::info(
            "torus/unmatched_intensity_spatial",
            format!("{base};color={}", labels[c]),
            s,
            s_se,
        ));
        spatial.push((s, s_se));
    }

    let matched: usize = reps.iter().map(|r| r.matched).sum();
    let mean_r = reps.iter().map(|r| r.distance_sum).sum::<f64>() / matched.max(1) as f64;
    let mean_t = reps.iter().map(|r| r.weight_sum).sum::<f64>() / matched.max(1) as f64;
    records.push(
        ResultRecord::info("torus/mean_match_distance", base.clone(), mean_r, f64::NAN)
            .with_note("raw"),
    );
    records.push(
        ResultRecord::info("torus/mean_match_weight", base.clone(), mean_t, f64::NAN)
            .with_note("rescaled omega_d r^d"),
    );

    let mut unstable = reps.iter().filter(|r| r.unstable).count();

    if cfg.palm_replicates > 0 {
        let (palm, palm_unstable) = palm_origin_outcomes(cfg, seed)?;
        unstable += palm_unstable;
        for (c, &(s, s_se)) in spatial.iter().enumerate() {
            let hits = palm
                .iter()
                .filter(|&&(col, dist)| col as usize == c && dist.is_none())
                .count();
            let (p, p_se) = proportion(hits, palm.len());
            let (est, se) = (cfg.rate * p, cfg.rate * p_se);
            // a zero count has zero plug-in SE, so the comparison uses the
            // spread under the spatial value as well
            let q = (s / cfg.rate).clamp(0.0, 1.0);
            let null_se = cfg.rate * (q * (1.0 - q) / palm.len() as f64).sqrt();
            let params = format!("{base};color={}", labels[c]);
            records.push(ResultRecord::info(
                "torus/unmatched_intensity_palm",
                params.clone(),
                est,
                se,
            ));
            records.push(
                ResultRecord::two_sided(
                    "torus/palm_vs_spatial",
                    params,
                    est,
                    (se.max(null_se).powi(2) + s_se * s_se).sqrt(),
                    s,
                    Provenance::None,
                    sigma,
                    0.0,
                )
                .with_note("reference is the spatial estimate"),
            );
        }
    }

    records.push(ResultRecord::flag(
        "torus/verify_stable",
        base.clone(),
        unstable,
    ));
    if cfg.family == ModelFamily::OneType {
        let bad = reps
            .iter()
            .filter(|r| r.unmatched[0] != r.points % 2)
            .count();
        records.push(
            ResultRecord::flag("torus/one_type_parity", base.clone(), bad)
                .with_note("unmatched = n mod 2"),
        );
    }

    let mut counts = vec![0u64; cfg.histogram_bins + 1];
    for r in &reps {
        for (c, b) in counts.iter_mut().zip(&r.bins) {
            *c += b;
        }
    }
    let histogram = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let t_lo = i as f64 * cfg.bin_width;
            let t_hi = if i == cfg.histogram_bins {
                f64::INFINITY
            } else {
                t_lo + cfg.bin_width
            };
            DistanceBin {
                t_lo,
                t_hi,
                r_lo: f_d_inverse(t_lo, d),
                r_hi: f_d_inverse(t_hi, d),
                count,
            }
        })
        .collect();

    let sample = reps
        .into_iter()
        .find_map(|r| r.sample)
        .expect("replicate 0 is kept");
    let svg = (cfg.svg && d == 2).then(|| matching_svg(&sample.0, &sample.1, 600.0));
    Ok(TorusReport {
        records,
        histogram,
        svg,
        sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_type_parity_and_stability() {
        let mut cfg = TorusConfig::new(ModelFamily::OneType, 2, 8.0);
        cfg.replicates = 10;
        let rep = run_torus_experiment(&cfg, 3, 3.0).unwrap();
        assert!(rep.records.iter().all(|r| r.pass), "{:?}", rep.records);
        assert!(rep
            .records
            .iter()
            .any(|r| r.experiment == "torus/one_type_parity"));
        let total: u64 = rep.histogram.iter().map(|b| b.count).sum();
        assert!(total > 0);
    }

    #[test]
    fn asymmetric_svg_and_palm() {
        let mut cfg = TorusConfig::new(ModelFamily::Asymmetric { eps: 1.0 / 6.0 }, 2, 12.0);
        cfg.replicates = 30;
        cfg.palm_replicates = 300;
        cfg.svg = true;
        let rep = run_torus_experiment(&cfg, 9, 3.0).unwrap();
        let svg = rep.svg.unwrap();
        assert!(svg.contains("fill=\"red\"") && svg.contains("fill=\"blue\""));
        let b = rep
            .records
            .iter()
            .find(|r| {
                r.experiment == "torus/unmatched_fraction_of_color"
                    && r.parameters.ends_with("color=b")
            })
            .unwrap();
        assert!(b.estimate > 0.0);
        assert!(
            rep.records.iter().filter(|r| r.gated).all(|r| r.pass),
            "{:?}",
            rep.records
        );
    }

    #[test]
    fn rejects_huge_configs() {
        let cfg = TorusConfig::new(ModelFamily::OneType, 3, 1000.0);
        assert!(run_torus_experiment(&cfg, 0, 3.0).is_err());
    }
}
