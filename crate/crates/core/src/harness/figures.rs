use std::fmt::Write;

use rand::Rng as _;

use super::svg::matching_svg;
use crate::error::Result;
use crate::matching::stable_match_view;
use crate::models::{ColorRule, ConfigView, MetricKind, PointConfig};
use crate::odes::{integrate, OdeSystem};
use crate::rng::SeedStream;

/// Uniform points on the planar torus with exact colour counts, at unit
/// intensity.
pub fn fixed_count_config(counts: &[usize], seed: u64, label: &str) -> Result<PointConfig> {
    let n: usize = counts.iter().sum();
    let side = (n.max(1) as f64).sqrt();
    let mut rng = SeedStream::new(seed).rng(label, 0);
    let mut coords = Vec::with_capacity(2 * n);
    let mut colors = Vec::with_capacity(n);
    for (c, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            coords.push(rng.random::<f64>() * side);
            coords.push(rng.random::<f64>() * side);
            colors.push(c as u32);
        }
    }
    PointConfig::new(2, side, coords, colors)
}

/// Asymmetric model with `red` red and `blue` blue points: SVG plus the
/// unmatched counts per colour.
pub fn scatter_panel(
    red: usize,
    blue: usize,
    seed: u64,
    label: &str,
) -> Result<(String, [usize; 2])> {
    let config = fixed_count_config(&[red, blue], seed, label)?;
    let view = ConfigView::new(
        &config,
        &ColorRule::asymmetric(),
        MetricKind::EuclideanTorus,
    )?;
    let m = stable_match_view(&view)?;
    let mut unmatched = [0; 2];
    for v in m.unmatched() {
        unmatched[config.color(v) as usize] += 1;
    }
    Ok((matching_svg(&config, &m, 600.0), unmatched))
}

/// Trajectory of `(r, b)` for the asymmetric system with `b(0) = eps`, on a
/// uniform grid of `step`, as CSV `t,r,b`.
pub fn trajectory_csv(eps: f64, t_max: f64, step: f64, tolerance: f64) -> Result<String> {
    let traj = integrate(&OdeSystem::asymmetric(eps)?, t_max, tolerance)?;
    let mut s = String::from("t,r,b\n");
    let steps = (t_max / step).round() as usize;
    for i in 0..=steps {
        let t = (i as f64 * step).min(t_max);
        let y = traj.at(t);
        let _ = writeln!(s, "{t},{},{}", y[0], y[1]);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panels_and_trajectory() {
        let (svg, unmatched) = scatter_panel(200, 100, 1, "scatter").unwrap();
        assert_eq!(svg.matches("<circle").count(), 300);
        assert!(unmatched[1] > 0);
        let csv = trajectory_csv(0.25, 2.0, 0.5, 1e-10).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0,0.75,0.25");
    }
}
