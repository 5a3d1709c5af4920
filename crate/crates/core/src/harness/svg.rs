use std::fmt::Write;

use crate::matching::Matching;
use crate::models::PointConfig;

const PALETTE: [&str; 6] = ["red", "blue", "green", "orange", "purple", "brown"];

fn color_name(c: u32) -> &'static str {
    PALETTE[c as usize % PALETTE.len()]
}

/// Scatter plot of a planar torus configuration: matched pairs joined by a
/// segment (minimum-image, clipped at the border), unmatched points drawn at
/// twice the radius. Colour 0 is red, colour 1 blue.
pub fn matching_svg(config: &PointConfig, m: &Matching, size: f64) -> String {
    assert_eq!(config.dimension, 2, "scatter plots are planar");
    let scale = size / config.side;
    let r = (size / (config.len().max(1) as f64).sqrt() / 8.0).clamp(0.8, 4.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="box"><rect width="{size}" height="{size}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{size}" height="{size}" fill="white" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<g clip-path="url(#box)" stroke="gray" stroke-width="{:.3}">"#,
        r / 2.0
    );
    for (a, b) in m.pairs() {
        let (pa, pb) = (config.point(a), config.point(b));
        let mut delta = [0.0; 2];
        for k in 0..2 {
            let mut dk = pb[k] - pa[k];
            if dk > config.side / 2.0 {
                dk -= config.side;
            } else if dk < -config.side / 2.0 {
                dk += config.side;
            }
            delta[k] = dk;
        }
        // drawn from both ends so wrapped pairs show on both sides
        for (p, sign) in [(pa, 1.0), (pb, -1.0)] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                p[0] * scale,
                size - p[1] * scale,
                (p[0] + sign * delta[0]) * scale,
                size - (p[1] + sign * delta[1]) * scale
            );
        }
    }
    let _ = writeln!(s, "</g>");
    for i in 0..config.len() {
        let p = config.point(i);
        let radius = if m.is_matched(i) { r } else { 2.0 * r };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{}"/>"#,
            p[0] * scale,
            size - p[1] * scale,
            radius,
            color_name(config.color(i))
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::stable_match;
    use crate::models::{build_instance, ColorRule, MetricKind};

    #[test]
    fn unmatched_points_are_larger() {
        let config =
            PointConfig::new(2, 10.0, vec![1.0, 1.0, 2.0, 1.0, 9.5, 9.5], vec![0, 1, 1]).unwrap();
        let inst = build_instance(
            &config,
            &ColorRule::asymmetric(),
            MetricKind::EuclideanTorus,
        )
        .unwrap();
        let m = stable_match(&inst);
        let svg = matching_svg(&config, &m, 100.0);
        assert_eq!(svg.matches("<line").count(), 2);
        assert_eq!(svg.matches("fill=\"red\"").count(), 1);
        assert_eq!(svg.matches("fill=\"blue\"").count(), 2);
        assert!(svg.contains(r#"r="4.000" fill="blue""#));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
