mod common;

use common::{all_matchings, brute_stable};
use proptest::prelude::*;

use stablematch::closure::{descending_closure, matched_within};
use stablematch::instance::WeightedInstance;
use stablematch::matching::{
    check_rescale_invariance, stable_match, stable_match_view, verify_stable, Matching,
};
use stablematch::models::{
    rho, rho_tilde, sample_config, torus_distance, ColorRule, ConfigParams, ConfigView, MetricKind,
    RuleKind, BLUE, RED,
};
use stablematch::odes::{integrate, OdeSystem};
use stablematch::pwit::{generate_descending_tree, root_match_weight};
use stablematch::weight::Weight;

fn rule_for(kind: u8, colors: &[u32]) -> ColorRule {
    match kind % 3 {
        0 => ColorRule::one_type(),
        1 => ColorRule::asymmetric(),
        _ => ColorRule::symmetric(colors.iter().copied().max().unwrap_or(0) as usize + 2).unwrap(),
    }
}

/// Random instance with distinct finite weights (a shuffled rank per pair),
/// incompatible colour pairs at infinity.
fn instance() -> impl Strategy<Value = WeightedInstance> {
    (1usize..=10, any::<u8>())
        .prop_flat_map(|(n, kind)| {
            let pairs = n * (n - 1) / 2;
            (
                Just(n),
                Just(kind),
                prop::collection::vec(0u32..3, n),
                Just((1..=pairs.max(1)).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(n, kind, raw_colors, ranks)| {
            let colors: Vec<u32> = match kind % 3 {
                0 => vec![0; n],
                1 => raw_colors.iter().map(|c| c % 2).collect(),
                _ => raw_colors,
            };
            let rule = rule_for(kind, &colors);
            let mut next = ranks.into_iter();
            WeightedInstance::from_fn(n, |i, j| {
                let r = next.next().unwrap();
                if rule.compatible(colors[i], colors[j]) {
                    Weight::new(r as f64).unwrap()
                } else {
                    Weight::INFINITE
                }
            })
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unique_stable_matching_equals_engine(inst in instance()) {
        let stable: Vec<_> = all_matchings(&inst).into_iter().filter(|m| brute_stable(&inst, m)).collect();
        prop_assert_eq!(stable.len(), 1);
        let m = stable_match(&inst);
        let engine: Vec<Option<usize>> = (0..inst.len()).map(|x| m.partner_of(x)).collect();
        prop_assert_eq!(&engine, &stable[0]);
        prop_assert!(verify_stable(&inst, &m).unwrap().is_stable());
    }

    #[test]
    fn unmatched_pairs_are_incompatible(inst in instance()) {
        let m = stable_match(&inst);
        let free = m.unmatched();
        for (i, &a) in free.iter().enumerate() {
            for &b in &free[i + 1..] {
                prop_assert!(!inst.weight(a, b).is_finite());
            }
        }
    }

    #[test]
    fn locality(inst in instance(), radii in prop::collection::vec(0.5f64..50.0, 4)) {
        let m = stable_match(&inst);
        for x in 0..inst.len() {
            for &r in &radii {
                let c = descending_closure(&inst, x, r, 10_000).unwrap();
                prop_assert_eq!(matched_within(&c), m.match_weight(x).value() < r, "x={} r={}", x, r);
            }
        }
    }

    #[test]
    fn rescale_invariance(inst in instance(), a in 0.1f64..10.0, p in 0.2f64..3.0) {
        prop_assert!(check_rescale_invariance(&inst, |w| a * w.powf(p)).unwrap());
        prop_assert!(check_rescale_invariance(&inst, |w| w.ln_1p()).unwrap());
    }

    #[test]
    fn repeated_calls_agree(inst in instance()) {
        let a = stable_match(&inst);
        let b = stable_match(&inst);
        prop_assert_eq!(a.partners(), b.partners());
        let c = stable_match_view(&inst).unwrap();
        prop_assert_eq!(c.partners(), a.partners());
    }

    #[test]
    fn torus_metric_axioms(
        d in 1usize..4,
        side in 0.5f64..20.0,
        raw in prop::collection::vec(0.0f64..1.0, 9),
    ) {
        let pt = |k: usize| (0..d).map(|a| raw[3 * k + a] * side).collect::<Vec<f64>>();
        let (x, y, z) = (pt(0), pt(1), pt(2));
        let dxy = torus_distance(&x, &y, side);
        prop_assert_eq!(torus_distance(&x, &x, side), 0.0);
        prop_assert_eq!(dxy, torus_distance(&y, &x, side));
        prop_assert!(dxy <= torus_distance(&x, &z, side) + torus_distance(&z, &y, side) + 1e-12);
        prop_assert!(dxy <= side * (d as f64).sqrt() / 2.0 + 1e-12);
    }

    #[test]
    fn rho_is_an_ultrametric(x in 0.0f64..64.0, y in 0.0f64..64.0, z in 0.0f64..64.0) {
        prop_assert_eq!(rho(x, y), rho(y, x));
        prop_assert!(rho(x, z) <= rho(x, y).max(rho(y, z)));
        if x != y {
            prop_assert!((x - y).abs() < rho(x, y));
        }
    }

    #[test]
    fn rho_tilde_orders_like_rho(q in prop::collection::vec(0.0f64..8.0, 4)) {
        let (u, v, x, y) = (q[0], q[1], q[2], q[3]);
        if rho_tilde(u, v) <= rho_tilde(x, y) {
            prop_assert!(rho(u, v) <= rho(x, y));
        }
    }

    #[test]
    fn rho_tilde_stable_is_rho_stable(seed in any::<u64>(), eps in 0.1f64..0.9) {
        let params = ConfigParams {
            rate: 1.0,
            dimension: 1,
            side: 32.0,
            color_probs: vec![1.0 - eps, eps],
            rule: RuleKind::AsymmetricTwoType,
            metric: MetricKind::HierarchicalRhoTilde,
            seed,
        };
        let config = sample_config(&params).unwrap();
        let rule = ColorRule::asymmetric();
        let tilde = ConfigView::new(&config, &rule, MetricKind::HierarchicalRhoTilde).unwrap();
        let m = stable_match_view(&tilde).unwrap();
        let plain = ConfigView::new(&config, &rule, MetricKind::HierarchicalRho).unwrap();
        let same = Matching::from_pairs(&plain, &m.pairs()).unwrap();
        prop_assert!(verify_stable(&plain, &same).unwrap().is_stable());
    }

    #[test]
    fn asymmetric_mass_balance(seed in any::<u64>(), eps in 0.05f64..0.95) {
        let params = ConfigParams {
            rate: 1.0,
            dimension: 2,
            side: 12.0,
            color_probs: vec![1.0 - eps, eps],
            rule: RuleKind::AsymmetricTwoType,
            metric: MetricKind::EuclideanTorus,
            seed,
        };
        let config = sample_config(&params).unwrap();
        let view = ConfigView::new(&config, &ColorRule::asymmetric(), MetricKind::EuclideanTorus).unwrap();
        let m = stable_match_view(&view).unwrap();
        let cross = |from: u32, to: u32| {
            (0..config.len())
                .filter(|&i| config.color(i) == from && m.partner_of(i).is_some_and(|j| config.color(j) == to))
                .count()
        };
        prop_assert_eq!(cross(RED, BLUE), cross(BLUE, RED));
        prop_assert_eq!(cross(BLUE, BLUE), 0);
        prop_assert!(verify_stable(&view, &m).unwrap().is_stable());
    }

    #[test]
    fn pwit_root_match_survives_extension(key in any::<u64>(), t1 in 0.2f64..2.0, extra in 0.1f64..1.5) {
        let probs = [0.7, 0.3];
        let rule = ColorRule::asymmetric();
        let small = generate_descending_tree(t1, &probs, key, 1_000_000).unwrap();
        let big = generate_descending_tree(t1 + extra, &probs, key, 1_000_000).unwrap();
        if let Some(w) = root_match_weight(&small, &rule) {
            prop_assert_eq!(root_match_weight(&big, &rule), Some(w));
        } else if let Some(w) = root_match_weight(&big, &rule) {
            prop_assert!(w >= t1);
        }
    }

    #[test]
    fn asymmetric_ode_structure(eps in 0.05f64..0.95) {
        let traj = integrate(&OdeSystem::asymmetric(eps).unwrap(), 10.0, 1e-9).unwrap();
        let mut gap = f64::NEG_INFINITY;
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let (r, b) = (y[0], y[1]);
            prop_assert!(b - r >= gap - 1e-12);
            gap = b - r;
            if *t > 0.0 {
                prop_assert!(r < 1.0 / (1.0 + t));
            }
        }
    }

    #[test]
    fn symmetric_ode_keeps_order(raw in prop::collection::vec(0.05f64..1.0, 2..5)) {
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let traj = integrate(&OdeSystem::symmetric(probs.clone()).unwrap(), 5.0, 1e-9).unwrap();
        for y in &traj.states {
            for i in 0..probs.len() {
                for j in 0..probs.len() {
                    if probs[j] < probs[i] {
                        prop_assert!(y[j] < y[i]);
                    }
                }
            }
        }
    }
}
