//! One-sided checks of the beta/gamma/delta inequalities on certified stats.

use std::f64::consts::E;

use serde::Serialize;

use super::pmf::{Interval, LevelStats};

/// Outcome of one interval check. A straddling interval is inconclusive,
/// never a failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Inconclusive,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub level: i32,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub checks: Vec<Check>,
    /// First level whose gamma lower bound reaches 1/3.
    pub first_gamma_crossing: Option<i32>,
    /// `3e / eps`.
    pub k0_reference: f64,
    pub mean_lower_at_crossing: Option<f64>,
}

impl InequalityReport {
    pub fn violated(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Violated)
            .collect()
    }

    pub fn inconclusive(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Inconclusive)
            .collect()
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Holds)
    }

    pub fn status_of(&self, name: &str) -> Status {
        let mut out = Status::Holds;
        for c in self.checks.iter().filter(|c| c.name == name) {
            match c.status {
                Status::Violated => return Status::Violated,
                Status::Inconclusive => out = Status::Inconclusive,
                Status::Holds => {}
            }
        }
        out
    }
}

/// `beta^2 + (1 - beta)^2`.
pub fn beta_recursion(beta: f64) -> f64 {
    beta * beta + (1.0 - beta) * (1.0 - beta)
}

fn beta_recursion_interval(b: Interval) -> Interval {
    let lo = beta_recursion(0.5f64.clamp(b.lo, b.hi));
    let hi = beta_recursion(b.lo).max(beta_recursion(b.hi));
    Interval::new(lo, hi)
}

fn at_least(name: &'static str, level: i32, value: Interval, bound: Interval) -> Check {
    let status = if value.lo >= bound.hi {
        Status::Holds
    } else if value.hi < bound.lo {
        Status::Violated
    } else {
        Status::Inconclusive
    };
    Check {
        name,
        level,
        status,
        detail: format!(
            "[{:.6e}, {:.6e}] vs [{:.6e}, {:.6e}]",
            value.lo, value.hi, bound.lo, bound.hi
        ),
    }
}

fn consistent(name: &'static str, level: i32, value: Interval, predicted: Interval) -> Check {
    let status = if value.intersects(&predicted, 1e-12) {
        Status::Holds
    } else {
        Status::Violated
    };
    Check {
        name,
        level,
        status,
        detail: format!(
            "observed [{:.6e}, {:.6e}], recursion [{:.6e}, {:.6e}]",
            value.lo, value.hi, predicted.lo, predicted.hi
        ),
    }
}

/// Checks a chain of stats, consecutive levels, base level first.
pub fn verify_level_inequalities(stats: &[LevelStats], eps: f64) -> InequalityReport {
    let mut checks = Vec::new();
    let half = Interval::point(0.5);
    // parity of g(a, b) is the parity of a + b, so the true beta of every
    // level above the first is also inside the image of the previous one
    let beta_lower: Vec<f64> = stats
        .iter()
        .enumerate()
        .map(|(i, s)| match i {
            0 => s.beta.lo,
            _ => s.beta.lo.max(beta_recursion_interval(stats[i - 1].beta).lo),
        })
        .collect();
    for (i, s) in stats.iter().enumerate().skip(1) {
        let mut check = at_least("beta_at_least_half", s.level, s.beta, half);
        if check.status == Status::Inconclusive && beta_lower[i] >= 0.5 {
            check.status = Status::Holds;
            check.detail = format!(
                "beta^2 + (1 - beta)^2 >= 1/2 from level {}",
                stats[i - 1].level
            );
        }
        checks.push(check);
    }
    for (i, w) in stats.windows(2).enumerate() {
        let (cur, next) = (&w[0], &w[1]);
        checks.push(consistent(
            "beta_recursion",
            next.level,
            next.beta,
            beta_recursion_interval(cur.beta),
        ));

        let predicted = Interval::new(
            2.0 * cur.gamma.lo * cur.beta.lo + 2.0 * cur.delta.lo * cur.minus_one.lo,
            2.0 * cur.gamma.hi * cur.beta.hi + 2.0 * cur.delta.hi * cur.minus_one.hi,
        );
        checks.push(consistent(
            "gamma_recursion",
            next.level,
            next.gamma,
            predicted,
        ));

        // gamma' - gamma = gamma (2 beta - 1) + 2 delta P(N = -1) >= 0 once beta >= 1/2
        let mut mono = at_least("gamma_nondecreasing", next.level, next.gamma, cur.gamma);
        if mono.status == Status::Inconclusive && beta_lower[i] >= 0.5 {
            mono.status = Status::Holds;
            mono.detail = format!("beta >= 1/2 at level {}", cur.level);
        }
        checks.push(mono);

        let square = Interval::new(cur.gamma.lo * cur.gamma.lo, cur.gamma.hi * cur.gamma.hi);
        checks.push(at_least(
            "delta_at_least_gamma_squared",
            next.level,
            next.delta,
            square,
        ));
    }

    let crossing = stats.iter().find(|s| s.gamma.lo >= 1.0 / 3.0);
    for s in stats.iter().filter(|s| s.gamma.lo >= 1.0 / 3.0) {
        checks.push(at_least(
            "mean_at_least_sixth",
            s.level,
            Interval::point(s.mean_lower),
            Interval::point(1.0 / 6.0),
        ));
    }
    let k0_reference = 3.0 * E / eps;
    let k0 = match crossing {
        Some(s) if (s.level as f64) <= 2.0 * k0_reference => Status::Holds,
        Some(_) => Status::Violated,
        None => Status::Inconclusive,
    };
    checks.push(Check {
        name: "k0_order",
        level: crossing.map_or(stats.last().map_or(0, |s| s.level), |s| s.level),
        status: k0,
        detail: format!(
            "first crossing {:?}, 2 * 3e/eps = {:.2}",
            crossing.map(|s| s.level),
            2.0 * k0_reference
        ),
    });

    InequalityReport {
        checks,
        first_gamma_crossing: crossing.map(|s| s.level),
        k0_reference,
        mean_lower_at_crossing: crossing.map(|s| s.mean_lower),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchical::pmf::{exact_chain, stats};

    #[test]
    fn beta_map() {
        assert_eq!(beta_recursion(0.5), 0.5);
        assert!((beta_recursion(0.6) - 0.52).abs() < 1e-15);
        let i = beta_recursion_interval(Interval::new(0.4, 0.7));
        assert!((i.lo - 0.5).abs() < 1e-15 && (i.hi - 0.58).abs() < 1e-15);
        let i = beta_recursion_interval(Interval::new(0.6, 0.7));
        assert!((i.lo - 0.52).abs() < 1e-15);
    }

    #[test]
    fn certified_chain() {
        let chain = exact_chain(1.0, 0.3, 30, 10, 64, 1e-6).unwrap();
        let all: Vec<_> = chain.iter().map(stats).collect();
        let full = verify_level_inequalities(&all, 0.3);
        assert!(full.violated().is_empty(), "{:?}", full.violated());
        // below unit length the two-point slack swamps gamma^2
        assert!(
            full.inconclusive().iter().all(|c| c.level < 0),
            "{:?}",
            full.inconclusive()
        );

        let s: Vec<_> = all.into_iter().filter(|s| s.level >= 0).collect();
        let report = verify_level_inequalities(&s, 0.3);
        assert!(report.all_hold(), "{:?}", report.inconclusive());
        let k = report.first_gamma_crossing.unwrap();
        assert!((k as f64) < 2.0 * 3.0 * E / 0.3);
        assert!(report.mean_lower_at_crossing.unwrap() >= 1.0 / 6.0);
    }

    #[test]
    fn straddle_is_inconclusive() {
        let c = at_least("x", 0, Interval::new(0.4, 0.6), Interval::point(0.5));
        assert_eq!(c.status, Status::Inconclusive);
        let c = at_least("x", 0, Interval::new(0.1, 0.2), Interval::point(0.5));
        assert_eq!(c.status, Status::Violated);
    }
}
