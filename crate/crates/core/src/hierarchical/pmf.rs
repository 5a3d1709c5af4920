//! Certified law of the excess `N` at one dyadic scale.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 64;
pub const DEFAULT_SLACK_BUDGET: f64 = 1e-2;

/// Combines the excesses of two sibling intervals.
pub fn g(a: i64, b: i64) -> Result<i64> {
    if a < -1 || b < -1 {
        return Err(Error::InvalidParameter(format!(
            "excess values must be >= -1, got ({a}, {b})"
        )));
    }
    Ok(combine(a, b))
}

#[inline]
fn combine(a: i64, b: i64) -> i64 {
    if a == -1 && b == -1 {
        0
    } else {
        a + b
    }
}

#[inline]
pub(crate) fn down(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.next_down()
    }
}

/// `a * b` rounded toward zero, for non-negative operands.
#[inline]
pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if a.mul_add(b, -p) < 0.0 {
        down(p)
    } else {
        p
    }
}

/// `a + b` rounded down.
#[inline]
pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn sum_down(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, add_down)
}

/// A closed probability interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersects(&self, other: &Interval, tol: f64) -> bool {
        self.lo <= other.hi + tol && other.lo <= self.hi + tol
    }
}

/// Interval pmf of the excess on `{-1, 0, ..., n_max}`, plus two overflow
/// atoms for values above `n_max` of known parity.
///
/// Stored as lower bounds only. The unassigned mass `slack >= 1 - sum(lo)`
/// may sit on any value, so `P(N = x) <= lo(x) + slack`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcessPmf {
    lo: Vec<f64>,
    overflow: [f64; 2],
    slack: f64,
    level: i32,
}

#[derive(Clone, Copy)]
enum Atom {
    Value(i64),
    Over(usize),
}

impl ExcessPmf {
    /// Exact pmf from `(value, mass)` pairs; values above `n_max` go to the
    /// overflow atoms.
    pub fn from_masses(masses: &[(i64, f64)], n_max: usize, level: i32) -> Result<Self> {
        let mut lo = vec![0.0; n_max + 2];
        let mut overflow = [0.0; 2];
        for &(x, p) in masses {
            if x < -1 || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("bad mass {p} at {x}")));
            }
            if x >= 0 && x as usize > n_max {
                overflow[(x & 1) as usize] += p;
            } else {
                lo[(x + 1) as usize] += p;
            }
        }
        let total: f64 = lo.iter().sum::<f64>() + overflow.iter().sum::<f64>();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("masses sum to {total}")));
        }
        Ok(Self::finish(lo, overflow, level))
    }

    pub fn point_mass(x: i64, n_max: usize, level: i32) -> Result<Self> {
        Self::from_masses(&[(x, 1.0)], n_max, level)
    }

    fn finish(lo: Vec<f64>, overflow: [f64; 2], level: i32) -> Self {
        let assigned = sum_down(lo.iter().chain(overflow.iter()).copied());
        let slack = if assigned >= 1.0 {
            0.0
        } else {
            -add_down(assigned, -1.0)
        };
        ExcessPmf {
            lo,
            overflow,
            slack,
            level,
        }
    }

    pub fn n_max(&self) -> usize {
        self.lo.len() - 2
    }

    /// Dyadic level: intervals of length `2^level`.
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn lower(&self, x: i64) -> f64 {
        if x < -1 || x > self.n_max() as i64 {
            0.0
        } else {
            self.lo[(x + 1) as usize]
        }
    }

    fn interval(&self, lo: f64) -> Interval {
        Interval::new(lo, (-add_down(-lo, -self.slack)).min(1.0))
    }

    /// Interval for `P(N = x)`, `-1 <= x <= n_max`.
    pub fn mass(&self, x: i64) -> Interval {
        self.interval(self.lower(x))
    }

    /// Interval for `P(N > n_max, N = parity mod 2)`.
    pub fn overflow(&self, parity: usize) -> Interval {
        self.interval(self.overflow[parity & 1])
    }

    /// Interval for `P(N > n_max)`.
    pub fn tail(&self) -> Interval {
        self.interval(sum_down(self.overflow))
    }

    fn atoms(&self) -> impl Iterator<Item = (Atom, f64)> + '_ {
        self.lo
            .iter()
            .enumerate()
            .map(|(i, &p)| (Atom::Value(i as i64 - 1), p))
            .chain(
                self.overflow
                    .iter()
                    .enumerate()
                    .map(|(q, &p)| (Atom::Over(q), p)),
            )
            .filter(|&(_, p)| p > 0.0)
    }
}

/// Initial law at intervals of length `2^-depth`, default support and budget.
pub fn base_pmf(lambda: f64, eps: f64, depth: u32) -> Result<ExcessPmf> {
    base_pmf_with(lambda, eps, depth, DEFAULT_N_MAX, DEFAULT_SLACK_BUDGET)
}

/// Exact masses for zero points (`N = 0`) and one point (`N = -1` red,
/// `N = 1` blue); the mass of two or more points is left as slack.
pub fn base_pmf_with(
    lambda: f64,
    eps: f64,
    depth: u32,
    n_max: usize,
    budget: f64,
) -> Result<ExcessPmf> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0, 1], got {eps}"
        )));
    }
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let mu = libm::scalbn(lambda, -(depth as i32));
    if mu * mu / 2.0 >= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "lambda * 2^-depth = {mu} is too coarse for a one-point base level"
        )));
    }
    // exp is faithful to within one ulp, two steps down is a lower bound
    let e = down(down((-mu).exp()));
    let one = mul_down(mu, e);
    let mut lo = vec![0.0; n_max + 2];
    lo[1] = e;
    // 1 - eps is exact for eps in [1/2, 1]
    let red = if eps >= 0.5 {
        1.0 - eps
    } else {
        down(1.0 - eps)
    };
    lo[0] = mul_down(one, red);
    lo[2] = mul_down(one, eps);
    let pmf = ExcessPmf::finish(lo, [0.0; 2], -(depth as i32));
    if pmf.slack > budget {
        return Err(Error::SlackBudget {
            slack: pmf.slack,
            budget,
        });
    }
    Ok(pmf)
}

/// Law at the next level: two independent siblings combined through `g`.
pub fn level_up(pmf: &ExcessPmf) -> ExcessPmf {
    let n_max = pmf.n_max() as i64;
    let mut lo = vec![0.0; pmf.lo.len()];
    let mut overflow = [0.0; 2];
    let atoms: Vec<(Atom, f64)> = pmf.atoms().collect();
    for &(a, pa) in &atoms {
        for &(b, pb) in &atoms {
            let p = mul_down(pa, pb);
            let target = match (a, b) {
                (Atom::Value(x), Atom::Value(y)) => {
                    let z = combine(x, y);
                    if z > n_max {
                        Some(Atom::Over((z & 1) as usize))
                    } else {
                        Some(Atom::Value(z))
                    }
                }
                // above n_max minus one: may land on n_max or above
                (Atom::Value(-1), Atom::Over(_)) | (Atom::Over(_), Atom::Value(-1)) => None,
                (Atom::Value(x), Atom::Over(q)) | (Atom::Over(q), Atom::Value(x)) => {
                    Some(Atom::Over((q + x as usize) & 1))
                }
                (Atom::Over(q), Atom::Over(r)) => Some(Atom::Over((q + r) & 1)),
            };
            match target {
                Some(Atom::Value(z)) => {
                    let slot = &mut lo[(z + 1) as usize];
                    *slot = add_down(*slot, p);
                }
                Some(Atom::Over(q)) => overflow[q] = add_down(overflow[q], p),
                None => {}
            }
        }
    }
    ExcessPmf::finish(lo, overflow, pmf.level + 1)
}

/// Certified pmfs from `2^-base_depth` up to `2^top_level`.
pub fn exact_chain(
    lambda: f64,
    eps: f64,
    base_depth: u32,
    top_level: i32,
    n_max: usize,
    budget: f64,
) -> Result<Vec<ExcessPmf>> {
    let base = base_pmf_with(lambda, eps, base_depth, n_max, budget)?;
    if top_level < base.level {
        return Err(Error::InvalidParameter(format!(
            "top level {top_level} is below the base level {}",
            base.level
        )));
    }
    let mut chain = vec![base];
    while chain.last().unwrap().level < top_level {
        let next = level_up(chain.last().unwrap());
        chain.push(next);
    }
    Ok(chain)
}

/// Parity and sign aggregates of one level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: i32,
    /// `P(N even)`
    pub beta: Interval,
    /// `P(N odd and positive)`
    pub gamma: Interval,
    /// `P(N even and positive)`
    pub delta: Interval,
    /// `P(N = -1)`
    pub minus_one: Interval,
    /// Lower bound on `E N`.
    pub mean_lower: f64,
    pub slack: f64,
}

pub fn stats(pmf: &ExcessPmf) -> LevelStats {
    let n_max = pmf.n_max() as i64;
    let pick =
        |keep: fn(i64) -> bool| sum_down((-1..=n_max).filter(|&x| keep(x)).map(|x| pmf.lower(x)));
    let beta = add_down(pick(|x| x % 2 == 0), pmf.overflow[0]);
    let gamma = add_down(pick(|x| x > 0 && x % 2 == 1), pmf.overflow[1]);
    let delta = add_down(pick(|x| x > 0 && x % 2 == 0), pmf.overflow[0]);

    let first_over = |parity: i64| {
        if (n_max + 1) % 2 == parity {
            n_max + 1
        } else {
            n_max + 2
        }
    };
    let positive = sum_down(
        (1..=n_max)
            .map(|x| mul_down(x as f64, pmf.lower(x)))
            .chain((0..2).map(|q| mul_down(first_over(q) as f64, pmf.overflow[q as usize]))),
    );
    // slack mass may all sit at -1
    let negative = -add_down(-pmf.lower(-1), -pmf.slack);
    let mean_lower = add_down(positive, -negative);

    LevelStats {
        level: pmf.level,
        beta: pmf.interval(beta),
        gamma: pmf.interval(gamma),
        delta: pmf.interval(delta),
        minus_one: pmf.mass(-1),
        mean_lower,
        slack: pmf.slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_definition() {
        assert_eq!(g(-1, -1).unwrap(), 0);
        assert_eq!(g(2, -1).unwrap(), 1);
        assert_eq!(g(-1, 0).unwrap(), -1);
        assert_eq!(g(0, 0).unwrap(), 0);
        assert_eq!(g(3, 4).unwrap(), 7);
        assert!(g(-2, 0).is_err());
    }

    #[test]
    fn base_example() {
        let pmf = base_pmf(0.1, 0.5, 0).unwrap();
        let m = pmf.mass(-1);
        let p = (-0.1f64).exp() * 0.1 * 0.5;
        let two = 1.0 - (-0.1f64).exp() * 1.1;
        assert!(m.lo <= p && p - m.lo < 1e-15);
        assert!((m.hi - (p + two)).abs() < 1e-12);
        assert!((p - 0.04524).abs() < 1e-5 && (two - 0.00468).abs() < 1e-5);
        assert!(matches!(
            base_pmf_with(0.1, 0.5, 0, 64, 1e-3),
            Err(Error::SlackBudget { .. })
        ));
        assert!(base_pmf(2.0, 0.5, 0).is_err());
    }

    #[test]
    fn base_limits() {
        let pmf = base_pmf(1.0, 0.3, 40).unwrap();
        assert!(pmf.mass(0).lo > 1.0 - 1e-11);
        assert!(pmf.slack() < 1e-15);
        let all_blue = base_pmf(1.0, 1.0, 10).unwrap();
        assert_eq!(all_blue.mass(-1).lo, 0.0);
    }

    #[test]
    fn level_up_examples() {
        let zero = ExcessPmf::point_mass(0, 8, 0).unwrap();
        assert_eq!(level_up(&zero).mass(0), Interval::point(1.0));
        let red = ExcessPmf::point_mass(-1, 8, 0).unwrap();
        let up_red = level_up(&red);
        assert_eq!(up_red.mass(0).lo, 1.0);
        assert_eq!(up_red.level(), 1);

        let uniform = ExcessPmf::from_masses(&[(-1, 0.5), (1, 0.5)], 8, 0).unwrap();
        let next = level_up(&uniform);
        assert!((next.mass(0).lo - 0.75).abs() < 1e-15);
        assert!((next.mass(2).lo - 0.25).abs() < 1e-15);
        assert!(next.slack() < 1e-14);
    }

    #[test]
    fn stats_examples() {
        let s = stats(&ExcessPmf::point_mass(0, 8, 0).unwrap());
        assert_eq!((s.beta.lo, s.gamma.lo, s.delta.lo), (1.0, 0.0, 0.0));

        let uniform = ExcessPmf::from_masses(&[(-1, 0.5), (1, 0.5)], 8, 0).unwrap();
        let s = stats(&uniform);
        // both support points are odd
        assert!(s.beta.lo == 0.0 && (s.gamma.lo - 0.5).abs() < 1e-15);
        assert_eq!(s.delta.lo, 0.0);
        assert!(s.mean_lower.abs() < 1e-12);

        let s = stats(&level_up(&uniform));
        assert!(
            (s.beta.lo - 1.0).abs() < 1e-14
                && s.gamma.lo == 0.0
                && (s.delta.lo - 0.25).abs() < 1e-14
        );
        assert!((s.mean_lower - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overflow_tracks_parity() {
        let pmf = ExcessPmf::from_masses(&[(3, 0.5), (2, 0.5)], 4, 0).unwrap();
        let next = level_up(&pmf);
        // 3+3=6 even, 2+2=4 in range, 3+2=5 odd
        assert!((next.overflow(0).lo - 0.25).abs() < 1e-15);
        assert!((next.overflow(1).lo - 0.5).abs() < 1e-15);
        assert!((next.mass(4).lo - 0.25).abs() < 1e-15);
        let s = stats(&next);
        assert!((s.mean_lower - (0.25 * 6.0 + 0.5 * 5.0 + 0.25 * 4.0)).abs() < 1e-12);

        // overflow against -1 has an unknown landing spot
        let mixed = ExcessPmf::from_masses(&[(5, 0.5), (-1, 0.5)], 4, 0).unwrap();
        let next = level_up(&mixed);
        assert!((next.slack() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chain_levels() {
        let chain = exact_chain(1.0, 0.3, 20, 3, 64, 1e-6).unwrap();
        assert_eq!(chain.first().unwrap().level(), -20);
        assert_eq!(chain.last().unwrap().level(), 3);
        assert!(exact_chain(1.0, 0.3, 20, -21, 64, 1e-6).is_err());
    }
}
