//! The availability ODEs of the three tree models, integrated with an
//! embedded Dormand-Prince 5(4) pair, plus their closed forms.
//!
//! * one type: `x' = -x^2`, `x(0) = 1`
//! * asymmetric: `r' = -r (r + b)`, `b' = -b r`, `r(0) = 1 - eps`, `b(0) = eps`
//! * symmetric: `x_i' = -x_i * sum_{j != i} x_j`, `x_i(0) = p_i`

use crate::error::{Error, Result};
use crate::models::ModelFamily;

/// One of the three systems, by colour model.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeSystem {
    family: ModelFamily,
}

impl OdeSystem {
    pub fn new(family: ModelFamily) -> Result<Self> {
        family.validate()?;
        Ok(OdeSystem { family })
    }

    pub fn one_type() -> Self {
        OdeSystem {
            family: ModelFamily::OneType,
        }
    }

    pub fn asymmetric(eps: f64) -> Result<Self> {
        Self::new(ModelFamily::Asymmetric { eps })
    }

    pub fn symmetric(probs: Vec<f64>) -> Result<Self> {
        Self::new(ModelFamily::Symmetric { probs })
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        self.family.colors()
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.family.probs()
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        match self.family {
            ModelFamily::OneType => dy[0] = -y[0] * y[0],
            ModelFamily::Asymmetric { .. } => {
                let (r, b) = (y[0], y[1]);
                dy[0] = -r * (r + b);
                dy[1] = -b * r;
            }
            ModelFamily::Symmetric { .. } => {
                let total: f64 = y.iter().sum();
                for (d, &x) in dy.iter_mut().zip(y) {
                    *d = -x * (total - x);
                }
            }
        }
    }

    /// Column names for trajectory dumps.
    pub fn component_names(&self) -> Vec<String> {
        match self.family {
            ModelFamily::OneType => vec!["x".into()],
            ModelFamily::Asymmetric { .. } => vec!["r".into(), "b".into()],
            ModelFamily::Symmetric { ref probs } => {
                (1..=probs.len()).map(|i| format!("x{i}")).collect()
            }
        }
    }
}

/// Solution on the accepted-step grid, with derivatives for cubic Hermite
/// interpolation between steps.
#[derive(Clone, Debug)]
pub struct OdeTrajectory {
    pub system: OdeSystem,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    derivatives: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest local error estimate of an accepted step.
    pub max_local_error: f64,
    /// Sum of local error estimates over accepted steps: a heuristic bound
    /// on the global error of this non-stiff, contracting system.
    pub error_estimate: f64,
}

impl OdeTrajectory {
    pub fn t_max(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory has at least one point")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one point")
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    /// State at time `t` in `[0, t_max]`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.t_max());
        let j = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p if p >= self.times.len() => return self.final_state().to_vec(),
            p => p - 1,
        };
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (0..self.system.dimension())
            .map(|i| {
                h00 * self.states[j][i]
                    + h10 * h * self.derivatives[j][i]
                    + h01 * self.states[j + 1][i]
                    + h11 * h * self.derivatives[j + 1][i]
            })
            .collect()
    }
}

// autonomous system, so the nodes c_i are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `system` on `[0, t_max]` with local error control at `tolerance`
/// (relative, with absolute floor `tolerance / 100`).
///
/// Steps that would leave the open positive orthant are rejected and
/// retried with a smaller step. Step growth is capped at a factor of 5 per
/// step and at `t_max / 100`.
pub fn integrate(system: &OdeSystem, t_max: f64, tolerance: f64) -> Result<OdeTrajectory> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let n = system.dimension();
    let atol = tolerance * 1e-2;
    let h_max = t_max / 100.0;

    let mut t = 0.0;
    let mut y = system.initial_state();
    let mut k = vec![vec![0.0; n]; 7];
    system.rhs(&y, &mut k[0]);

    let mut traj = OdeTrajectory {
        system: system.clone(),
        times: vec![0.0],
        states: vec![y.clone()],
        derivatives: vec![k[0].clone()],
        accepted_steps: 0,
        rejected_steps: 0,
        max_local_error: 0.0,
        error_estimate: 0.0,
    };

    let mut h = (tolerance.powf(0.2) * 0.1).min(h_max);
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    while t < t_max {
        if t + h > t_max {
            h = t_max - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let incr: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
                stage[i] = y[i] + h * incr;
            }
            system.rhs(&stage, &mut k[s]);
        }
        // stage 7 was evaluated at the fifth-order solution
        y_new.copy_from_slice(&stage);

        let mut err_norm: f64 = 0.0;
        let mut err_abs: f64 = 0.0;
        for i in 0..n {
            let e: f64 = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let scale = atol + tolerance * y[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max(e.abs() / scale);
            err_abs = err_abs.max(e.abs());
        }

        let positive = y_new.iter().all(|&v| v > 0.0 && v.is_finite());
        if positive && err_norm <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.derivatives.push(last);
            traj.accepted_steps += 1;
            traj.max_local_error = traj.max_local_error.max(err_abs);
            traj.error_estimate += err_abs;
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(h_max);
        } else {
            traj.rejected_steps += 1;
            h *= if positive {
                (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            if h < 1e-12 * t.max(1.0) {
                return Err(Error::Integration {
                    t,
                    reason: if positive {
                        "step size underflow".into()
                    } else {
                        "positivity lost at minimum step".into()
                    },
                });
            }
        }
    }
    Ok(traj)
}

/// `1 / (1 + t)`, the exact one-type solution.
pub fn closed_form_one_type(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t must be non-negative, got {t}"
        )));
    }
    Ok(1.0 / (1.0 + t))
}

/// `eps * e^(1 - 1/eps)`: limiting probability that the root is blue and
/// unmatched in the asymmetric model.
pub fn closed_form_b_infinity(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    Ok(eps * (1.0 - 1.0 / eps).exp())
}

fn check_two_value(p1: f64, p2: f64, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need k >= 2 colours, got {k}"
        )));
    }
    if !(p1 > p2 && p2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need p1 > p2 > 0, got p1 = {p1}, p2 = {p2}"
        )));
    }
    let total = p1 + (k - 1) as f64 * p2;
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "p1 + (k - 1) p2 = {total}, not 1"
        )));
    }
    Ok(())
}

/// `(p1 - p2)^(k-1) * p1^-(k-2)`: limit of `x_1` when `p_2 = ... = p_k < p_1`.
pub fn closed_form_x1_infinity(p1: f64, p2: f64, k: usize) -> Result<f64> {
    check_two_value(p1, p2, k)?;
    Ok((p1 - p2).powi(k as i32 - 1) * p1.powi(-(k as i32 - 2)))
}

/// The constant `c` in `x_2 = x_1 - c * x_1^((k-2)/(k-1))`.
pub fn two_value_constant(p1: f64, p2: f64, k: usize) -> Result<f64> {
    check_two_value(p1, p2, k)?;
    let e = (k as f64 - 2.0) / (k as f64 - 1.0);
    Ok((p1 - p2) * p1.powf(-e))
}

/// `x_2` predicted from `x_1` by the two-value exact solution.
pub fn two_value_x2(x1: f64, c: f64, k: usize) -> f64 {
    let e = (k as f64 - 2.0) / (k as f64 - 1.0);
    x1 - c * x1.powf(e)
}

/// For `p_1 = 1/k + (k-1) delta` and the rest equal: the exact unmatched
/// fraction `x_1(inf) / x_1(0)` and its small-`delta` asymptote
/// `k^(2(k-1)) delta^(k-1)`.
pub fn small_gap_asymptotic(k: usize, delta: f64) -> Result<(f64, f64)> {
    if k < 2 || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need k >= 2 and delta > 0, got k = {k}, delta = {delta}"
        )));
    }
    let kf = k as f64;
    let exact = (kf * kf * delta / (1.0 + kf * (kf - 1.0) * delta)).powi(k as i32 - 1);
    let asymptotic = kf.powi(2 * (k as i32 - 1)) * delta.powi(k as i32 - 1);
    Ok((exact, asymptotic))
}

/// A limit value read off a trajectory with a certified error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    /// The component's value at `t_max`.
    pub estimate: f64,
    /// `component(t_max) - component(inf)` lies in `[0, bound]` (plus solver
    /// error, which is included in `bound`).
    pub bound: f64,
    pub t_max: f64,
}

impl Plateau {
    /// Interval guaranteed to contain the limit.
    pub fn interval(&self) -> (f64, f64) {
        (
            (self.estimate - self.bound).max(0.0),
            self.estimate + self.bound,
        )
    }

    pub fn contains(&self, value: f64) -> bool {
        let (lo, hi) = self.interval();
        (lo..=hi).contains(&value)
    }
}

/// Reads the limit of `component` with the bound supplied by a dominating
/// quantity:
///
/// * every component decreases to a non-negative limit, so it is within its
///   own value of the limit;
/// * asymmetric `b`: `b - r` is non-decreasing and `r -> 0`, so
///   `b(t) - b(inf) <= r(t)`;
/// * symmetric `x_i`: `x_i - sum_{j != i} x_j` is non-decreasing, so
///   `x_i(t) - x_i(inf) <= sum_{j != i} x_j(t)`.
///
/// Fails if the bound exceeds `accuracy`.
pub fn plateau_detect(traj: &OdeTrajectory, component: usize, accuracy: f64) -> Result<Plateau> {
    let y = traj.final_state();
    if component >= y.len() {
        return Err(Error::InvalidParameter(format!("no component {component}")));
    }
    let own = y[component];
    let dominating = match traj.system.family {
        ModelFamily::OneType => own,
        ModelFamily::Asymmetric { .. } => y[0],
        ModelFamily::Symmetric { .. } => {
            let others: f64 = y
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != component)
                .map(|(_, v)| v)
                .sum();
            own.min(others)
        }
    };
    let bound = dominating + traj.error_estimate;
    if bound > accuracy {
        return Err(Error::InsufficientHorizon { bound, accuracy });
    }
    Ok(Plateau {
        estimate: own,
        bound,
        t_max: traj.t_max(),
    })
}

/// Integrates over horizons `t0, 4 t0, 16 t0, ...` up to `t_limit` until
/// [`plateau_detect`] certifies `component` to `accuracy`.
pub fn integrate_to_plateau(
    system: &OdeSystem,
    component: usize,
    accuracy: f64,
    tolerance: f64,
    t_limit: f64,
) -> Result<(OdeTrajectory, Plateau)> {
    let mut t = 100.0f64.min(t_limit);
    loop {
        let traj = integrate(system, t, tolerance)?;
        match plateau_detect(&traj, component, accuracy) {
            Ok(p) => return Ok((traj, p)),
            Err(Error::InsufficientHorizon { .. }) if t < t_limit => t = (t * 4.0).min(t_limit),
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_type_matches_closed_form() {
        let traj = integrate(&OdeSystem::one_type(), 10.0, 1e-9).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0] - 1.0 / (1.0 + t)).abs() < 1e-6);
        }
        assert!((traj.at(1.0)[0] - 0.5).abs() < 1e-6);
        for i in 0..=1000 {
            let t = i as f64 * 0.01;
            assert!((traj.at(t)[0] - 1.0 / (1.0 + t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_one_type(0.0).unwrap(), 1.0);
        assert_eq!(closed_form_one_type(1.0).unwrap(), 0.5);
        assert!((closed_form_one_type(9.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(closed_form_one_type(-1.0).is_err());

        assert!((closed_form_b_infinity(0.25).unwrap() - 0.012446767091965986).abs() < 1e-15);
        assert_eq!(closed_form_b_infinity(1.0).unwrap(), 1.0);
        assert!((closed_form_b_infinity(0.5).unwrap() - 0.18393972058572117).abs() < 1e-15);

        assert!((closed_form_x1_infinity(0.5, 0.25, 3).unwrap() - 0.125).abs() < 1e-15);
        assert!((closed_form_x1_infinity(0.75, 0.25, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(closed_form_x1_infinity(0.25, 0.75, 2).is_err());
        let near = closed_form_x1_infinity(0.5 + 1e-9, 0.5 - 1e-9, 2).unwrap();
        assert!(near < 1e-8);

        let (exact, asym) = small_gap_asymptotic(2, 0.01).unwrap();
        assert!((exact - 0.04 / 1.02).abs() < 1e-15);
        assert!((asym - 0.04).abs() < 1e-15);
        let (_, asym3) = small_gap_asymptotic(3, 0.001).unwrap();
        assert!((asym3 - 8.1e-5).abs() < 1e-18);
        let (e, a) = small_gap_asymptotic(4, 1e-7).unwrap();
        assert!((e / a - 1.0).abs() < 1e-5);
    }

    #[test]
    fn equal_leading_probabilities_stay_equal() {
        let traj = integrate(&OdeSystem::symmetric(vec![0.5, 0.5]).unwrap(), 50.0, 1e-9).unwrap();
        for s in &traj.states {
            assert_eq!(s[0], s[1]);
        }
    }

    #[test]
    fn asymmetric_structure() {
        let traj = integrate(&OdeSystem::asymmetric(0.25).unwrap(), 200.0, 1e-9).unwrap();
        let mut prev_gap = f64::NEG_INFINITY;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let (r, b) = (s[0], s[1]);
            assert!(r > 0.0 && b > 0.0);
            assert!(r < 1.0 / (1.0 + t) + 1e-12);
            assert!(b - r >= prev_gap - 1e-12);
            prev_gap = b - r;
        }
    }

    #[test]
    fn plateau_one_type_and_errors() {
        let traj = integrate(&OdeSystem::one_type(), 1e4, 1e-9).unwrap();
        let p = plateau_detect(&traj, 0, 1e-3).unwrap();
        assert!(p.contains(0.0));
        assert!((p.estimate - 1.0 / (1.0 + 1e4)).abs() < 1e-8);
        assert!(matches!(
            plateau_detect(&traj, 0, 1e-6),
            Err(Error::InsufficientHorizon { .. })
        ));
        assert!(plateau_detect(&traj, 1, 1.0).is_err());
    }

    #[test]
    fn plateau_asymmetric() {
        let traj = integrate(&OdeSystem::asymmetric(0.25).unwrap(), 1e4, 1e-10).unwrap();
        let p = plateau_detect(&traj, 1, 1e-4).unwrap();
        assert!(p.bound <= 1e-4);
        assert!(p.contains(closed_form_b_infinity(0.25).unwrap()));
    }

    #[test]
    fn plateau_search() {
        let sys = OdeSystem::symmetric(vec![0.4, 0.2, 0.2, 0.2]).unwrap();
        let (traj, p) = integrate_to_plateau(&sys, 0, 1e-4, 1e-10, 1e7).unwrap();
        assert!(p.contains(closed_form_x1_infinity(0.4, 0.2, 4).unwrap()));
        assert!(traj.t_max() >= 100.0);
        assert!(integrate_to_plateau(&OdeSystem::one_type(), 0, 1e-4, 1e-9, 100.0).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(integrate(&OdeSystem::one_type(), 0.0, 1e-9).is_err());
        assert!(integrate(&OdeSystem::one_type(), 1.0, 0.0).is_err());
        assert!(OdeSystem::asymmetric(1.5).is_err());
        assert!(OdeSystem::symmetric(vec![1.0]).is_err());
    }
}
