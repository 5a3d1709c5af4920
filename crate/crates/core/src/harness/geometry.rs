use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Volume of the unit ball in `R^d`.
pub fn omega(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - libm::lgamma(h + 1.0)).exp()
}

/// `omega_d r^d`: distance to PWIT weight.
pub fn f_d(r: f64, d: usize) -> f64 {
    omega(d) * r.powi(d as i32)
}

/// Inverse of [`f_d`].
pub fn f_d_inverse(t: f64, d: usize) -> f64 {
    (t / omega(d)).powf(1.0 / d as f64)
}

/// Uniform point in the ball of radius `r` about the origin.
pub fn uniform_in_ball(rng: &mut Rng, d: usize, r: f64, out: &mut [f64]) {
    let mut norm2 = 0.0;
    for x in out.iter_mut() {
        *x = rng.sample(StandardNormal);
        norm2 += *x * *x;
    }
    let scale = r * rng.random::<f64>().powf(1.0 / d as f64) / norm2.sqrt();
    for x in out.iter_mut() {
        *x *= scale;
    }
}

/// Hit-or-miss estimate of `vol(B(y, R) & B(z, R)) / vol(B(R))` for
/// `|y - z| = separation * R`: returns the fraction and its standard error.
pub fn lens_fraction(
    d: usize,
    separation: f64,
    samples: usize,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    if d == 0 || samples == 0 || !(separation >= 0.0) {
        return Err(Error::InvalidParameter(
            "lens estimate needs d >= 1, samples >= 1, separation >= 0".into(),
        ));
    }
    let mut p = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        uniform_in_ball(rng, d, 1.0, &mut p);
        // z sits at distance `separation` along the first axis
        let dist2: f64 = (p[0] - separation).powi(2) + p[1..].iter().map(|x| x * x).sum::<f64>();
        if dist2 < 1.0 {
            hits += 1;
        }
    }
    Ok(super::records::proportion(hits, samples))
}
