use std::f64::consts::PI;

use rand::RngCore;

use crate::analytics::strip_sine_integral;
use crate::error::{invalid, Result};
use crate::rng::open01;

/// CDF of the density proportional to `e^{-mu y} sin(pi y / l)` on `(0, l)`.
pub fn stable_profile_cdf(x: f64, mu: f64, l: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= l {
        return 1.0;
    }
    let w = PI / l;
    (strip_sine_integral(mu, w, 0.0, x) / strip_sine_integral(mu, w, 0.0, l)).clamp(0.0, 1.0)
}

/// Inverse-CDF draws from the stable profile; every draw lies in `(0, l)`.
pub fn sample_stable_profile<R: RngCore + ?Sized>(n: usize, mu: f64, l: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(invalid("L", format!("must be positive, got {l}")));
    }
    if !mu.is_finite() {
        return Err(invalid("mu", "must be finite"));
    }
    let w = PI / l;
    let total = strip_sine_integral(mu, w, 0.0, l);
    Ok((0..n)
        .map(|_| {
            let target = open01(rng) * total;
            let (mut lo, mut hi) = (0.0, l);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if strip_sine_integral(mu, w, 0.0, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = 0.5 * (lo + hi);
            x.clamp(f64::MIN_POSITIVE, l * (1.0 - f64::EPSILON))
        })
        .collect())
}
