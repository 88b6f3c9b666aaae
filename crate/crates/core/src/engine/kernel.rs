//! Single-particle motion: Gaussian increments with exact bridge corrections.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::open01;

/// Probability that a Brownian bridge from `x0` to `x1` over time `dt` touches 0.
#[inline]
pub fn bridge_hit_probability(x0: f64, x1: f64, dt: f64) -> f64 {
    if x0 <= 0.0 || x1 <= 0.0 {
        return 1.0;
    }
    if dt <= 0.0 {
        return 0.0;
    }
    (-2.0 * x0 * x1 / dt).exp()
}

/// Probability that a Brownian bridge from `x0` to `x1` over time `dt` stays in `(0, k)`.
///
/// Image series: `sum_n [exp(-2nk(d + nk)/dt) - exp(-2(x0 + nk)(x1 + nk)/dt)]`, `d = x1 - x0`.
pub fn strip_bridge_survival(x0: f64, x1: f64, k: f64, dt: f64) -> f64 {
    if x0 <= 0.0 || x1 <= 0.0 || x0 >= k || x1 >= k {
        return 0.0;
    }
    if dt <= 0.0 {
        return 1.0;
    }
    let d = x1 - x0;
    let term = |n: f64| {
        (-2.0 * n * k * (d + n * k) / dt).exp() - (-2.0 * (x0 + n * k) * (x1 + n * k) / dt).exp()
    };
    let mut p = term(0.0);
    for n in 1..200 {
        let n = n as f64;
        let (a, b) = (term(n), term(-n));
        p += a + b;
        if a.abs() + b.abs() < 1e-18 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Exponential waiting time with the given rate; infinite when the rate is zero.
#[inline]
pub fn exp_clock<R: RngCore + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    -open01(rng).ln() / rate
}

#[inline]
pub fn gaussian<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// What happened to a particle during one substep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    None,
    /// Absorbed at 0.
    Lower,
    /// Reached the right barrier.
    Upper,
}

/// Moves `x0` by a Gaussian increment over `dt` and decides barrier crossings.
///
/// With `upper = Some(k)` both barriers are checked jointly; the returned
/// position is meaningful only when the result is `Crossing::None`.
pub fn substep<R: RngCore + ?Sized>(
    x0: f64,
    mu: f64,
    dt: f64,
    upper: Option<f64>,
    rng: &mut R,
) -> (f64, Crossing) {
    let x1 = x0 - mu * dt + dt.sqrt() * gaussian(rng);
    if x1 <= 0.0 {
        return (x1, Crossing::Lower);
    }
    match upper {
        None => {
            if open01(rng) < bridge_hit_probability(x0, x1, dt) {
                (x1, Crossing::Lower)
            } else {
                (x1, Crossing::None)
            }
        }
        Some(k) => {
            if x1 >= k {
                return (x1, Crossing::Upper);
            }
            let survive = strip_bridge_survival(x0, x1, k, dt);
            if open01(rng) < survive {
                return (x1, Crossing::None);
            }
            let lower = bridge_hit_probability(x0, x1, dt);
            let up = bridge_hit_probability(k - x0, k - x1, dt);
            if open01(rng) * (lower + up) < lower {
                (x1, Crossing::Lower)
            } else {
                (x1, Crossing::Upper)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn strip_survival_reduces_to_single_barrier() {
        // Far upper barrier: only the n = 0 terms matter.
        let p = strip_bridge_survival(0.5, 0.7, 100.0, 1.0);
        assert!((p - (1.0 - bridge_hit_probability(0.5, 0.7, 1.0))).abs() < 1e-15);
    }

    #[test]
    fn strip_survival_matches_density_ratio() {
        use crate::analytics::{strip_density_v, StripSpec};
        let spec = StripSpec::new(1.0, 0.0).unwrap().with_terms(400).unwrap();
        for (x0, x1, dt) in [(0.3, 0.6, 0.2), (0.5, 0.5, 1.0), (0.1, 0.9, 0.05)] {
            let killed = strip_density_v(dt, x0, x1, &spec).unwrap().value;
            let free = (-(x1 - x0) * (x1 - x0) / (2.0 * dt)).exp() / (2.0 * std::f64::consts::PI * dt).sqrt();
            let p = strip_bridge_survival(x0, x1, 1.0, dt);
            assert!((p - killed / free).abs() < 1e-10, "{x0} {x1} {dt}: {p} vs {}", killed / free);
        }
    }

    #[test]
    fn zero_rate_never_fires() {
        let mut r = StreamRng::new(1, 2);
        assert!(exp_clock(0.0, &mut r).is_infinite());
        assert!(exp_clock(1.0, &mut r) > 0.0);
    }

    #[test]
    fn outside_points() {
        assert_eq!(bridge_hit_probability(-0.1, 1.0, 1.0), 1.0);
        assert_eq!(strip_bridge_survival(0.5, 1.2, 1.0, 1.0), 0.0);
        assert_eq!(strip_bridge_survival(0.5, 0.6, 1.0, 0.0), 1.0);
    }
}
