use rand::RngCore;

use super::kernel::{substep, Crossing};

/// Time spent in `[a, b]` by Brownian motion with drift `-mu` started at `x`
/// before it leaves `(0, k)`. Trapezoidal in time with step `dt`; exits are
/// decided by the exact bridge crossing probability.
pub fn occupation_time<R: RngCore + ?Sized>(x: f64, k: f64, a: f64, b: f64, mu: f64, dt: f64, rng: &mut R) -> f64 {
    let inside = |y: f64| if (a..=b).contains(&y) { 1.0 } else { 0.0 };
    let mut pos = x;
    let mut occ = 0.0;
    loop {
        let (next, c) = substep(pos, mu, dt, Some(k), rng);
        if c != Crossing::None {
            return occ + 0.5 * dt * inside(pos);
        }
        occ += 0.5 * dt * (inside(pos) + inside(next));
        pos = next;
    }
}
