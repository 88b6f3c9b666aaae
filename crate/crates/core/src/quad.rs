//! Adaptive composite quadrature with an absolute tolerance.
//!
//! Each panel is integrated with the double-exponential rule; panels whose
//! error estimate exceeds their share of the tolerance are bisected.

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 24;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_with_error(&f, a, b, tol).0
}

/// Integral over `[a, b]` split at the given interior points first. Use this
/// when the integrand has known kinks or jumps.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(cuts.iter().copied().filter(|&c| c > a && c < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let share = tol / (pts.len() - 1).max(1) as f64;
    pts.windows(2)
        .map(|w| integrate_with_error(&f, w[0], w[1], share).0)
        .sum()
}

/// Integral and accumulated error estimate.
pub fn integrate_with_error<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    panel(f, a, b, tol.max(1e-15), 0)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol || depth >= MAX_DEPTH || !out.integral.is_finite() {
        return (out.integral, out.error_estimate);
    }
    let m = 0.5 * (a + b);
    let (l, el) = panel(f, a, m, 0.5 * tol, depth + 1);
    let (r, er) = panel(f, m, b, 0.5 * tol, depth + 1);
    (l + r, el + er)
}
