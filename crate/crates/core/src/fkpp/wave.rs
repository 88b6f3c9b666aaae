use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::mean_se;

pub const DEFAULT_STEP: f64 = 1e-3;
/// Decay rate `sqrt 2 - 2` of the wave ahead of the front (stable direction
/// of the fixed point at zero).
const LEAD: f64 = SQRT_2 - 2.0;
const MAX_SHOTS: usize = 60;

/// Decreasing solution of `psi''/2 - sqrt 2 psi' = psi (1 - psi)` on
/// `[-X, X]`, translated so that `psi(anchor) = 1/2`.
///
/// `one_minus_psi` is integrated directly behind the front, so it keeps full
/// relative precision where `psi` rounds to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveSolution {
    pub domain: f64,
    pub step: f64,
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub one_minus_psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub anchor: f64,
}

type State = (f64, f64);

fn rk4(f: impl Fn(State) -> State, s: State, h: f64) -> State {
    let k1 = f(s);
    let k2 = f((s.0 + 0.5 * h * k1.0, s.1 + 0.5 * h * k1.1));
    let k3 = f((s.0 + 0.5 * h * k2.0, s.1 + 0.5 * h * k2.1));
    let k4 = f((s.0 + h * k3.0, s.1 + h * k3.1));
    (
        s.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn psi_rhs((p, dp): State) -> State {
    (dp, 2.0 * SQRT_2 * dp + 2.0 * p * (1.0 - p))
}

fn phi_rhs((q, dq): State) -> State {
    (dq, 2.0 * SQRT_2 * dq - 2.0 * q * (1.0 - q))
}

/// Cubic Hermite value on `[0, h]` at fraction `s`.
fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

struct Shot {
    /// Location of `psi = 1/2`.
    crossing: f64,
    psi: Vec<f64>,
    one_minus: Vec<f64>,
    dpsi: Vec<f64>,
}

/// Integrates from `u = X` down to `-X` starting on the leading-edge manifold
/// with `psi(X) ~ eps`.
fn shoot(m: usize, h: f64, eps: f64, keep: bool) -> Result<Shot> {
    let x_of = |j: usize| (j as f64 - m as f64) * h;
    let a = -1.0 / (2.0 * LEAD * LEAD - 2.0 * SQRT_2 * LEAD - 1.0);
    let mut s = (eps + a * eps * eps, LEAD * eps + 2.0 * LEAD * a * eps * eps);
    let n = 2 * m + 1;
    let (mut psi, mut one_minus, mut dpsi) = if keep {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let mut crossing = None;
    let mut behind = false;
    for j in (0..n).rev() {
        if keep {
            if behind {
                psi[j] = 1.0 - s.0;
                one_minus[j] = s.0;
                dpsi[j] = -s.1;
            } else {
                psi[j] = s.0;
                one_minus[j] = 1.0 - s.0;
                dpsi[j] = s.1;
            }
        }
        if j == 0 {
            break;
        }
        if behind {
            s = rk4(phi_rhs, s, -h);
        } else {
            let next = rk4(psi_rhs, s, -h);
            if !(next.0.is_finite() && next.1 <= 0.0) {
                return Err(Error::NoConvergence(format!(
                    "shooting left the monotone branch near x = {} (psi = {}, psi' = {})",
                    x_of(j),
                    next.0,
                    next.1
                )));
            }
            if next.0 >= 0.5 {
                // Hermite segment on [x_{j-1}, x_j]; solve for 1/2 by bisection.
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if hermite(next.0, next.1, s.0, s.1, h, mid) >= 0.5 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                crossing = Some(x_of(j - 1) + 0.5 * (lo + hi) * h);
                s = (1.0 - next.0, -next.1);
                behind = true;
            } else {
                s = next;
            }
            if !keep && behind {
                break;
            }
        }
    }
    let crossing = crossing.ok_or_else(|| Error::NoConvergence("psi never reached 1/2 on the domain".into()))?;
    Ok(Shot {
        crossing,
        psi,
        one_minus,
        dpsi,
    })
}

/// Shooting from the leading edge, with the translate adjusted until
/// `psi(0) = 1/2` to within `tolerance`.
pub fn solve_fkpp_wave(domain: f64, tolerance: f64) -> Result<WaveSolution> {
    solve_fkpp_wave_with_step(domain, tolerance, DEFAULT_STEP)
}

pub fn solve_fkpp_wave_with_step(domain: f64, tolerance: f64, step: f64) -> Result<WaveSolution> {
    if !(domain >= 2.0 && domain.is_finite()) {
        return Err(invalid("domain", format!("half-width must be at least 2, got {domain}")));
    }
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    if !(step > 0.0 && step <= 0.05) {
        return Err(invalid("step", "must lie in (0, 0.05]"));
    }
    let m = (domain / step).round() as usize;
    let x_top = m as f64 * step;
    let mut ln_eps = LEAD * x_top;
    let mut history = Vec::new();
    for _ in 0..MAX_SHOTS {
        let shot = shoot(m, step, ln_eps.exp(), false)?;
        history.push(shot.crossing);
        if shot.crossing.abs() <= tolerance.clamp(1e-14, 1e-12) {
            let full = shoot(m, step, ln_eps.exp(), true)?;
            return Ok(WaveSolution {
                domain: x_top,
                step,
                grid: (0..=2 * m).map(|j| (j as f64 - m as f64) * step).collect(),
                psi: full.psi,
                one_minus_psi: full.one_minus,
                dpsi: full.dpsi,
                anchor: full.crossing,
            });
        }
        ln_eps += LEAD * shot.crossing;
    }
    Err(Error::NoConvergence(format!("translate did not settle; crossings {history:?}")))
}

impl WaveSolution {
    fn index(&self, u: f64) -> (usize, f64) {
        let pos = (u + self.domain) / self.step;
        let j = (pos.floor() as usize).min(self.grid.len() - 2);
        (j, pos - j as f64)
    }

    /// `psi(u)` by Hermite interpolation, extended past the domain with the
    /// linearised tails.
    pub fn eval(&self, u: f64) -> f64 {
        if u <= -self.domain {
            return 1.0 - self.eval_one_minus(u);
        }
        if u >= self.domain {
            let last = *self.psi.last().expect("nonempty grid");
            return last * (LEAD * (u - self.domain)).exp();
        }
        let (j, s) = self.index(u);
        if self.psi[j] > 0.5 {
            return 1.0 - self.eval_one_minus(u);
        }
        hermite(self.psi[j], self.dpsi[j], self.psi[j + 1], self.dpsi[j + 1], self.step, s)
    }

    /// `1 - psi(u)`, accurate where `psi` is close to one.
    pub fn eval_one_minus(&self, u: f64) -> f64 {
        if u <= -self.domain {
            let x0 = self.domain;
            return self.one_minus_psi[0] * (-u / x0) * (SQRT_2 * (u + x0)).exp();
        }
        if u >= self.domain {
            return 1.0 - self.eval(u);
        }
        let (j, s) = self.index(u);
        hermite(
            self.one_minus_psi[j],
            -self.dpsi[j],
            self.one_minus_psi[j + 1],
            -self.dpsi[j + 1],
            self.step,
            s,
        )
    }

    /// The `u` with `psi(u) = p`, for `p` in `(0, 1)`.
    pub fn inverse(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid("p", format!("must lie in (0, 1), got {p}")));
        }
        let (mut lo, mut hi) = (-4.0 * self.domain, 4.0 * self.domain);
        if self.eval(lo) < p || self.eval(hi) > p {
            return Err(Error::Domain(format!("psi = {p} is outside the solved range")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Largest `|psi''/2 - sqrt 2 psi' - psi(1 - psi)|` over interior grid
    /// points, derivatives by sixth-order central differences.
    pub fn ode_residual(&self) -> f64 {
        let f = &self.psi;
        let h = self.step;
        let mut worst: f64 = 0.0;
        for i in 3..f.len().saturating_sub(3) {
            let d1 = (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2] + f[i + 3])
                / (60.0 * h);
            let d2 = (2.0 * f[i - 3] - 27.0 * f[i - 2] + 270.0 * f[i - 1] - 490.0 * f[i] + 270.0 * f[i + 1]
                - 27.0 * f[i + 2]
                + 2.0 * f[i + 3])
                / (180.0 * h * h);
            worst = worst.max((0.5 * d2 - SQRT_2 * d1 - f[i] * (1.0 - f[i])).abs());
        }
        worst
    }

    /// Strict decrease and `0 < psi < 1`, judged on `1 - psi` behind the
    /// front where `psi` itself rounds to one.
    pub fn is_strictly_decreasing(&self) -> bool {
        let inside = self.psi.iter().zip(&self.one_minus_psi).all(|(&p, &q)| p > 0.0 && q > 0.0);
        inside
            && (1..self.psi.len()).all(|j| {
                if self.psi[j - 1] > 0.5 {
                    self.one_minus_psi[j] > self.one_minus_psi[j - 1]
                } else {
                    self.psi[j] < self.psi[j - 1]
                }
            })
    }
}

/// Least-squares fit of `(1 - w(x)) e^{sqrt 2 x} / x = C + A/x` over
/// `x in [lo, hi]`, where `w(x) = psi(-x)`. Returns `(C, A)`.
pub fn tail_constant(wave: &WaveSolution, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo && hi <= wave.domain) {
        return Err(invalid("tail window", format!("[{lo}, {hi}] must lie in (0, {}]", wave.domain)));
    }
    let (mut n, mut sz, mut szz, mut sv, mut szv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &u) in wave.grid.iter().enumerate() {
        let x = -u;
        if x < lo || x > hi {
            continue;
        }
        let v = wave.one_minus_psi[i] * (SQRT_2 * x).exp() / x;
        let z = 1.0 / x;
        n += 1.0;
        sz += z;
        szz += z * z;
        sv += v;
        szv += z * v;
    }
    let det = n * szz - sz * sz;
    if n < 3.0 || det == 0.0 {
        return Err(Error::Degenerate("tail window holds too few grid points".into()));
    }
    let a = (n * szv - sz * sv) / det;
    let c = (sv - a * sz) / n;
    Ok((c, a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacePoint {
    pub u: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    /// `psi(u)` with the solver's own anchor.
    pub psi_anchored: f64,
    /// `psi(u + shift)`.
    pub psi_fitted: f64,
}

impl LaplacePoint {
    pub fn discrepancy(&self) -> f64 {
        (self.mc_mean - self.psi_fitted).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub shift: f64,
    pub samples: usize,
    pub points: Vec<LaplacePoint>,
}

/// Monte Carlo `E[exp(-e^{sqrt 2 u} W)]` against `psi(u + shift)`, with the
/// single translate `shift` fitted by least squares over `us`.
pub fn laplace_cross_check(wave: &WaveSolution, w_samples: &[f64], us: &[f64]) -> Result<LaplaceCheck> {
    if w_samples.is_empty() || us.is_empty() {
        return Err(invalid("samples", "need w samples and at least one u"));
    }
    let mc: Vec<(f64, f64)> = us
        .iter()
        .map(|&u| {
            let lam = (SQRT_2 * u).exp();
            let ys: Vec<f64> = w_samples.iter().map(|w| (-lam * w).exp()).collect();
            mean_se(&ys)
        })
        .collect();
    let loss = |d: f64| -> f64 { us.iter().zip(&mc).map(|(&u, &(m, _))| (m - wave.eval(u + d)).powi(2)).sum() };
    let span = wave.domain / 2.0;
    let grid = 400;
    let mut best = -span;
    let mut best_loss = f64::INFINITY;
    for i in 0..=grid {
        let d = -span + 2.0 * span * i as f64 / grid as f64;
        let l = loss(d);
        if l < best_loss {
            best_loss = l;
            best = d;
        }
    }
    let cell = 2.0 * span / grid as f64;
    let (mut a, mut b) = (best - cell, best + cell);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if loss(c) < loss(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let shift = 0.5 * (a + b);
    let points = us
        .iter()
        .zip(mc)
        .map(|(&u, (m, se))| LaplacePoint {
            u,
            mc_mean: m,
            mc_se: se,
            psi_anchored: wave.eval(u),
            psi_fitted: wave.eval(u + shift),
        })
        .collect();
    Ok(LaplaceCheck {
        shift,
        samples: w_samples.len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchored_and_bounded() {
        let w = solve_fkpp_wave_with_step(8.0, 1e-12, 4e-3).unwrap();
        assert!(w.anchor.abs() < 1e-12);
        assert!((w.eval(w.anchor) - 0.5).abs() < 1e-10);
        assert!(w.is_strictly_decreasing());
        assert!((w.eval(20.0) - 0.0).abs() < 1e-4);
        assert!(w.eval_one_minus(-20.0) < 1e-9);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let (a, h) = (0.3, 0.5);
        let v = hermite(f(a), df(a), f(a + h), df(a + h), h, 0.4);
        assert!((v - f(a + 0.4 * h)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(solve_fkpp_wave(1.0, 1e-8).is_err());
        assert!(solve_fkpp_wave(15.0, 0.0).is_err());
    }
}
