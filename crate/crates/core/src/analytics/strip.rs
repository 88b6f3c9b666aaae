use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};

const AUTO_TOLERANCE: f64 = 1e-10;
const MAX_TERMS: usize = 512;
/// Below `IMAGE_REGIME * K^2` the reflection sum is used instead of the sine series.
const IMAGE_REGIME: f64 = 0.01;

/// Strip `(0, K)` with drift `-mu` and an optional fixed series cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    pub k: f64,
    pub mu: f64,
    /// `None` picks the smallest cutoff with remainder bound below 1e-10
    /// (at most 512 terms), or the image sum for small times.
    pub truncation_terms: Option<usize>,
}

impl StripSpec {
    pub fn new(k: f64, mu: f64) -> Result<Self> {
        let spec = Self {
            k,
            mu,
            truncation_terms: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_terms(mut self, terms: usize) -> Result<Self> {
        self.truncation_terms = Some(terms);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(invalid("K", format!("must be positive, got {}", self.k)));
        }
        if !self.mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        if self.truncation_terms == Some(0) {
            return Err(invalid("truncation_terms", "must be at least 1"));
        }
        Ok(())
    }

    fn check_point(&self, t: f64, x: f64, y: f64) -> Result<()> {
        self.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        for (name, v) in [("x", x), ("y", y)] {
            if !(0.0..=self.k).contains(&v) {
                return Err(invalid(name, format!("{v} outside [0, {}]", self.k)));
            }
        }
        Ok(())
    }

    fn decay(&self, t: f64) -> f64 {
        PI * PI * t / (2.0 * self.k * self.k)
    }

    fn use_images(&self, t: f64) -> bool {
        self.truncation_terms.is_none() && t < IMAGE_REGIME * self.k * self.k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Eigen,
    Images,
}

/// A truncated series together with a rigorous bound on what was dropped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub remainder_bound: f64,
    pub terms: usize,
    pub representation: Representation,
}

impl SeriesValue {
    pub fn within(&self, tol: f64) -> bool {
        self.remainder_bound <= tol
    }

    fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            remainder_bound: self.remainder_bound * factor,
            ..self
        }
    }
}

/// `sum_{n > from} n^2 e^{-c n^2}`, summed until the terms are negligible.
fn n2_tail(c: f64, from: usize) -> f64 {
    let peak = (1.0 / c).sqrt();
    let mut acc = 0.0;
    let mut n = from as f64 + 1.0;
    loop {
        let term = n * n * (-c * n * n).exp();
        acc += term;
        if n > peak && (term <= 1e-18 * acc || term < 1e-300) {
            return acc;
        }
        n += 1.0;
    }
}

/// Cutoff and remainder for a series whose `n`th term is bounded by
/// `scale * n^2 e^{-c n^2}`.
fn choose_terms(c: f64, scale: f64, fixed: Option<usize>) -> (usize, f64) {
    if let Some(n) = fixed {
        return (n, scale * n2_tail(c, n));
    }
    let mut tail = scale * n2_tail(c, 0);
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        tail = (tail - scale * nf * nf * (-c * nf * nf).exp()).max(0.0);
        if tail < AUTO_TOLERANCE || n == MAX_TERMS {
            // Recompute the final tail directly to avoid cancellation.
            return (n, scale * n2_tail(c, n));
        }
    }
    unreachable!()
}

fn gauss(z: f64, t: f64) -> f64 {
    (-z * z / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Number of image pairs and the remainder bound for the reflection sum.
fn image_count(t: f64, k: f64, lead: f64) -> (usize, f64) {
    let rho = (-2.0 * k * k / t).exp();
    let mut m = 1usize;
    loop {
        let bound = 4.0 * gauss(2.0 * m as f64 * k, t) / (1.0 - rho);
        if bound <= 1e-17 * lead || bound < 1e-300 || m >= 1000 {
            return (m, bound);
        }
        m += 1;
    }
}

/// Density at `y` of driftless Brownian motion started at `x` and killed at 0 and K.
pub fn strip_density_v(t: f64, x: f64, y: f64, spec: &StripSpec) -> Result<SeriesValue> {
    spec.check_point(t, x, y)?;
    let k = spec.k;
    if spec.use_images(t) {
        let (m, bound) = image_count(t, k, gauss(0.0, t));
        let mut value = 0.0;
        for j in -(m as i64)..=(m as i64) {
            let shift = 2.0 * j as f64 * k;
            value += gauss(y - x + shift, t) - gauss(y + x + shift, t);
        }
        return Ok(SeriesValue {
            value: value.max(0.0),
            remainder_bound: bound,
            terms: 2 * m + 1,
            representation: Representation::Images,
        });
    }
    let c = spec.decay(t);
    let (sx, sy) = ((PI * x / k).sin(), (PI * y / k).sin());
    let (terms, remainder) = choose_terms(c, 2.0 / k * sx * sy, spec.truncation_terms);
    let mut value = 0.0;
    for n in 1..=terms {
        let nf = n as f64;
        value += (-c * nf * nf).exp() * (nf * PI * x / k).sin() * (nf * PI * y / k).sin();
    }
    Ok(SeriesValue {
        value: 2.0 / k * value,
        remainder_bound: remainder,
        terms,
        representation: Representation::Eigen,
    })
}

/// Expected particle density `q_t(x, y)` of branching BBM with drift `-mu` in the strip.
pub fn bbm_density_q(t: f64, x: f64, y: f64, spec: &StripSpec) -> Result<SeriesValue> {
    let v = strip_density_v(t, x, y, spec)?;
    let mu = spec.mu;
    Ok(v.scaled(((1.0 - mu * mu / 2.0) * t + mu * (x - y)).exp()))
}

/// Leading (n = 1) term of `q_t(x, y)`.
pub fn principal_density_p(t: f64, x: f64, y: f64, spec: &StripSpec) -> Result<f64> {
    spec.check_point(t, x, y)?;
    let (k, mu) = (spec.k, spec.mu);
    Ok(2.0 / k
        * ((1.0 - mu * mu / 2.0 - PI * PI / (2.0 * k * k)) * t).exp()
        * (mu * x).exp()
        * (PI * x / k).sin()
        * (-mu * y).exp()
        * (PI * y / k).sin())
}

/// `sum_{n>=2} n^2 e^{-pi^2 n^2 t / 2K^2} / e^{-pi^2 t / 2K^2}`, the bound on `|q/p - 1|`.
pub fn eterm_bound(t: f64, k: f64) -> f64 {
    let c = PI * PI * t / (2.0 * k * k);
    if !(c > 0.0) {
        return f64::INFINITY;
    }
    let peak = (1.0 / c).sqrt();
    let mut acc = 0.0;
    let mut n = 2.0f64;
    loop {
        let term = n * n * (-c * (n * n - 1.0)).exp();
        acc += term;
        if n > peak && (term <= 1e-18 * acc || term < 1e-300) {
            return acc;
        }
        n += 1.0;
    }
}

/// `int_a^b e^{-mu y} sin(omega y) dy`.
pub fn strip_sine_integral(mu: f64, omega: f64, a: f64, b: f64) -> f64 {
    let prim = |y: f64| {
        -(-mu * y).exp() * (mu * (omega * y).sin() + omega * (omega * y).cos())
            / (mu * mu + omega * omega)
    };
    prim(b) - prim(a)
}

/// `Phi(hi) - Phi(lo)` without cancellation in either tail.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        0.5 * (erfc(lo / SQRT_2) - erfc(hi / SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi / SQRT_2) - erfc(-lo / SQRT_2))
    } else {
        1.0 - 0.5 * erfc(-lo / SQRT_2) - 0.5 * erfc(hi / SQRT_2)
    }
}

/// Expected number of particles in `[a, b]` at time `t`, i.e. `int_a^b q_t(x, y) dy`.
pub fn strip_interval_mass(t: f64, x: f64, a: f64, b: f64, spec: &StripSpec) -> Result<SeriesValue> {
    spec.check_point(t, x, a)?;
    spec.check_point(t, x, b)?;
    if a > b {
        return Err(invalid("interval", format!("a = {a} > b = {b}")));
    }
    let (k, mu) = (spec.k, spec.mu);
    if spec.use_images(t) {
        // int_a^b e^{-mu y} phi_t(y - c) dy = e^{-mu c + mu^2 t/2} [Phi(..b..) - Phi(..a..)].
        let sq = t.sqrt();
        let piece = |c: f64| {
            let d = normal_mass((a - c + mu * t) / sq, (b - c + mu * t) / sq);
            if d == 0.0 {
                0.0
            } else {
                (t + mu * (x - c)).exp() * d
            }
        };
        let (m, bound) = image_count(t, k, gauss(0.0, t));
        let mut value = 0.0;
        for j in -(m as i64)..=(m as i64) {
            let shift = 2.0 * j as f64 * k;
            value += piece(x - shift) - piece(-x - shift);
        }
        let envelope =
            ((1.0 - mu * mu / 2.0) * t + mu * x).exp() * (-mu * a).exp().max((-mu * b).exp());
        return Ok(SeriesValue {
            value: value.max(0.0),
            remainder_bound: bound * envelope * (b - a),
            terms: 2 * m + 1,
            representation: Representation::Images,
        });
    }
    let c = spec.decay(t);
    let omega = PI / k;
    let scale = 2.0 / k * (omega * x).sin() * strip_sine_integral(mu, omega, a, b).abs();
    let (terms, remainder) = choose_terms(c, scale, spec.truncation_terms);
    let mut value = 0.0;
    for n in 1..=terms {
        let nf = n as f64;
        value += (-c * nf * nf).exp()
            * (nf * omega * x).sin()
            * strip_sine_integral(mu, nf * omega, a, b);
    }
    let pref = ((1.0 - mu * mu / 2.0) * t + mu * x).exp();
    Ok(SeriesValue {
        value: pref * 2.0 / k * value,
        remainder_bound: pref * remainder,
        terms,
        representation: Representation::Eigen,
    })
}

/// Expected occupation density of killed driftless Brownian motion in `(0, K)`.
pub fn green_strip(x: f64, y: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(invalid("K", format!("must be positive, got {k}")));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if !(0.0..=k).contains(&v) {
            return Err(invalid(name, format!("{v} outside [0, {k}]")));
        }
    }
    Ok(if y >= x {
        2.0 * x * (k - y) / k
    } else {
        2.0 * y * (k - x) / k
    })
}

/// `e^{(1 - mu^2/2 - pi^2/2K^2) t} e^{mu x} sin(pi x/K)`, the mean of `Z(t)` from one particle.
pub fn expected_z(t: f64, x: f64, k: f64, mu: f64) -> f64 {
    ((1.0 - mu * mu / 2.0 - PI * PI / (2.0 * k * k)) * t).exp() * (mu * x).exp() * (PI * x / k).sin()
}

/// Leading-order mean of `M(t)` from one particle at `x`; the true mean differs by a
/// relative error of at most `eterm_bound(t, K)`.
pub fn expected_count_principal(t: f64, x: f64, k: f64, mu: f64) -> f64 {
    2.0 / k * expected_z(t, x, k, mu) * strip_sine_integral(mu, PI / k, 0.0, k)
}

/// Leading-order mean of `Y(t)` from one particle at `x`.
pub fn expected_y_principal(t: f64, x: f64, k: f64, mu: f64) -> f64 {
    4.0 / PI * expected_z(t, x, k, mu)
}
