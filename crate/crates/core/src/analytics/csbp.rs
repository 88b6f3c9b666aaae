use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Branching mechanism `Psi(u) = a u + b u log u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsbpParams {
    pub a: f64,
    pub b: f64,
}

impl CsbpParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", format!("must be positive and finite, got {b}")));
        }
        if !a.is_finite() {
            return Err(invalid("a", "must be finite"));
        }
        Ok(Self { a, b })
    }

    /// The mechanism appearing in the population-size limit: `b = 2 pi^2`.
    pub fn neveu_limit(a: f64) -> Self {
        Self {
            a,
            b: 2.0 * std::f64::consts::PI.powi(2),
        }
    }

    pub fn psi(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.a * u + self.b * u * u.ln()
    }

    /// Stable index `e^{-bt}` of the subordinator `S^{(s, s+t)}`.
    pub fn stable_index(&self, t: f64) -> f64 {
        (-self.b * t).exp()
    }

    /// Multiplicative constant `e^{a (e^{-bt} - 1)/b}` of `u_t`.
    pub fn laplace_scale(&self, t: f64) -> f64 {
        self.ln_laplace_scale(t).exp()
    }

    pub fn ln_laplace_scale(&self, t: f64) -> f64 {
        self.a * (-self.b * t).exp_m1() / self.b
    }

    /// `u_t(lambda) = lambda^{e^{-bt}} e^{a (e^{-bt} - 1)/b}`.
    pub fn laplace_u(&self, t: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if !(t >= 0.0) {
            return Err(invalid("t", format!("must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(lambda);
        }
        Ok((self.stable_index(t) * lambda.ln() + self.ln_laplace_scale(t)).exp())
    }
}
