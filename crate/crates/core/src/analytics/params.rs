use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Drift and levels of the near-critical system with population scale `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u64,
    pub mu: f64,
    /// Right reference level `L`.
    pub l: f64,
    /// Offset of the killing level.
    pub a: f64,
    /// Killing level `L_A = L - A/sqrt(2)`.
    pub l_a: f64,
}

/// `log N + 3 log log N`.
pub fn scale_log(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(invalid("N", format!("need N >= 3 so that log log N > 0, got {n}")));
    }
    let ln = (n as f64).ln();
    Ok(ln + 3.0 * ln.ln())
}

/// `mu^2 = 2 - 2 pi^2 / (log N + 3 log log N)^2`. Negative for N < 6, where no
/// real drift exists.
pub fn drift_squared(n: u64) -> Result<f64> {
    let s = scale_log(n)?;
    Ok(2.0 - 2.0 * PI * PI / (s * s))
}

/// `1 - mu^2/2 - pi^2/(2 L^2)` evaluated from `mu^2` and `L` for any N >= 3.
pub fn identity_residual_for(n: u64) -> Result<f64> {
    let mu2 = drift_squared(n)?;
    let l = scale_log(n)? / SQRT_2;
    Ok(1.0 - mu2 / 2.0 - PI * PI / (2.0 * l * l))
}

pub fn derive_params(n: u64, a: f64) -> Result<ModelParams> {
    let s = scale_log(n)?;
    let mu2 = drift_squared(n)?;
    if mu2 <= 0.0 {
        return Err(invalid(
            "N",
            format!("N = {n} gives mu^2 = {mu2:.4} <= 0; the drift is defined for N >= 6"),
        ));
    }
    if !a.is_finite() {
        return Err(invalid("A", "must be finite"));
    }
    let l = s / SQRT_2;
    let l_a = (s - a) / SQRT_2;
    if l_a <= 0.0 {
        return Err(invalid("A", format!("L_A = {l_a} must be positive")));
    }
    Ok(ModelParams {
        n,
        mu: mu2.sqrt(),
        l,
        a,
        l_a,
    })
}

impl ModelParams {
    pub fn identity_residual(&self) -> f64 {
        1.0 - self.mu * self.mu / 2.0 - PI * PI / (2.0 * self.l * self.l)
    }

    /// `(log N)^3`, the genealogical time unit.
    pub fn time_scale(&self) -> f64 {
        (self.n as f64).ln().powi(3)
    }

    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }
}
