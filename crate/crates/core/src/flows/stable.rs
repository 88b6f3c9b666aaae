use std::f64::consts::PI;

use rand::RngCore;

use crate::analytics::CsbpParams;
use crate::error::{invalid, Result};
use crate::rng::open01;

/// One-sided stable law with Laplace exponent `scale * lambda^alpha`.
/// `alpha = 1` is the deterministic drift `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableSpec {
    pub alpha: f64,
    pub scale: f64,
}

impl StableSpec {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(Self { alpha, scale })
    }

    /// The law of `S^{(s, s+dt)}(1)`.
    pub fn increment(params: &CsbpParams, dt: f64) -> Result<Self> {
        Self::new(params.stable_index(dt), params.laplace_scale(dt))
    }

    pub fn laplace(&self, lambda: f64) -> f64 {
        (-self.scale * lambda.powf(self.alpha)).exp()
    }

    pub fn ln_sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.scale.ln() / self.alpha + ln_positive_stable(self.alpha, rng)?)
    }
}

/// Log of a one-sided stable draw with `E[e^{-lambda S}] = e^{-lambda^alpha}`
/// (Kanter's representation). Works in logs so that tiny `alpha` does not overflow.
pub fn ln_positive_stable<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let u = PI * open01(rng);
    let e = -open01(rng).ln();
    Ok((alpha * u).sin().ln() - (u.sin().ln()) / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin().ln() - e.ln()))
}

pub fn sample_positive_stable<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    Ok(ln_positive_stable(alpha, rng)?.exp())
}

/// `ln S^{(s, s+dt)}(x)` given `ln x`: Laplace exponent `x u_dt(lambda)`,
/// realised as `(x c)^{1/alpha} S_alpha` with `alpha = e^{-b dt}` and
/// `c = e^{a (alpha - 1)/b}`.
pub fn ln_s_increment<R: RngCore + ?Sized>(dt: f64, ln_x: f64, params: &CsbpParams, rng: &mut R) -> Result<f64> {
    if !(dt >= 0.0) {
        return Err(invalid("dt", format!("must be nonnegative, got {dt}")));
    }
    if dt == 0.0 || ln_x == f64::NEG_INFINITY {
        return Ok(ln_x);
    }
    let alpha = params.stable_index(dt);
    if alpha <= 0.0 {
        return Err(invalid("dt", "stable index underflows; use a finer time grid"));
    }
    Ok((ln_x + params.ln_laplace_scale(dt)) / alpha + ln_positive_stable(alpha, rng)?)
}

/// `S^{(s, s+dt)}(x)`. Overflows for long steps; see [`ln_s_increment`].
pub fn sample_s_increment<R: RngCore + ?Sized>(dt: f64, x: f64, params: &CsbpParams, rng: &mut R) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("must be nonnegative, got {x}")));
    }
    if dt == 0.0 {
        return Ok(x);
    }
    Ok(ln_s_increment(dt, x.ln(), params, rng)?.exp())
}

/// `ln Z` at each of `times` for the CSBP started from `z0`, by composing
/// subordinator increments.
pub fn ln_csbp_trajectory<R: RngCore + ?Sized>(z0: f64, times: &[f64], params: &CsbpParams, rng: &mut R) -> Result<Vec<f64>> {
    if !(z0 >= 0.0) {
        return Err(invalid("z0", "must be nonnegative"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut ln_z = z0.ln();
    let mut t = 0.0;
    for &s in times {
        if s < t {
            return Err(invalid("times", "must be sorted and nonnegative"));
        }
        ln_z = ln_s_increment(s - t, ln_z, params, rng)?;
        t = s;
        out.push(ln_z);
    }
    Ok(out)
}

pub fn csbp_trajectory<R: RngCore + ?Sized>(z0: f64, times: &[f64], params: &CsbpParams, rng: &mut R) -> Result<Vec<f64>> {
    Ok(ln_csbp_trajectory(z0, times, params, rng)?.into_iter().map(f64::exp).collect())
}

/// Decimal rendering `d.ddddddddddddddde[+-]N` of `e^{ln}` that works far
/// outside the range of `f64`.
pub fn format_ln_mass(ln: f64) -> String {
    if ln == f64::NEG_INFINITY {
        return "0".to_string();
    }
    if !ln.is_finite() {
        return "inf".to_string();
    }
    let log10 = ln / std::f64::consts::LN_10;
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    if mantissa >= 9.999_999_999_999_999_5 {
        mantissa = 1.0;
        exponent += 1.0;
    }
    format!("{mantissa:.15}e{}", exponent as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn identity_at_zero_dt() {
        let p = CsbpParams::new(0.2, 1.0).unwrap();
        let mut rng = StreamRng::new(1, 0);
        assert_eq!(sample_s_increment(0.0, 3.5, &p, &mut rng).unwrap(), 3.5);
        let zero = ln_csbp_trajectory(0.0, &[0.5, 1.0], &p, &mut rng).unwrap();
        assert!(zero.iter().all(|z| *z == f64::NEG_INFINITY));
    }

    #[test]
    fn rejects_bad_alpha() {
        let mut rng = StreamRng::new(1, 0);
        assert!(sample_positive_stable(0.0, &mut rng).is_err());
        assert!(sample_positive_stable(1.0, &mut rng).is_err());
        assert!(ln_positive_stable(1.5, &mut rng).is_err());
    }

    #[test]
    fn mass_formatting() {
        assert_eq!(format_ln_mass(f64::NEG_INFINITY), "0");
        assert_eq!(format_ln_mass(0.0), "1.000000000000000e0");
        let s = format_ln_mass(1e6);
        assert!(s.ends_with("e434294"), "{s}");
        let back: f64 = format_ln_mass(2.5f64.ln()).parse().unwrap();
        assert!((back - 2.5).abs() < 1e-12);
    }
}
