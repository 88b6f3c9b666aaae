//! Closed-form kernels and rates.
//!
//! These are used both as simulation inputs (drift, reference level, merger
//! rates) and as exact oracles for the Monte Carlo routines.

mod csbp;
mod params;
mod rates;
mod strip;

pub use csbp::CsbpParams;
pub use params::{derive_params, drift_squared, identity_residual_for, scale_log, ModelParams};
pub use rates::{lambda_bk, lambda_bk_exact, merger_rates, LambdaMeasure, EXACT_RATE_LIMIT};
pub use strip::{
    bbm_density_q, eterm_bound, expected_count_principal, expected_y_principal,
    expected_z, green_strip, principal_density_p, strip_density_v, strip_interval_mass,
    strip_sine_integral, Representation, SeriesValue, StripSpec,
};
