//! Critical BBM killed at `-y`, the limit `W` of `y e^{-sqrt 2 y} Z_y`, and
//! the travelling wave giving its Laplace transform.

mod tail;
mod wave;
mod zy;

pub use tail::{find_plateau, hill_sweep, tail_analysis, Plateau, TailReport, HILL_SWEEP_POINTS, MIN_TAIL_SAMPLES};
pub use wave::{
    laplace_cross_check, solve_fkpp_wave, solve_fkpp_wave_with_step, tail_constant, LaplaceCheck, LaplacePoint,
    WaveSolution, DEFAULT_STEP,
};
pub use zy::{estimate_w_samples, simulate_zy, w_scale, ZyConfig, ZyExperiment, ZyOutcome, CRITICAL_DRIFT, MIN_HORIZON};
