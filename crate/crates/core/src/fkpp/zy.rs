use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{bridge_hit_probability, exp_clock, gaussian};
use crate::error::{invalid, Result};
use crate::rng::{open01, StreamRng};

/// Critical drift: the speed of the rightmost particle of rate-one binary BBM.
pub const CRITICAL_DRIFT: f64 = std::f64::consts::SQRT_2;

pub const MIN_HORIZON: f64 = 400.0;

/// Settings for counting particles absorbed at `-y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZyConfig {
    pub y: f64,
    /// Any particle alive past this time flags the sample.
    pub horizon: f64,
    /// Flag the sample once more than this many particles have been absorbed.
    pub max_count: u64,
}

impl ZyConfig {
    /// Horizon `max(10 y^2, 400)`, no count cap. The floor keeps shallow
    /// barriers from flagging the rare long-lived trees.
    pub fn new(y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(invalid("y", format!("must be positive, got {y}")));
        }
        Ok(Self {
            y,
            horizon: (10.0 * y * y).max(MIN_HORIZON),
            max_count: u64::MAX,
        })
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_max_count(mut self, max_count: u64) -> Self {
        self.max_count = max_count;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "count", rename_all = "snake_case")]
pub enum ZyOutcome {
    Count(u64),
    /// A particle outlived the horizon.
    HorizonExceeded,
    CountCapExceeded,
}

/// One draw of `Z_y`: BBM with drift `-sqrt 2` from the origin, every
/// particle reaching `-y` is killed and counted.
///
/// Each particle lives an exponential time; its position at the end of that
/// lifetime is Gaussian and whether it touched the barrier in between is
/// decided by the exact Brownian bridge crossing probability, so there is no
/// time discretisation.
pub fn simulate_zy<R: RngCore + ?Sized>(cfg: &ZyConfig, rng: &mut R) -> Result<ZyOutcome> {
    if !(cfg.y > 0.0) {
        return Err(invalid("y", "must be positive"));
    }
    if !(cfg.horizon > 0.0) {
        return Err(invalid("horizon", "must be positive"));
    }
    let mut stack = vec![(cfg.y, 0.0f64)];
    let mut count = 0u64;
    while let Some((x, t)) = stack.pop() {
        let life = exp_clock(1.0, rng);
        let span = life.min(cfg.horizon - t);
        let x1 = x - CRITICAL_DRIFT * span + span.sqrt() * gaussian(rng);
        let absorbed = x1 <= 0.0 || open01(rng) < bridge_hit_probability(x, x1, span);
        if absorbed {
            count += 1;
            if count > cfg.max_count {
                return Ok(ZyOutcome::CountCapExceeded);
            }
            continue;
        }
        if t + life >= cfg.horizon {
            return Ok(ZyOutcome::HorizonExceeded);
        }
        stack.push((x1, t + life));
        stack.push((x1, t + life));
    }
    Ok(ZyOutcome::Count(count))
}

/// Replicates of `Z_y` and the rescaled `w = y e^{-sqrt 2 y} Z_y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZyExperiment {
    pub y: f64,
    pub replicates: usize,
    pub seed: u64,
    pub zy_samples: Vec<u64>,
    pub w_samples: Vec<f64>,
    /// Replicates excluded because a particle outlived the horizon.
    pub horizon_flagged: usize,
    pub cap_flagged: usize,
}

impl ZyExperiment {
    pub fn flagged(&self) -> usize {
        self.horizon_flagged + self.cap_flagged
    }
}

/// `y e^{-sqrt 2 y} z`.
pub fn w_scale(y: f64, z: u64) -> f64 {
    y * (-CRITICAL_DRIFT * y).exp() * z as f64
}

/// Runs `replicates` independent draws of `Z_y`, replicate `r` on its own
/// stream, in parallel when `parallel` is set. Output order is replicate order.
pub fn estimate_w_samples(cfg: &ZyConfig, replicates: usize, seed: u64, parallel: bool) -> Result<ZyExperiment> {
    let one = |r: usize| simulate_zy(cfg, &mut StreamRng::replicate(seed, r as u64));
    let outcomes: Vec<ZyOutcome> = if parallel {
        (0..replicates).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..replicates).map(one).collect::<Result<_>>()?
    };
    let mut exp = ZyExperiment {
        y: cfg.y,
        replicates,
        seed,
        zy_samples: Vec::with_capacity(replicates),
        w_samples: Vec::with_capacity(replicates),
        horizon_flagged: 0,
        cap_flagged: 0,
    };
    for o in outcomes {
        match o {
            ZyOutcome::Count(z) => {
                exp.zy_samples.push(z);
                exp.w_samples.push(w_scale(cfg.y, z));
            }
            ZyOutcome::HorizonExceeded => exp.horizon_flagged += 1,
            ZyOutcome::CountCapExceeded => exp.cap_flagged += 1,
        }
    }
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_particle_is_eventually_absorbed() {
        let cfg = ZyConfig::new(2.0).unwrap();
        for r in 0..200 {
            match simulate_zy(&cfg, &mut StreamRng::replicate(9, r)).unwrap() {
                ZyOutcome::Count(z) => assert!(z >= 1),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn tiny_horizon_flags() {
        let cfg = ZyConfig::new(3.0).unwrap().with_horizon(1e-3);
        let o = simulate_zy(&cfg, &mut StreamRng::new(1, 1)).unwrap();
        assert_eq!(o, ZyOutcome::HorizonExceeded);
    }

    #[test]
    fn count_cap_flags() {
        let cfg = ZyConfig::new(4.0).unwrap().with_max_count(1);
        let o = simulate_zy(&cfg, &mut StreamRng::new(1, 2)).unwrap();
        assert_eq!(o, ZyOutcome::CountCapExceeded);
    }

    #[test]
    fn parallel_matches_serial() {
        let cfg = ZyConfig::new(3.0).unwrap();
        let a = estimate_w_samples(&cfg, 64, 5, false).unwrap();
        let b = estimate_w_samples(&cfg, 64, 5, true).unwrap();
        assert_eq!(a, b);
        assert!((a.w_samples[0] - w_scale(3.0, a.zy_samples[0])).abs() == 0.0);
    }

    #[test]
    fn rejects_bad_depth() {
        assert!(ZyConfig::new(0.0).is_err());
        assert!(ZyConfig::new(f64::NAN).is_err());
    }
}
