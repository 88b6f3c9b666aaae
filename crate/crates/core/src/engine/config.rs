use serde::{Deserialize, Serialize};

use crate::analytics::ModelParams;
use crate::error::{invalid, Result};

/// Motion and branching of a single particle, plus the level used by `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    /// Particles drift to the left at this rate.
    pub mu: f64,
    pub branch_rate: f64,
    /// `L` in `Z = sum e^{mu x} sin(pi x / L) 1{x <= L}`.
    pub z_level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "level", rename_all = "snake_case")]
pub enum RightBarrier {
    None,
    KillAt(f64),
    /// Particles are not removed; the first arrival of each lineage is logged.
    RecordHits(f64),
}

impl RightBarrier {
    pub fn level(&self) -> Option<f64> {
        match *self {
            RightBarrier::None => None,
            RightBarrier::KillAt(l) | RightBarrier::RecordHits(l) => Some(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `n` draws from the density proportional to `e^{-mu y} sin(pi y / L)` on `(0, L)`.
    StableProfile { n: usize },
    PointMass { x: f64, count: usize },
    Explicit { positions: Vec<f64> },
}

impl InitialCondition {
    pub fn count(&self) -> usize {
        match self {
            InitialCondition::StableProfile { n } => *n,
            InitialCondition::PointMass { count, .. } => *count,
            InitialCondition::Explicit { positions } => positions.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenealogyDetail {
    Off,
    /// Parent indices and positions at every checkpoint.
    #[default]
    Ancestry,
    /// As `Ancestry`, plus particle birth ids.
    Full,
}

/// How the two particles produced by a branching event are ordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiblingOrder {
    /// The continuing particle precedes the new one.
    #[default]
    BirthOrder,
    /// A fair coin decides.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dynamics: Dynamics,
    pub dt_max: f64,
    pub horizon: f64,
    pub checkpoint_times: Vec<f64>,
    pub right_barrier: RightBarrier,
    pub init: InitialCondition,
    pub seed: u64,
    pub max_particles: usize,
    pub genealogy: GenealogyDetail,
    pub sibling_order: SiblingOrder,
    /// Evolve particles on the rayon pool. Output does not depend on this.
    pub parallel: bool,
}

impl SimConfig {
    /// The near-critical system: drift `mu`, `Z` measured against `L`, killing at `L_A`.
    pub fn from_params(p: &ModelParams, init: InitialCondition, horizon: f64, checkpoints: Vec<f64>) -> Self {
        Self {
            dynamics: Dynamics {
                mu: p.mu,
                branch_rate: 1.0,
                z_level: p.l,
            },
            dt_max: 1.0,
            horizon,
            checkpoint_times: checkpoints,
            right_barrier: RightBarrier::KillAt(p.l_a),
            init,
            seed: 0,
            max_particles: 50_000_000,
            genealogy: GenealogyDetail::Ancestry,
            sibling_order: SiblingOrder::BirthOrder,
            parallel: false,
        }
    }

    /// Branching BBM killed at 0 and `k`, with `Z` measured against `k`.
    pub fn strip(mu: f64, k: f64, init: InitialCondition, horizon: f64) -> Self {
        Self {
            dynamics: Dynamics {
                mu,
                branch_rate: 1.0,
                z_level: k,
            },
            dt_max: 1.0,
            horizon,
            checkpoint_times: vec![horizon],
            right_barrier: RightBarrier::KillAt(k),
            init,
            seed: 0,
            max_particles: 50_000_000,
            genealogy: GenealogyDetail::Off,
            sibling_order: SiblingOrder::BirthOrder,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dynamics;
        if !d.mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        if !(d.branch_rate >= 0.0 && d.branch_rate.is_finite()) {
            return Err(invalid("branch_rate", "must be nonnegative"));
        }
        if !(d.z_level > 0.0) {
            return Err(invalid("z_level", "must be positive"));
        }
        if !(self.dt_max > 0.0) {
            return Err(invalid("dt_max", format!("must be positive, got {}", self.dt_max)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be nonnegative and finite"));
        }
        let mut prev = -1.0;
        for &t in &self.checkpoint_times {
            if !(t > prev) || t > self.horizon || t < 0.0 {
                return Err(invalid(
                    "checkpoint_times",
                    "must be strictly increasing and inside [0, horizon]",
                ));
            }
            prev = t;
        }
        if let Some(l) = self.right_barrier.level() {
            if !(l > 0.0) {
                return Err(invalid("right_barrier", "level must be positive"));
            }
        }
        let n = self.init.count();
        if n > self.max_particles {
            return Err(invalid("max_particles", format!("{} is below the initial count {n}", self.max_particles)));
        }
        let upper = match self.right_barrier {
            RightBarrier::KillAt(l) => l,
            _ => f64::INFINITY,
        };
        let check = |x: f64| -> Result<()> {
            if !(x > 0.0 && x < upper) {
                return Err(invalid("init", format!("position {x} outside (0, {upper})")));
            }
            Ok(())
        };
        match &self.init {
            InitialCondition::StableProfile { .. } => {}
            InitialCondition::PointMass { x, .. } => check(*x)?,
            InitialCondition::Explicit { positions } => {
                for &x in positions {
                    check(x)?;
                }
            }
        }
        Ok(())
    }
}
