//! Event-driven branching Brownian motion with absorption at 0.
//!
//! Each particle carries an exact exponential branching clock and its own
//! random stream. Between checkpoints every particle's subtree is simulated
//! depth first, which keeps the output in lexicographic label order and makes
//! the result independent of how particles are spread over threads.

mod config;
mod kernel;
mod occupation;
mod profile;
mod run;
mod system;

pub use config::{Dynamics, GenealogyDetail, InitialCondition, RightBarrier, SiblingOrder, SimConfig};
pub use kernel::{bridge_hit_probability, exp_clock, gaussian, strip_bridge_survival, substep, Crossing};
pub use occupation::occupation_time;
pub use profile::{sample_stable_profile, stable_profile_cdf};
pub use run::{run, HitLog, RunOutput, RunStatus, TrajectoryRow};
pub use system::{statistics_of, EventCounts, ParticleSystem, Statistics};
