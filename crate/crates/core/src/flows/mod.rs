//! CSBP with `Psi(u) = a u + b u log u` through its flow of stable
//! subordinators, flow bridges and the partitions they induce.

mod bridge;
mod grid;
mod stable;

pub use bridge::{
    bridge_from_flow, bsz_partitions_from_flow, partition_from_flow_bridge, pd_stick_breaking, ranked_stable_gaps,
    FlowBridge, DEFAULT_GAP_COUNT,
};
pub use grid::FlowGrid;
pub use stable::{
    csbp_trajectory, format_ln_mass, ln_csbp_trajectory, ln_positive_stable, ln_s_increment, sample_positive_stable,
    sample_s_increment, StableSpec,
};

/// Clock rate in the duality statement between the flow and the
/// Bolthausen-Sznitman coalescent.
pub const DEFAULT_CLOCK_RATE: f64 = 2.0 * std::f64::consts::PI;
