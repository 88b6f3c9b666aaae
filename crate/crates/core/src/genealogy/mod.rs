//! Ancestral partitions, particle weights and discrete bridges.
//!
//! Generations in a [`GenealogyLog`] are stored in lexicographic label order,
//! so the descendants of any particle form a contiguous run of the next
//! generation. All bridge computations rely on that.

mod bridge;
mod log;
mod partition;
mod weights;

pub use bridge::{partition_from_bridge, Bridge};
pub use log::{GenealogyLog, Generation};
pub use partition::Partition;
pub use weights::{
    ancestor_map, ancestral_partition, ancestral_partition_at, assign_weights, label_path,
    terminal_rank, weights_from_values, WeightedLog, Weights,
};
