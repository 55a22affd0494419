//! Cycle-level performance and energy model of a reconfigurable rendering
//! accelerator: a PE array whose per-PE buffers, reduction network, and
//! control are re-purposed per micro-operator.

pub mod array;
pub mod config;
pub mod cost;
pub mod energy;
pub mod mapping;
pub mod sweep;

pub use array::{configure_array, ff_capacity_check, peak_macs_per_cycle, ArrayState, FfFit};
pub use config::{
    ArchConfig, ArchError, ArrayGeometry, EnergyConstants, ModelConstants, PeResources,
};
pub use cost::{op_counts, roofline_bound, simulate, Bound, CostReport, NodeCost, OpCounts};
pub use energy::{estimate_energy, EnergyReport, EnergyTallies};
pub use mapping::{map_microop, partition_viewport, plan_traffic, MappingPlan};
pub use sweep::{run_sweep, SweepCell, SweepTable};
