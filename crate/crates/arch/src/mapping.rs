//! Work assignment: how one micro-operator node's workload is spread over
//! the PE array.
//!
//! Each operator has a fixed mapping rule. Geometric processing gives every
//! PE a rectangle of pixels; combined-grid indexing gives every PE row one
//! resolution level; decomposed-grid indexing gives every row one plane;
//! sorting deals 16x16-pixel patches round-robin to PEs; GEMM pins weight
//! tiles in FF pads and streams activations through systolically. Plans are
//! pure data — the cost model consumes them, and they serialize for
//! golden-file diffing.

use crate::array::{ff_capacity_check, FfFit};
use crate::config::{ArchError, ArrayGeometry, PeResources};
use nrsim_core::ir::{MicroOpKind, MicroOpNode, WorkDetail};
use serde::{Deserialize, Serialize};

/// Kind-specific assignment of work units to PEs or PE lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Assignment {
    /// Every PE owns a near-equal block of pixels (geometric processing).
    PixelBlocks {
        pixels: u64,
        pixels_per_pe_max: u64,
        pixels_per_pe_min: u64,
    },
    /// Level (or plane) `l` runs on PE row `l mod rows`; when there are more
    /// levels than rows the rows are time-multiplexed level-major.
    RowPerLevel {
        levels: u32,
        passes: u32,
        /// Rows with no level assigned during the final pass.
        idle_rows: u32,
    },
    /// Unordered patches dealt round-robin to PEs.
    PatchRoundRobin {
        patches: u64,
        patches_per_pe_max: u64,
        patches_per_pe_min: u64,
    },
    /// Weight matrix resident across the array; each PE holds an equal slice
    /// and reloads `waves` times when the slice exceeds its FF pad.
    WeightStationary {
        weight_bytes: u64,
        bytes_per_pe: u64,
        waves: u64,
    },
}

/// How partial results are combined, constrained by the reduction-network
/// state of the operator's configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionTopology {
    None,
    PerRowAdderTree,
    RowThenColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingPlan {
    pub kind: MicroOpKind,
    pub assignment: Assignment,
    pub reduction: ReductionTopology,
    /// PEs (or PE rows x cols) that receive any work.
    pub active_pes: u64,
    pub total_pes: u64,
    /// Sequential FF-pad occupancies needed to cover the resident set.
    pub ff_reload_tiles: u64,
}

impl MappingPlan {
    /// Fraction of PEs that receive work; surplus rows or PEs idle.
    pub fn pe_occupancy(&self) -> f64 {
        if self.total_pes == 0 {
            return 0.0;
        }
        self.active_pes as f64 / self.total_pes as f64
    }
}

/// Split a viewport into the near-equal per-PE rectangles used by geometric
/// processing: columns split the width, rows split the height.
pub fn partition_viewport(width: u32, height: u32, geometry: &ArrayGeometry) -> (u32, u32) {
    (
        width.div_ceil(geometry.cols),
        height.div_ceil(geometry.rows),
    )
}

/// Build the mapping plan for one node. Zero-size workloads map to an empty
/// plan (no active PEs) rather than an error.
pub fn map_microop(
    node: &MicroOpNode,
    geometry: &ArrayGeometry,
    pe: &PeResources,
) -> Result<MappingPlan, ArchError> {
    geometry.validate()?;
    let total_pes = geometry.pes();
    let plan = match &node.workload.detail {
        WorkDetail::Geometric { .. } => {
            let pixels = node.workload.elements_out;
            let max = pixels.div_ceil(total_pes);
            let min = pixels / total_pes;
            MappingPlan {
                kind: node.kind,
                assignment: Assignment::PixelBlocks {
                    pixels,
                    pixels_per_pe_max: max,
                    pixels_per_pe_min: min,
                },
                reduction: ReductionTopology::None,
                active_pes: pixels.min(total_pes),
                total_pes,
                ff_reload_tiles: 1,
            }
        }
        WorkDetail::Grid {
            levels,
            table_bytes_per_level,
            ..
        } => {
            let rows = geometry.rows;
            let passes = levels.div_ceil(rows).max(1);
            let occupied_last_pass = if *levels == 0 {
                0
            } else {
                levels - (passes - 1) * rows
            };
            let idle_rows = rows - occupied_last_pass.min(rows);
            // A level's table is striped across its row's PEs.
            let bytes_per_pe = table_bytes_per_level.div_ceil(geometry.cols as u64);
            let tiles_per_level = ff_capacity_check(pe.ff_pad_bytes, bytes_per_pe).tile_count();
            let reduction = if node.kind == MicroOpKind::DecomposedGridIndexing {
                ReductionTopology::RowThenColumn
            } else {
                ReductionTopology::PerRowAdderTree
            };
            MappingPlan {
                kind: node.kind,
                assignment: Assignment::RowPerLevel {
                    levels: *levels,
                    passes,
                    idle_rows,
                },
                reduction,
                active_pes: (*levels).min(rows) as u64 * geometry.cols as u64,
                total_pes,
                ff_reload_tiles: *levels as u64 * tiles_per_level,
            }
        }
        WorkDetail::Sort { patches, .. } => {
            let max = patches.div_ceil(total_pes);
            let min = patches / total_pes;
            MappingPlan {
                kind: node.kind,
                assignment: Assignment::PatchRoundRobin {
                    patches: *patches,
                    patches_per_pe_max: max,
                    patches_per_pe_min: min,
                },
                reduction: ReductionTopology::None,
                active_pes: (*patches).min(total_pes),
                total_pes,
                ff_reload_tiles: 1,
            }
        }
        WorkDetail::Gemm { batch, .. } => {
            let weight_bytes = node.workload.asset_bytes;
            let bytes_per_pe = weight_bytes.div_ceil(total_pes);
            let waves = match ff_capacity_check(pe.ff_pad_bytes, bytes_per_pe) {
                FfFit::Fits => 1,
                FfFit::Tiles(n) => n,
            };
            MappingPlan {
                kind: node.kind,
                assignment: Assignment::WeightStationary {
                    weight_bytes,
                    bytes_per_pe,
                    waves,
                },
                reduction: ReductionTopology::None,
                active_pes: if *batch == 0 { 0 } else { total_pes },
                total_pes,
                ff_reload_tiles: waves,
            }
        }
    };
    Ok(plan)
}

/// Conservative DRAM/SRAM byte accounting implied by a plan: every unique
/// operand crosses the DRAM boundary at most once per FF tile phase, outputs
/// are written once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficSummary {
    pub dram_in_bytes: u64,
    pub dram_out_bytes: u64,
    /// 16-bit word movements through on-chip memories.
    pub sram_word_accesses: u64,
    pub ff_reloads: u64,
}

pub fn plan_traffic(plan: &MappingPlan, node: &MicroOpNode) -> TrafficSummary {
    let w = &node.workload;
    let asset_fetches = match plan.assignment {
        // Weight-stationary: each weight enters exactly once regardless of
        // how many waves it takes to cycle through the FF pads.
        Assignment::WeightStationary { .. } => 1,
        _ => plan.ff_reload_tiles.max(1),
    };
    let asset_bytes_moved = match plan.assignment {
        Assignment::RowPerLevel { levels, .. } if levels > 0 => {
            // Each level's table arrives once per tile of its own schedule;
            // ff_reload_tiles counts tiles summed over levels.
            (w.asset_bytes / levels as u64) * plan.ff_reload_tiles.max(1)
        }
        Assignment::WeightStationary { .. } => w.asset_bytes,
        _ => w.asset_bytes * asset_fetches,
    };
    let dram_in_bytes = w.external_in_bytes + asset_bytes_moved;
    let dram_out_bytes = w.external_out_bytes;
    let streamed_words =
        w.elements_in * w.input_width as u64 + w.elements_out * w.output_width as u64;
    let sram_word_accesses = streamed_words + (dram_in_bytes + dram_out_bytes).div_ceil(2);
    TrafficSummary {
        dram_in_bytes,
        dram_out_bytes,
        sram_word_accesses,
        ff_reloads: plan.ff_reload_tiles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nrsim_core::ir::{
        AccessPattern, IndexDim, IndexFunction, IndexItem, IndexingTask, ReductionTask, Role,
        Workload,
    };

    fn gemm_node(batch: u64, k: u32, n: u32) -> MicroOpNode {
        let macs = batch * k as u64 * n as u64;
        MicroOpNode {
            kind: MicroOpKind::Gemm,
            indexing: IndexingTask {
                item: IndexItem::Scalars,
                dimension: IndexDim::D2,
                function: IndexFunction::AutomaticCounter,
            },
            reduction: ReductionTask {
                pattern: AccessPattern::Continuous,
            },
            role: Role::MlpInference,
            workload: Workload {
                elements_in: batch,
                elements_out: batch,
                input_width: k,
                output_width: n,
                external_in_bytes: batch * k as u64 * 2,
                external_out_bytes: batch * n as u64 * 2,
                asset_bytes: k as u64 * n as u64 * 2,
                detail: WorkDetail::Gemm {
                    batch,
                    layer_dims: vec![(k, n)],
                    macs,
                    sfu_ops: 0,
                    tiles: 1,
                },
            },
        }
    }

    fn grid_node(queries: u64, levels: u32, table_bytes_per_level: u64) -> MicroOpNode {
        MicroOpNode {
            kind: MicroOpKind::CombinedGridIndexing,
            indexing: IndexingTask {
                item: IndexItem::Features,
                dimension: IndexDim::D3,
                function: IndexFunction::RandomHash,
            },
            reduction: ReductionTask {
                pattern: AccessPattern::Discrete,
            },
            role: Role::GridLookup,
            workload: Workload {
                elements_in: queries,
                elements_out: queries,
                input_width: 3,
                output_width: levels * 2,
                external_in_bytes: 0,
                external_out_bytes: 0,
                asset_bytes: levels as u64 * table_bytes_per_level,
                detail: WorkDetail::Grid {
                    queries,
                    levels,
                    feature_width: 2,
                    corners: 8,
                    table_bytes_per_level,
                    int_ops_per_corner: 10,
                },
            },
        }
    }

    #[test]
    fn hd_viewport_splits_into_80_by_45_blocks() {
        assert_eq!(
            partition_viewport(1280, 720, &ArrayGeometry::default()),
            (80, 45)
        );
    }

    #[test]
    fn sixteen_levels_on_sixteen_rows_take_one_pass() {
        let node = grid_node(1000, 16, 1 << 12);
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        match plan.assignment {
            Assignment::RowPerLevel {
                levels,
                passes,
                idle_rows,
            } => {
                assert_eq!((levels, passes, idle_rows), (16, 1, 0));
            }
            other => panic!("wrong assignment {other:?}"),
        }
        assert_eq!(plan.reduction, ReductionTopology::PerRowAdderTree);
        assert_eq!(plan.pe_occupancy(), 1.0);
    }

    #[test]
    fn surplus_rows_idle_and_show_in_occupancy() {
        let mut node = grid_node(1000, 3, 256);
        node.kind = MicroOpKind::DecomposedGridIndexing;
        node.indexing.function = IndexFunction::LinearIndexing;
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        match plan.assignment {
            Assignment::RowPerLevel {
                passes, idle_rows, ..
            } => {
                assert_eq!(passes, 1);
                assert_eq!(idle_rows, 13);
            }
            other => panic!("wrong assignment {other:?}"),
        }
        assert_eq!(plan.reduction, ReductionTopology::RowThenColumn);
        assert!((plan.pe_occupancy() - 3.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn more_levels_than_rows_time_multiplex() {
        let node = grid_node(1000, 20, 256);
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        match plan.assignment {
            Assignment::RowPerLevel {
                passes, idle_rows, ..
            } => {
                assert_eq!(passes, 2);
                assert_eq!(idle_rows, 12); // second pass runs levels 16..20
            }
            other => panic!("wrong assignment {other:?}"),
        }
    }

    #[test]
    fn gemm_weights_fitting_one_tile_are_fetched_once() {
        let node = gemm_node(1024, 64, 64);
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        match plan.assignment {
            Assignment::WeightStationary {
                weight_bytes,
                bytes_per_pe,
                waves,
            } => {
                assert_eq!(weight_bytes, 8192);
                assert_eq!(bytes_per_pe, 32);
                assert_eq!(waves, 1);
            }
            other => panic!("wrong assignment {other:?}"),
        }
        let traffic = plan_traffic(&plan, &node);
        assert_eq!(traffic.dram_in_bytes, 1024 * 64 * 2 + 64 * 64 * 2);
        assert_eq!(traffic.dram_out_bytes, 1024 * 64 * 2);
    }

    #[test]
    fn oversized_weight_slices_need_multiple_waves_but_one_fetch() {
        // 16x16 array, 4096-byte pads: capacity 1 MiB; 3 MiB of weights.
        let mut node = gemm_node(128, 64, 64);
        node.workload.asset_bytes = 3 * (1 << 20);
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        match plan.assignment {
            Assignment::WeightStationary { waves, .. } => assert_eq!(waves, 3),
            other => panic!("wrong assignment {other:?}"),
        }
        let traffic = plan_traffic(&plan, &node);
        assert_eq!(
            traffic.dram_in_bytes,
            node.workload.external_in_bytes + 3 * (1 << 20)
        );
    }

    #[test]
    fn per_level_tables_exceeding_pads_reload_by_ceiling() {
        // Table of 70_000 bytes striped over 16 PEs: 4375 bytes/PE -> 2 tiles.
        let node = grid_node(1000, 4, 70_000);
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        let expected_tiles_per_level = 70_000u64.div_ceil(16).div_ceil(4096);
        assert_eq!(expected_tiles_per_level, 2);
        assert_eq!(plan.ff_reload_tiles, 4 * expected_tiles_per_level);
        let traffic = plan_traffic(&plan, &node);
        assert_eq!(traffic.dram_in_bytes, 70_000 * 8); // each level twice
    }

    #[test]
    fn pixels_partition_without_loss_or_duplication() {
        let node = MicroOpNode {
            kind: MicroOpKind::GeometricProcessing,
            indexing: IndexingTask {
                item: IndexItem::MeshGaussian,
                dimension: IndexDim::D1,
                function: IndexFunction::AutomaticCounter,
            },
            reduction: ReductionTask {
                pattern: AccessPattern::Continuous,
            },
            role: Role::Rasterization,
            workload: Workload {
                elements_in: 24,
                elements_out: 1000, // not divisible by 256
                input_width: 3,
                output_width: 2,
                external_in_bytes: 240,
                external_out_bytes: 0,
                asset_bytes: 0,
                detail: WorkDetail::Geometric {
                    vertices: 72,
                    primitives: 24,
                    coverage_estimate: 5000,
                    mode: nrsim_core::ir::GeometryMode::Rasterize,
                },
            },
        };
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        match plan.assignment {
            Assignment::PixelBlocks {
                pixels,
                pixels_per_pe_max,
                pixels_per_pe_min,
            } => {
                assert_eq!(pixels, 1000);
                // Load balance: extremes differ by at most one granule.
                assert!(pixels_per_pe_max - pixels_per_pe_min <= 1);
                // Partition property: the blocks can cover exactly the work.
                assert!(pixels_per_pe_min * 256 <= pixels && pixels <= pixels_per_pe_max * 256);
            }
            other => panic!("wrong assignment {other:?}"),
        }
    }

    #[test]
    fn zero_size_workload_maps_to_an_empty_plan() {
        let mut node = gemm_node(0, 8, 8);
        node.workload.asset_bytes = 0;
        node.workload.external_in_bytes = 0;
        node.workload.external_out_bytes = 0;
        let plan = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        let traffic = plan_traffic(&plan, &node);
        assert_eq!(traffic.dram_in_bytes, 0);
        assert_eq!(traffic.dram_out_bytes, 0);
        assert_eq!(traffic.sram_word_accesses, 0);
    }

    #[test]
    fn mapping_is_deterministic() {
        let node = grid_node(12_345, 7, 9999);
        let a = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        let b = map_microop(&node, &ArrayGeometry::default(), &PeResources::default()).unwrap();
        assert_eq!(a, b);
    }
}
