//! Analytic cycle-cost model.
//!
//! Nodes execute serially (no inter-node pipelining). Each node's cycle
//! count is the larger of a compute estimate and a memory estimate:
//!
//! * compute: peak-issue time over the node's dominant ALU class, plus
//!   array fill/drain per wave and one stream-buffer turnaround per phase;
//!   GEMM pays one extra output-buffer stage per weight wave.
//! * memory: DRAM traffic over the bandwidth pipe, plus the fixed request
//!   latency once per burst. Streamed boundary I/O is double-buffered
//!   behind compute, so it pays the latency once; a resident operand that
//!   outgrows its SRAM share must be re-fetched every phase and pays the
//!   latency every phase.
//!
//! Inputs stream through a bounded share of global SRAM
//! ([`ModelConstants::stream_buffer_fraction`]), which splits a node's
//! execution into phases. GEMM weights are pinned PE-side and therefore
//! cross DRAM exactly once no matter how many phases or waves run.
//! Reconfiguration is charged between consecutive nodes of different
//! kinds: a fixed control cost, plus FF-pad reload time when the incoming
//! operator pins weights.

use crate::config::{ArchConfig, ArchError};
use crate::energy::EnergyTallies;
use crate::mapping::map_microop;
use nrsim_core::ir::{GeometryMode, MicroOpKind, MicroOpNode, PipelineGraph, Role, WorkDetail};
use serde::{Deserialize, Serialize};

// Hand-chosen per-element ALU issue counts for the fixed-function style
// operators. These set absolute scale only; relative scaling behavior comes
// from the workload statistics themselves.
const VERTEX_TRANSFORM_MACS: u64 = 16; // 4x4 matrix-vector per vertex
const VERTEX_SETUP_SFU: u64 = 1; // reciprocal-w per vertex
const COVER_TEST_INT_OPS: u64 = 8; // edge solve + compares per candidate pixel
const COVER_DEPTH_MACS: u64 = 4; // barycentric depth blend per candidate pixel
const SPLAT_PROJECT_MACS: u64 = 32; // covariance projection per gaussian
const SPLAT_PIXEL_MACS: u64 = 8; // quadratic-form alpha per candidate pixel
const SPLAT_PIXEL_INT_OPS: u64 = 4; // tile/bounds arithmetic per candidate pixel
const SPLAT_PIXEL_SFU: u64 = 1; // exponential per candidate pixel

/// ALU issue counts for one node, split by unit class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpCounts {
    pub int16_ops: u64,
    pub bf16_macs: u64,
    pub sfu_ops: u64,
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// Derive ALU issue counts from a node's workload statistics.
pub fn op_counts(node: &MicroOpNode) -> OpCounts {
    match &node.workload.detail {
        WorkDetail::Geometric {
            vertices,
            primitives,
            coverage_estimate,
            mode,
        } => match mode {
            GeometryMode::Rasterize => OpCounts {
                int16_ops: coverage_estimate * COVER_TEST_INT_OPS,
                bf16_macs: vertices * VERTEX_TRANSFORM_MACS + coverage_estimate * COVER_DEPTH_MACS,
                sfu_ops: vertices * VERTEX_SETUP_SFU,
            },
            GeometryMode::Splat => OpCounts {
                int16_ops: coverage_estimate * SPLAT_PIXEL_INT_OPS,
                bf16_macs: primitives * SPLAT_PROJECT_MACS + coverage_estimate * SPLAT_PIXEL_MACS,
                sfu_ops: primitives + coverage_estimate * SPLAT_PIXEL_SFU,
            },
        },
        WorkDetail::Grid {
            queries,
            levels,
            feature_width,
            corners,
            int_ops_per_corner,
            ..
        } => {
            let lookups = queries * *levels as u64 * *corners as u64;
            OpCounts {
                int16_ops: lookups * *int_ops_per_corner as u64,
                // Interpolation: one MAC per feature channel plus the
                // per-corner weight product at each corner.
                bf16_macs: lookups * (*feature_width as u64 + 2),
                sfu_ops: 0,
            }
        }
        WorkDetail::Sort { patches, elements } => {
            if *elements == 0 {
                return OpCounts::default();
            }
            let per_patch = (elements / patches.max(&1)).max(2);
            OpCounts {
                // Comparator issues for a merge sort of each patch.
                int16_ops: elements * ceil_log2(per_patch),
                bf16_macs: 0,
                sfu_ops: 0,
            }
        }
        WorkDetail::Gemm { macs, sfu_ops, .. } => OpCounts {
            int16_ops: 0,
            bf16_macs: *macs,
            sfu_ops: *sfu_ops,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Compute,
    Memory,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::Compute => "compute",
            Bound::Memory => "memory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCost {
    pub index: usize,
    pub kind: MicroOpKind,
    pub role: Role,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub bound: Bound,
    /// max(compute, memory): nodes run serially.
    pub cycles: u64,
    /// Stream-buffer refills this node's input takes.
    pub phases: u64,
    /// FF-pad weight waves (GEMM; 1 elsewhere).
    pub waves: u64,
    pub dram_bytes: u64,
    pub sram_word_accesses: u64,
    pub ops: OpCounts,
    /// Achieved fraction of peak issue on the node's dominant ALU class.
    pub utilization: f64,
    pub active_pes: u64,
}

/// One array reconfiguration between consecutive nodes of different kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconfigStep {
    pub before_node: usize,
    pub from: MicroOpKind,
    pub to: MicroOpKind,
    pub ff_reload_bytes: u64,
    pub cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub nodes: Vec<NodeCost>,
    pub reconfigs: Vec<ReconfigStep>,
    pub total_cycles: u64,
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub reconfig_cycles: u64,
    pub dram_bytes: u64,
    pub sram_word_accesses: u64,
    /// Aggregate event counts for the energy model.
    pub tallies: EnergyTallies,
    /// Whole-graph fraction of peak compute achieved.
    pub utilization: f64,
    /// clock / total cycles; `None` when the graph does no work.
    pub fps: Option<f64>,
}

fn div_ceil_f(bytes: u64, rate: f64) -> u64 {
    (bytes as f64 / rate).ceil() as u64
}

/// Ideal lower bounds in cycles (compute-limited, memory-limited) ignoring
/// fill/drain, phase turnarounds, re-fetch, and reconfiguration. The memory
/// bound assumes every unique byte crosses DRAM exactly once.
pub fn roofline_bound(node: &MicroOpNode, config: &ArchConfig) -> (f64, f64) {
    let pes = config.geometry.pes() as f64;
    let ops = op_counts(node);
    let compute = [
        ops.int16_ops as f64 / (pes * config.pe.int16_macs as f64),
        ops.bf16_macs as f64 / (pes * config.pe.bf16_macs as f64),
        ops.sfu_ops as f64 / (pes * config.pe.sfus as f64),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    let w = &node.workload;
    let unique_bytes = w.external_in_bytes + w.external_out_bytes + w.asset_bytes;
    let memory = unique_bytes as f64 / config.geometry.dram_bytes_per_cycle();
    (compute, memory)
}

fn node_cost(index: usize, node: &MicroOpNode, config: &ArchConfig) -> Result<NodeCost, ArchError> {
    let geo = &config.geometry;
    let pes = geo.pes();
    let plan = map_microop(node, geo, &config.pe)?;
    let ops = op_counts(node);

    let lane_cycles = |count: u64, per_pe: u32| count.div_ceil(pes * per_pe as u64);
    let core = lane_cycles(ops.int16_ops, config.pe.int16_macs)
        .max(lane_cycles(ops.bf16_macs, config.pe.bf16_macs))
        .max(lane_cycles(ops.sfu_ops, config.pe.sfus));

    let window =
        ((geo.sram_bytes as f64 * config.model.stream_buffer_fraction).floor() as u64).max(1);
    let stream_bytes = node.workload.elements_in * node.workload.stream_item_bytes() as u64;
    let phases = stream_bytes.div_ceil(window).max(1);

    let is_gemm = node.kind == MicroOpKind::Gemm;
    let waves = if is_gemm {
        plan.ff_reload_tiles.max(1)
    } else {
        1
    };
    let fill_drain = (geo.rows as u64 + geo.cols as u64) * waves + phases;
    let buffer_stages = if is_gemm { waves } else { 0 };
    let compute_cycles = core + fill_drain + buffer_stages;

    let w = &node.workload;
    let resident_limit =
        (geo.sram_bytes as f64 * config.model.asset_resident_fraction).floor() as u64;
    // GEMM operands are PE-resident (weight-stationary): fetched once.
    // Other resident operands stay in SRAM when they fit its asset share,
    // else they stream in again every phase.
    let refetch = !is_gemm && w.asset_bytes > resident_limit;
    let asset_traffic = if refetch {
        w.asset_bytes * phases
    } else {
        w.asset_bytes
    };
    let dram_bytes = w.external_in_bytes + w.external_out_bytes + asset_traffic;
    let bursts = if dram_bytes == 0 {
        0
    } else if refetch {
        phases
    } else {
        1
    };
    let memory_cycles =
        div_ceil_f(dram_bytes, geo.dram_bytes_per_cycle()) + geo.dram_latency_cycles * bursts;

    let cycles = compute_cycles.max(memory_cycles);
    let bound = if compute_cycles >= memory_cycles {
        Bound::Compute
    } else {
        Bound::Memory
    };
    let (compute_lb, _) = roofline_bound(node, config);
    let utilization = if cycles == 0 {
        0.0
    } else {
        (compute_lb / cycles as f64).clamp(0.0, 1.0)
    };

    let streamed_words =
        w.elements_in * w.input_width as u64 + w.elements_out * w.output_width as u64;
    let sram_word_accesses = streamed_words + dram_bytes.div_ceil(2);

    Ok(NodeCost {
        index,
        kind: node.kind,
        role: node.role,
        compute_cycles,
        memory_cycles,
        bound,
        cycles,
        phases,
        waves,
        dram_bytes,
        sram_word_accesses,
        ops,
        utilization,
        active_pes: plan.active_pes,
    })
}

fn reconfig_cost(
    before_node: usize,
    from: &MicroOpNode,
    to: &MicroOpNode,
    config: &ArchConfig,
) -> ReconfigStep {
    // Operators that pin state in FF pads must refill them through the SRAM
    // fill path; streaming operators (grid tables, geometry, sort keys) load
    // their working set per phase as part of normal execution instead.
    let ff_reload_bytes = if to.kind == MicroOpKind::Gemm {
        let capacity = config.pe.ff_pad_bytes * config.geometry.pes();
        to.workload.asset_bytes.min(capacity)
    } else {
        0
    };
    let cycles = ff_reload_bytes.div_ceil(config.model.sram_fill_bytes_per_cycle)
        + config.model.reconfig_control_cycles;
    ReconfigStep {
        before_node,
        from: from.kind,
        to: to.kind,
        ff_reload_bytes,
        cycles,
    }
}

/// Cost the whole graph on one configuration. Nodes run serially in graph
/// order; reconfiguration is charged at every kind change along the chain.
pub fn simulate(graph: &PipelineGraph, config: &ArchConfig) -> Result<CostReport, ArchError> {
    config.validate()?;

    let mut nodes = Vec::with_capacity(graph.nodes.len());
    for (i, node) in graph.nodes.iter().enumerate() {
        nodes.push(node_cost(i, node, config)?);
    }

    let mut reconfigs = Vec::new();
    for i in 1..graph.nodes.len() {
        let (prev, next) = (&graph.nodes[i - 1], &graph.nodes[i]);
        if prev.kind != next.kind {
            reconfigs.push(reconfig_cost(i, prev, next, config));
        }
    }

    let compute_cycles = nodes.iter().map(|n| n.compute_cycles).sum();
    let memory_cycles = nodes.iter().map(|n| n.memory_cycles).sum();
    let reconfig_cycles = reconfigs.iter().map(|r| r.cycles).sum::<u64>();
    let node_cycles: u64 = nodes.iter().map(|n| n.cycles).sum();
    let total_cycles = node_cycles + reconfig_cycles;
    let dram_bytes = nodes.iter().map(|n| n.dram_bytes).sum();
    let sram_word_accesses = nodes.iter().map(|n| n.sram_word_accesses).sum();

    let tallies = EnergyTallies {
        int16_macs: nodes.iter().map(|n| n.ops.int16_ops).sum(),
        bf16_macs: nodes.iter().map(|n| n.ops.bf16_macs).sum(),
        sfu_ops: nodes.iter().map(|n| n.ops.sfu_ops).sum(),
        sram_word_accesses,
        dram_bytes,
    };

    let ideal: f64 = graph
        .nodes
        .iter()
        .map(|n| roofline_bound(n, config).0)
        .sum();
    let utilization = if total_cycles == 0 {
        0.0
    } else {
        (ideal / total_cycles as f64).clamp(0.0, 1.0)
    };
    let fps = if total_cycles == 0 {
        None
    } else {
        Some(config.geometry.clock_hz / total_cycles as f64)
    };

    Ok(CostReport {
        nodes,
        reconfigs,
        total_cycles,
        compute_cycles,
        memory_cycles,
        reconfig_cycles,
        dram_bytes,
        sram_word_accesses,
        tallies,
        utilization,
        fps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nrsim_core::ir::{
        AccessPattern, IndexDim, IndexFunction, IndexItem, IndexingTask, ReductionTask, Workload,
    };
    use nrsim_core::scene::PipelineKind;

    fn gemm_ref_node() -> MicroOpNode {
        // 1024x64 activations times 64x64 weights.
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
                elements_in: 1024,
                elements_out: 1024,
                input_width: 64,
                output_width: 64,
                external_in_bytes: 1024 * 64 * 2,
                external_out_bytes: 1024 * 64 * 2,
                asset_bytes: 64 * 64 * 2,
                detail: WorkDetail::Gemm {
                    batch: 1024,
                    layer_dims: vec![(64, 64)],
                    macs: 1024 * 64 * 64,
                    sfu_ops: 0,
                    tiles: 1,
                },
            },
        }
    }

    fn single_node_graph(node: MicroOpNode) -> PipelineGraph {
        PipelineGraph {
            kind: PipelineKind::Mlp,
            nodes: vec![node],
            edges: vec![],
        }
    }

    #[test]
    fn gemm_reference_case_is_memory_bound_near_the_bandwidth_roofline() {
        let config = ArchConfig::default();
        let node = gemm_ref_node();
        let (compute_lb, memory_lb) = roofline_bound(&node, &config);
        assert_eq!(compute_lb, 4096.0);
        assert!((memory_lb - 270_336.0 / 59.7).abs() < 1e-6);

        let report = simulate(&single_node_graph(node), &config).unwrap();
        let n = &report.nodes[0];
        assert_eq!(n.bound, Bound::Memory);
        // Within 5% of the hand-derived 4529-cycle bandwidth bound.
        let bound = 4529.0;
        assert!(
            (n.cycles as f64 - bound).abs() / bound < 0.05,
            "{} vs {bound}",
            n.cycles
        );
        assert!(n.cycles as f64 >= compute_lb);
        assert!(n.cycles as f64 >= memory_lb);
    }

    #[test]
    fn doubling_bandwidth_halves_the_memory_bound_exactly() {
        let config = ArchConfig::default();
        let mut fast = config;
        fast.geometry.dram_bytes_per_sec *= 2.0;
        let node = gemm_ref_node();
        let (_, m1) = roofline_bound(&node, &config);
        let (_, m2) = roofline_bound(&node, &fast);
        assert_eq!(m2, m1 / 2.0);
    }

    #[test]
    fn more_bandwidth_never_costs_cycles() {
        let node = gemm_ref_node();
        let graph = single_node_graph(node);
        let base = ArchConfig::default();
        let mut prev = simulate(&graph, &base).unwrap().total_cycles;
        for mult in [1.5, 2.0, 4.0, 16.0] {
            let mut c = base;
            c.geometry.dram_bytes_per_sec *= mult;
            let total = simulate(&graph, &c).unwrap().total_cycles;
            assert!(
                total <= prev,
                "bandwidth x{mult} raised cycles {prev} -> {total}"
            );
            prev = total;
        }
    }

    #[test]
    fn zero_work_node_has_zero_rooflines() {
        let mut node = gemm_ref_node();
        node.workload = Workload {
            elements_in: 0,
            elements_out: 0,
            input_width: 1,
            output_width: 1,
            external_in_bytes: 0,
            external_out_bytes: 0,
            asset_bytes: 0,
            detail: WorkDetail::Gemm {
                batch: 0,
                layer_dims: vec![(1, 1)],
                macs: 0,
                sfu_ops: 0,
                tiles: 1,
            },
        };
        assert_eq!(roofline_bound(&node, &ArchConfig::default()), (0.0, 0.0));
    }

    #[test]
    fn empty_graph_costs_nothing_and_fps_is_undefined() {
        let graph = PipelineGraph {
            kind: PipelineKind::Mesh,
            nodes: vec![],
            edges: vec![],
        };
        let report = simulate(&graph, &ArchConfig::default()).unwrap();
        assert_eq!(report.total_cycles, 0);
        assert_eq!(report.fps, None);
        assert!(report.reconfigs.is_empty());
    }

    #[test]
    fn single_node_graph_pays_no_reconfiguration() {
        let report = simulate(&single_node_graph(gemm_ref_node()), &ArchConfig::default()).unwrap();
        assert!(report.reconfigs.is_empty());
        assert_eq!(report.reconfig_cycles, 0);
    }

    #[test]
    fn kind_changes_along_the_chain_each_pay_once() {
        let gemm = gemm_ref_node();
        let grid = MicroOpNode {
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
                elements_in: 512,
                elements_out: 512,
                input_width: 3,
                output_width: 8,
                external_in_bytes: 0,
                external_out_bytes: 0,
                asset_bytes: 4096,
                detail: WorkDetail::Grid {
                    queries: 512,
                    levels: 4,
                    feature_width: 2,
                    corners: 8,
                    table_bytes_per_level: 1024,
                    int_ops_per_corner: 10,
                },
            },
        };
        let sort = MicroOpNode {
            kind: MicroOpKind::Sorting,
            indexing: IndexingTask {
                item: IndexItem::SortingKeys,
                dimension: IndexDim::D1,
                function: IndexFunction::AutomaticCounter,
            },
            reduction: ReductionTask {
                pattern: AccessPattern::Continuous,
            },
            role: Role::DepthSort,
            workload: Workload {
                elements_in: 300,
                elements_out: 300,
                input_width: 3,
                output_width: 3,
                external_in_bytes: 0,
                external_out_bytes: 0,
                asset_bytes: 0,
                detail: WorkDetail::Sort {
                    patches: 4,
                    elements: 300,
                },
            },
        };
        // gemm -> grid -> gemm -> gemm -> sort: three kind changes... four
        // boundaries, one of which (gemm -> gemm) is free.
        let graph = PipelineGraph {
            kind: PipelineKind::HashGrid,
            nodes: vec![gemm.clone(), grid, gemm.clone(), gemm, sort],
            edges: vec![],
        };
        let config = ArchConfig::default();
        let report = simulate(&graph, &config).unwrap();
        assert_eq!(report.reconfigs.len(), 3);
        // Incoming grid node reloads nothing; incoming GEMM reloads weights.
        assert_eq!(report.reconfigs[0].ff_reload_bytes, 0);
        assert_eq!(report.reconfigs[0].cycles, 100);
        assert_eq!(report.reconfigs[1].ff_reload_bytes, 8192);
        assert_eq!(report.reconfigs[1].cycles, 8192 / 64 + 100);
        assert_eq!(report.reconfigs[2].ff_reload_bytes, 0);
        let spent: u64 = report.reconfigs.iter().map(|r| r.cycles).sum();
        assert_eq!(report.reconfig_cycles, spent);
    }

    #[test]
    fn every_node_respects_its_rooflines() {
        let graph = PipelineGraph {
            kind: PipelineKind::HashGrid,
            nodes: vec![gemm_ref_node(), gemm_ref_node()],
            edges: vec![],
        };
        let config = ArchConfig::default();
        let report = simulate(&graph, &config).unwrap();
        for (node, cost) in graph.nodes.iter().zip(&report.nodes) {
            let (c, m) = roofline_bound(node, &config);
            assert!(cost.cycles as f64 >= c);
            assert!(cost.cycles as f64 >= m);
            assert!(cost.utilization >= 0.0 && cost.utilization <= 1.0);
        }
    }

    #[test]
    fn invalid_geometry_is_a_configuration_error() {
        let mut config = ArchConfig::default();
        config.geometry.clock_hz = 0.0;
        let err = simulate(&single_node_graph(gemm_ref_node()), &config).unwrap_err();
        assert!(matches!(err, ArchError::Config(_)));
        let mut config = ArchConfig::default();
        config.geometry.dram_bytes_per_sec = 0.0;
        assert!(simulate(&single_node_graph(gemm_ref_node()), &config).is_err());
    }

    #[test]
    fn ceil_log2_matches_small_cases() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
    }
}
