//! CSV and structured-text serializations of cost reports and sweep tables.
//!
//! Every CSV starts with a schema comment line so downstream consumers can
//! detect format drift instead of misparsing silently.

use std::fmt::Write as _;

use nrsim_arch::{configure_array, ArchConfig, CostReport, EnergyReport, SweepTable};
use nrsim_core::ir::PipelineGraph;

pub const COST_CSV_SCHEMA: &str = "# nrsim-cost-csv v1";
pub const SWEEP_CSV_SCHEMA: &str = "# nrsim-sweep-csv v1";

/// One row per node plus a `total` row carrying reconfiguration and FPS.
pub fn cost_csv(report: &CostReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{COST_CSV_SCHEMA}");
    let _ = writeln!(
        out,
        "node,kind,role,bound,cycles,compute_cycles,memory_cycles,phases,waves,reconfig_cycles,\
         dram_bytes,sram_word_accesses,int16_ops,bf16_macs,sfu_ops,utilization,fps"
    );
    for n in &report.nodes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},0,{},{},{},{},{},{:.6},",
            n.index,
            n.kind.name(),
            n.role.name(),
            n.bound.name(),
            n.cycles,
            n.compute_cycles,
            n.memory_cycles,
            n.phases,
            n.waves,
            n.dram_bytes,
            n.sram_word_accesses,
            n.ops.int16_ops,
            n.ops.bf16_macs,
            n.ops.sfu_ops,
            n.utilization,
        );
    }
    let fps = report.fps.map(|f| format!("{f:.6}")).unwrap_or_default();
    let _ = writeln!(
        out,
        "total,,,,{},{},{},,,{},{},{},{},{},{},{:.6},{}",
        report.total_cycles,
        report.compute_cycles,
        report.memory_cycles,
        report.reconfig_cycles,
        report.dram_bytes,
        report.sram_word_accesses,
        report.tallies.int16_macs,
        report.tallies.bf16_macs,
        report.tallies.sfu_ops,
        report.utilization,
        fps,
    );
    out
}

/// Human-oriented report: per-node costs with the module states each node
/// configures, reconfiguration charges, totals, and the energy estimate.
pub fn cost_text(
    graph: &PipelineGraph,
    report: &CostReport,
    energy: &EnergyReport,
    config: &ArchConfig,
) -> String {
    let mut out = String::new();
    let geo = &config.geometry;
    let _ = writeln!(out, "cost report: pipeline {}", graph.kind.name());
    let _ = writeln!(
        out,
        "array: {}x{} PEs @ {:.3} GHz, sram {} B, dram {:.1} B/cycle (latency {} cycles)",
        geo.rows,
        geo.cols,
        geo.clock_hz / 1e9,
        geo.sram_bytes,
        geo.dram_bytes_per_cycle(),
        geo.dram_latency_cycles,
    );
    let mut reconfigs = report.reconfigs.iter().peekable();
    for n in &report.nodes {
        if let Some(rc) = reconfigs.peek() {
            if rc.before_node == n.index {
                let _ = writeln!(
                    out,
                    "reconfigure: {} -> {}, ff reload {} B, {} cycles",
                    rc.from.name(),
                    rc.to.name(),
                    rc.ff_reload_bytes,
                    rc.cycles
                );
                reconfigs.next();
            }
        }
        let _ = writeln!(
            out,
            "node {} {} ({}): {}-bound, {} cycles (compute {}, memory {}), util {:.3}",
            n.index,
            n.kind.name(),
            n.role.name(),
            n.bound.name(),
            n.cycles,
            n.compute_cycles,
            n.memory_cycles,
            n.utilization,
        );
        let state = configure_array(n.kind, *geo);
        let _ = writeln!(
            out,
            "  modules: input={:?} reduction={:?} controller={:?} ff={:?} alu={:?} ps={:?} mode={:?}",
            state.input_network,
            state.reduction_network,
            state.controller,
            state.ff_role,
            state.alu,
            state.ps_role,
            state.mode,
        );
    }
    let _ = writeln!(
        out,
        "totals: {} cycles ({} reconfiguration), dram {} B, sram {} words",
        report.total_cycles, report.reconfig_cycles, report.dram_bytes, report.sram_word_accesses
    );
    match report.fps {
        Some(fps) => {
            let _ = writeln!(
                out,
                "throughput: {fps:.3} frames/s at {:.3} GHz",
                geo.clock_hz / 1e9
            );
        }
        None => {
            let _ = writeln!(out, "throughput: undefined (graph does no work)");
        }
    }
    let _ = writeln!(
        out,
        "energy: total {:.6e} J (int16 {:.3e}, bf16 {:.3e}, sfu {:.3e}, sram {:.3e}, dram {:.3e})",
        energy.total_joules,
        energy.int16_joules,
        energy.bf16_joules,
        energy.sfu_joules,
        energy.sram_joules,
        energy.dram_joules,
    );
    let _ = writeln!(out, "energy note: {}", energy.note);
    out
}

/// One row per (PE scale, SRAM scale) cell.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SWEEP_CSV_SCHEMA}");
    let _ = writeln!(
        out,
        "pe_scale,sram_scale,rows,cols,sram_bytes,total_cycles,relative_speed,fps"
    );
    for c in &table.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6}",
            c.pe_scale,
            c.sram_scale,
            c.rows,
            c.cols,
            c.sram_bytes,
            c.total_cycles,
            c.relative_speed,
            c.fps
        );
    }
    out
}
