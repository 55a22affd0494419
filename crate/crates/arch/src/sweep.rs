//! Design-space sweep: cost one pipeline across PE-array and SRAM scale
//! factors {1, 2, 4} and report speeds relative to the base point.
//!
//! The interesting property of the resulting 3x3 table is that balanced
//! growth wins: for a given size class (the larger of the two scale
//! factors), the balanced cell (k, k) delivers the most speed — growing
//! only compute leaves nodes stranded on the bandwidth roofline, growing
//! only SRAM adds almost nothing once inputs already stream cleanly.

use crate::config::{ArchConfig, ArchError};
use crate::cost::simulate;
use nrsim_core::ir::PipelineGraph;
use serde::{Deserialize, Serialize};

pub const SCALES: [u32; 3] = [1, 2, 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub pe_scale: u32,
    pub sram_scale: u32,
    pub rows: u32,
    pub cols: u32,
    pub sram_bytes: u64,
    pub total_cycles: u64,
    /// Base-point cycles divided by this cell's cycles.
    pub relative_speed: f64,
    pub fps: f64,
}

impl SweepCell {
    /// Size class of the design point: the larger of its two scale factors.
    pub fn size_class(&self) -> u32 {
        self.pe_scale.max(self.sram_scale)
    }

    /// Speed normalized by size class; balanced cells maximize this.
    pub fn speed_per_class(&self) -> f64 {
        self.relative_speed / self.size_class() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Row-major over (pe_scale, sram_scale), scales ascending.
    pub cells: Vec<SweepCell>,
    pub baseline_cycles: u64,
}

impl SweepTable {
    pub fn cell(&self, pe_scale: u32, sram_scale: u32) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.pe_scale == pe_scale && c.sram_scale == sram_scale)
    }

    pub fn speed(&self, pe_scale: u32, sram_scale: u32) -> f64 {
        self.cell(pe_scale, sram_scale)
            .map(|c| c.relative_speed)
            .unwrap_or(f64::NAN)
    }

    /// Balanced cells (k, k) achieve the best speed-per-size-class within
    /// their row and their column.
    pub fn balanced_scaling_dominates(&self) -> bool {
        const EPS: f64 = 1e-12;
        SCALES.iter().all(|&k| {
            let diag = match self.cell(k, k) {
                Some(c) => c.speed_per_class(),
                None => return false,
            };
            self.cells
                .iter()
                .filter(|c| c.pe_scale == k || c.sram_scale == k)
                .all(|c| c.speed_per_class() <= diag + EPS)
        })
    }

    /// Growing both resources never loses speed.
    pub fn monotone_in_joint_scaling(&self) -> bool {
        const EPS: f64 = 1e-12;
        self.cells.iter().all(|a| {
            self.cells
                .iter()
                .filter(|b| b.pe_scale >= a.pe_scale && b.sram_scale >= a.sram_scale)
                .all(|b| b.relative_speed >= a.relative_speed - EPS)
        })
    }
}

/// Simulate the graph at all nine (pe_scale, sram_scale) combinations.
pub fn run_sweep(graph: &PipelineGraph, base: &ArchConfig) -> Result<SweepTable, ArchError> {
    let baseline_cycles = simulate(graph, base)?.total_cycles;
    if baseline_cycles == 0 {
        return Err(ArchError::Config(
            "sweep workload does no work; relative speeds are undefined".into(),
        ));
    }
    let mut cells = Vec::with_capacity(9);
    for &pe_scale in &SCALES {
        for &sram_scale in &SCALES {
            let config = base.scaled(pe_scale, sram_scale)?;
            let report = simulate(graph, &config)?;
            cells.push(SweepCell {
                pe_scale,
                sram_scale,
                rows: config.geometry.rows,
                cols: config.geometry.cols,
                sram_bytes: config.geometry.sram_bytes,
                total_cycles: report.total_cycles,
                relative_speed: baseline_cycles as f64 / report.total_cycles as f64,
                fps: report.fps.unwrap_or(0.0),
            });
        }
    }
    Ok(SweepTable {
        cells,
        baseline_cycles,
    })
}
