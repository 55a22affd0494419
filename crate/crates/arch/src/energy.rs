//! Parametric energy estimate: a dot product of event tallies with
//! per-event constants.
//!
//! The constants are configuration, not measurements — the estimate is
//! useful for comparing design points under one set of assumptions, not for
//! quoting absolute power. Every report carries that caveat.

use crate::config::{ArchError, EnergyConstants};
use serde::{Deserialize, Serialize};

/// Countable events accumulated by the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnergyTallies {
    pub int16_macs: u64,
    pub bf16_macs: u64,
    pub sfu_ops: u64,
    pub sram_word_accesses: u64,
    pub dram_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub int16_joules: f64,
    pub bf16_joules: f64,
    pub sfu_joules: f64,
    pub sram_joules: f64,
    pub dram_joules: f64,
    pub total_joules: f64,
    /// Always set: these numbers follow the configured constants, nothing
    /// else.
    pub note: String,
}

pub const ENERGY_NOTE: &str =
    "parametric estimate: per-event constants are configuration, not measurements";

const PJ: f64 = 1e-12;

/// Dot product of tallies and per-event constants. Rejects negative or
/// non-finite constants as configuration errors.
pub fn estimate_energy(
    tallies: &EnergyTallies,
    constants: &EnergyConstants,
) -> Result<EnergyReport, ArchError> {
    constants.validate()?;
    let int16_joules = tallies.int16_macs as f64 * constants.pj_per_int16_mac * PJ;
    let bf16_joules = tallies.bf16_macs as f64 * constants.pj_per_bf16_mac * PJ;
    let sfu_joules = tallies.sfu_ops as f64 * constants.pj_per_sfu_op * PJ;
    let sram_joules = tallies.sram_word_accesses as f64 * constants.pj_per_sram_word * PJ;
    let dram_joules = tallies.dram_bytes as f64 * constants.pj_per_dram_byte * PJ;
    Ok(EnergyReport {
        int16_joules,
        bf16_joules,
        sfu_joules,
        sram_joules,
        dram_joules,
        total_joules: int16_joules + bf16_joules + sfu_joules + sram_joules + dram_joules,
        note: ENERGY_NOTE.to_string(),
    })
}
