//! Architecture description and cost-model constants.
//!
//! Everything the simulator charges for is data, not code: array geometry,
//! per-PE resources, memory-system rates, and the calibration constants of
//! the analytic cost model. Defaults describe the reference design point
//! (16x16 PEs at 1 GHz, 256 KB global SRAM, 59.7 GB/s of DRAM bandwidth).
//! A TOML file may override any subset of fields; the merged result is what
//! `print-config` dumps.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug)]
pub enum ArchError {
    /// A configuration value is out of its legal range.
    Config(String),
    /// A workload cannot be mapped onto the configured array.
    Mapping(String),
}

impl fmt::Display for ArchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchError::Config(msg) => write!(f, "configuration error: {msg}"),
            ArchError::Mapping(msg) => write!(f, "mapping error: {msg}"),
        }
    }
}

impl std::error::Error for ArchError {}

/// Array shape plus the shared-memory rates the whole design sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayGeometry {
    pub rows: u32,
    pub cols: u32,
    pub clock_hz: f64,
    /// Global on-chip SRAM shared by all PEs.
    pub sram_bytes: u64,
    pub dram_bytes_per_sec: f64,
    /// Fixed request latency charged per DRAM burst.
    pub dram_latency_cycles: u64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry {
            rows: 16,
            cols: 16,
            clock_hz: 1.0e9,
            sram_bytes: 262_144,
            dram_bytes_per_sec: 59.7e9,
            dram_latency_cycles: 100,
        }
    }
}

impl ArrayGeometry {
    pub fn pes(&self) -> u64 {
        self.rows as u64 * self.cols as u64
    }

    /// Sustained DRAM bandwidth seen by the core, in bytes per clock cycle.
    pub fn dram_bytes_per_cycle(&self) -> f64 {
        self.dram_bytes_per_sec / self.clock_hz
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ArchError::Config(
                "array must have at least one row and column".into(),
            ));
        }
        if !self.clock_hz.is_finite() || self.clock_hz <= 0.0 {
            return Err(ArchError::Config(format!(
                "clock_hz must be positive, got {}",
                self.clock_hz
            )));
        }
        if self.sram_bytes == 0 {
            return Err(ArchError::Config("sram_bytes must be positive".into()));
        }
        if !self.dram_bytes_per_sec.is_finite() || self.dram_bytes_per_sec <= 0.0 {
            return Err(ArchError::Config(format!(
                "dram_bytes_per_sec must be positive, got {}",
                self.dram_bytes_per_sec
            )));
        }
        Ok(())
    }
}

/// Resources inside one processing element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeResources {
    /// Filter/feature scratch pad: four SRAM cells of 512 x 16-bit entries.
    pub ff_pad_bytes: u64,
    /// Partial-sum scratch pad.
    pub ps_pad_bytes: u64,
    pub int16_macs: u32,
    pub bf16_macs: u32,
    /// Special-function units (exp, reciprocal, sqrt); one issue per op.
    pub sfus: u32,
}

impl Default for PeResources {
    fn default() -> Self {
        PeResources {
            ff_pad_bytes: 4096,
            ps_pad_bytes: 2048,
            int16_macs: 4,
            bf16_macs: 4,
            sfus: 4,
        }
    }
}

impl PeResources {
    pub fn validate(&self) -> Result<(), ArchError> {
        if self.int16_macs == 0 || self.bf16_macs == 0 || self.sfus == 0 {
            return Err(ArchError::Config(
                "per-PE ALU unit counts must be at least 1".into(),
            ));
        }
        if self.ff_pad_bytes == 0 || self.ps_pad_bytes == 0 {
            return Err(ArchError::Config(
                "per-PE scratch pads must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// Calibration constants of the analytic cost model. These are model
/// parameters, not hardware measurements; they are exposed so experiments
/// can vary them without recompiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConstants {
    /// Width of the SRAM fill path used when reloading FF pads on a
    /// reconfiguration, bytes per cycle.
    pub sram_fill_bytes_per_cycle: u64,
    /// Fixed control cost of switching the array between operator
    /// configurations.
    pub reconfig_control_cycles: u64,
    /// Fraction of global SRAM available for double-buffering streamed
    /// inputs; the rest holds resident operands and outputs in flight.
    pub stream_buffer_fraction: f64,
    /// A resident operand (grid table, texture) larger than this fraction
    /// of SRAM cannot stay on chip and is re-fetched every stream phase.
    pub asset_resident_fraction: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        ModelConstants {
            sram_fill_bytes_per_cycle: 64,
            reconfig_control_cycles: 100,
            stream_buffer_fraction: 0.34,
            asset_resident_fraction: 0.5,
        }
    }
}

impl ModelConstants {
    pub fn validate(&self) -> Result<(), ArchError> {
        if self.sram_fill_bytes_per_cycle == 0 {
            return Err(ArchError::Config(
                "sram_fill_bytes_per_cycle must be positive".into(),
            ));
        }
        for (name, v) in [
            ("stream_buffer_fraction", self.stream_buffer_fraction),
            ("asset_resident_fraction", self.asset_resident_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ArchError::Config(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-event energy constants in picojoules. Parametric: the defaults only
/// fix plausible relative magnitudes (DRAM traffic far above on-chip work);
/// they are not calibrated against silicon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConstants {
    pub pj_per_int16_mac: f64,
    pub pj_per_bf16_mac: f64,
    pub pj_per_sfu_op: f64,
    /// Per 16-bit word moved to or from on-chip SRAM or scratch pads.
    pub pj_per_sram_word: f64,
    pub pj_per_dram_byte: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            pj_per_int16_mac: 0.5,
            pj_per_bf16_mac: 1.2,
            pj_per_sfu_op: 2.0,
            pj_per_sram_word: 5.0,
            pj_per_dram_byte: 40.0,
        }
    }
}

impl EnergyConstants {
    pub fn validate(&self) -> Result<(), ArchError> {
        for (name, v) in [
            ("pj_per_int16_mac", self.pj_per_int16_mac),
            ("pj_per_bf16_mac", self.pj_per_bf16_mac),
            ("pj_per_sfu_op", self.pj_per_sfu_op),
            ("pj_per_sram_word", self.pj_per_sram_word),
            ("pj_per_dram_byte", self.pj_per_dram_byte),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ArchError::Config(format!(
                    "energy constant {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The full architecture + model description consumed by every simulator
/// entry point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub geometry: ArrayGeometry,
    pub pe: PeResources,
    pub model: ModelConstants,
    pub energy: EnergyConstants,
}

impl ArchConfig {
    pub fn validate(&self) -> Result<(), ArchError> {
        self.geometry.validate()?;
        self.pe.validate()?;
        self.model.validate()?;
        self.energy.validate()
    }

    /// Scale the design point: `pe_scale` grows the array (2x adds a column
    /// block, 4x doubles both dimensions, keeping the array near-square) and
    /// `sram_scale` multiplies global SRAM. Legal factors are 1, 2, and 4.
    pub fn scaled(&self, pe_scale: u32, sram_scale: u32) -> Result<ArchConfig, ArchError> {
        let mut out = *self;
        match pe_scale {
            1 => {}
            2 => out.geometry.cols *= 2,
            4 => {
                out.geometry.rows *= 2;
                out.geometry.cols *= 2;
            }
            other => {
                return Err(ArchError::Config(format!(
                    "pe_scale must be 1, 2, or 4, got {other}"
                )))
            }
        }
        match sram_scale {
            1 | 2 | 4 => out.geometry.sram_bytes *= sram_scale as u64,
            other => {
                return Err(ArchError::Config(format!(
                    "sram_scale must be 1, 2, or 4, got {other}"
                )))
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Parse a (possibly partial) TOML override file; absent fields keep
    /// their defaults.
    pub fn from_toml_str(text: &str) -> Result<ArchConfig, ArchError> {
        let config: ArchConfig = toml::from_str(text)
            .map_err(|e| ArchError::Config(format!("bad architecture config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("architecture config serializes")
    }
}
