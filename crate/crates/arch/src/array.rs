//! Per-operator array configuration.
//!
//! The array supports the five micro-operators by re-purposing four kinds of
//! hardware module: the inter-PE data networks (input and reduction), the
//! per-PE controller, the FF scratch pad, the ALU, and the PS scratch pad.
//! [`configure_array`] returns the module states for a given operator; the
//! mapping is a fixed table, embedded here and enforced by an exhaustive
//! test.

use crate::config::ArrayGeometry;
use nrsim_core::ir::MicroOpKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputNetwork {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionNetwork {
    Off,
    /// Adder trees along each PE row only.
    HorizontallyOn,
    /// Row trees plus the cross-row combining stage.
    FullyOn,
}

/// Whole-array operating mode: systolic (operands skewed through neighbor
/// links, reduction network unused) or pipeline (stages chained through the
/// data networks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrayMode {
    Systolic,
    Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerMode {
    RasterizationControl,
    GridControl,
    SortingControl,
    GemmControl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FfPadRole {
    GeometryRepresentation,
    GridFeatures,
    SortingElements,
    ModelWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AluMode {
    /// Element-wise vector arithmetic (transforms, interpolation tests).
    VectorMode,
    /// Index computation: hash mixing or linear address arithmetic.
    IndexFunction,
    Comparator,
    AdderTreeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsPadRole {
    ZBuffer,
    OutputFeatures,
    Off,
}

/// The complete module-state row for one micro-operator, plus the geometry
/// it is instantiated on. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayState {
    pub kind: MicroOpKind,
    pub geometry: ArrayGeometry,
    pub input_network: InputNetwork,
    pub reduction_network: ReductionNetwork,
    pub controller: ControllerMode,
    pub ff_role: FfPadRole,
    pub alu: AluMode,
    pub ps_role: PsPadRole,
    pub mode: ArrayMode,
}

/// Select the module states for `kind`. GEMM is the one systolic operator;
/// everything else runs the array as a pipeline.
pub fn configure_array(kind: MicroOpKind, geometry: ArrayGeometry) -> ArrayState {
    use MicroOpKind::*;
    let (input_network, reduction_network, controller, ff_role, alu, ps_role) = match kind {
        GeometricProcessing => (
            InputNetwork::Off,
            ReductionNetwork::Off,
            ControllerMode::RasterizationControl,
            FfPadRole::GeometryRepresentation,
            AluMode::VectorMode,
            PsPadRole::ZBuffer,
        ),
        CombinedGridIndexing => (
            InputNetwork::On,
            ReductionNetwork::HorizontallyOn,
            ControllerMode::GridControl,
            FfPadRole::GridFeatures,
            AluMode::IndexFunction,
            PsPadRole::Off,
        ),
        DecomposedGridIndexing => (
            InputNetwork::On,
            ReductionNetwork::FullyOn,
            ControllerMode::GridControl,
            FfPadRole::GridFeatures,
            AluMode::IndexFunction,
            PsPadRole::Off,
        ),
        Sorting => (
            InputNetwork::Off,
            ReductionNetwork::Off,
            ControllerMode::SortingControl,
            FfPadRole::SortingElements,
            AluMode::Comparator,
            PsPadRole::Off,
        ),
        Gemm => (
            InputNetwork::On,
            ReductionNetwork::Off,
            ControllerMode::GemmControl,
            FfPadRole::ModelWeights,
            AluMode::AdderTreeMode,
            PsPadRole::OutputFeatures,
        ),
    };
    let mode = if kind == Gemm {
        ArrayMode::Systolic
    } else {
        ArrayMode::Pipeline
    };
    debug_assert!(
        mode != ArrayMode::Systolic || reduction_network == ReductionNetwork::Off,
        "systolic operation leaves the reduction network unused"
    );
    ArrayState {
        kind,
        geometry,
        input_network,
        reduction_network,
        controller,
        ff_role,
        alu,
        ps_role,
        mode,
    }
}

/// Whether a per-PE resident set fits the FF pad, and if not, how many
/// sequential reload tiles cover it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfFit {
    Fits,
    Tiles(u64),
}

impl FfFit {
    /// Number of FF-pad occupancies needed (1 when the set fits).
    pub fn tile_count(self) -> u64 {
        match self {
            FfFit::Fits => 1,
            FfFit::Tiles(n) => n,
        }
    }
}

pub fn ff_capacity_check(ff_pad_bytes: u64, resident_bytes_per_pe: u64) -> FfFit {
    if resident_bytes_per_pe <= ff_pad_bytes {
        FfFit::Fits
    } else {
        FfFit::Tiles(resident_bytes_per_pe.div_ceil(ff_pad_bytes))
    }
}

/// Peak BF16 MAC issue rate of the whole array, per cycle.
pub fn peak_macs_per_cycle(geometry: &ArrayGeometry, bf16_macs_per_pe: u32) -> u64 {
    geometry.pes() * bf16_macs_per_pe as u64
}
