//! Functional reference for neural rendering pipelines lowered onto a shared
//! set of micro-operators.
//!
//! The crate is split along the data path:
//!
//! * [`scene`] — synthetic scene assets (meshes, grids, MLPs, Gaussians) with
//!   deterministic generation, validation, and on-disk serialization.
//! * [`kernels`] — the five micro-operator families as plain full-precision
//!   functions (geometric processing, grid indexing in combined and
//!   decomposed form, sorting, GEMM) plus the ray/blend helpers they feed.
//! * [`ir`] — the pipeline graph: compilation of a scene into a node list,
//!   per-node task descriptors, validation against the task template table,
//!   and a graph executor that must agree with a monolithic renderer.
//! * [`image`] — small image container with PPM and raw-f32 I/O.
//!
//! Everything here is full-precision (`f64`) by design: this side of the
//! project defines *what* a pipeline computes. Cycle counts, quantization,
//! and dataflow live in the companion architecture crate.

pub mod error;
pub mod image;
pub mod ir;
pub mod kernels;
pub mod scene;

pub use error::CoreError;

/// Candidates whose splat alpha falls at or below this threshold are dropped.
pub const ALPHA_THRESHOLD: f64 = 1.0 / 255.0;

/// Transmittance floor for early ray termination during alpha compositing.
pub const EARLY_TERMINATION_FLOOR: f64 = 1e-4;

/// Pixel patch edge length used by the sorting stage (patches are square).
pub const PATCH_EDGE: u32 = 16;
