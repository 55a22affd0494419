//! Reference semantics of the five shared micro-operators plus the auxiliary
//! steps (ray casting, blending) that lower to GEMM-style work.
//!
//! Everything here is scalar, full-precision, and deliberately naive — these
//! functions are the ground truth the pipeline executor and the randomized
//! test oracles are both measured against.

pub mod blend;
pub mod gemm;
pub mod grid;
pub mod raster;
pub mod ray;
pub mod sort;
pub mod splat;

pub use blend::{alpha_from_density, volume_blend, BlendSample};
pub use gemm::gemm;
pub use grid::{combined_grid_index, decomposed_grid_index, texture_index, FilterMode};
pub use raster::{projection_matrix, rasterize_meshes, space_convert, ClipVertex, FragmentBuffer};
pub use ray::{ray_cast, RaySample};
pub use sort::patch_sort;
pub use splat::{splat_gaussians, SplatCandidate, SplatCandidateList};
