//! Lowering of rendering pipelines into micro-operator graphs, including the
//! deterministic workload statistics the cost simulator consumes.

use crate::error::{CoreError, Result};
use crate::kernels::raster::space_convert;
use crate::kernels::splat::{footprint_radius, project_gaussian};
use crate::scene::{samples_per_ray, Camera, MlpParams, PipelineKind, ScaleClass, SceneAssets};
use crate::{ALPHA_THRESHOLD, PATCH_EDGE};

use super::{
    AccessPattern, Edge, GeometryMode, IndexDim, IndexFunction, IndexItem, IndexingTask,
    MicroOpKind, MicroOpNode, PipelineGraph, ReductionTask, Role, WorkDetail, Workload,
};

/// Sampling and thresholding choices shared by the compiler and executor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Ray samples between near and far for volumetric pipelines.
    pub samples_per_ray: u32,
    /// Band samples around the surface hit in the hybrid pipeline.
    pub band_samples: u32,
    /// Half-width of the hybrid sampling band as a fraction of (far − near).
    pub band_fraction: f64,
    pub alpha_threshold: f64,
    pub early_termination: bool,
}

impl SamplingConfig {
    pub fn for_scale(scale: ScaleClass) -> Self {
        SamplingConfig {
            samples_per_ray: samples_per_ray(scale),
            band_samples: 4,
            band_fraction: 0.05,
            alpha_threshold: ALPHA_THRESHOLD,
            early_termination: true,
        }
    }
}

// Flat per-element operation estimates for the steps that lower to GEMM but
// are not matrix-shaped. These feed the cost model only; the functional
// executor is exact regardless.
const RAYCAST_MACS_PER_SAMPLE: u64 = 12;
const RAYCAST_SFU_PER_RAY: u64 = 2;
const BLEND_MACS_PER_SAMPLE: u64 = 8;
/// Hash corner: three 32-bit multiplies (2 INT16 issues each), two XORs, a
/// mask, and table address arithmetic.
const HASH_INT_OPS_PER_CORNER: u32 = 10;
/// Linear corner: row/column address multiply-add.
const LINEAR_INT_OPS_PER_CORNER: u32 = 4;
/// Camera intrinsics/extrinsics streamed once per frame.
const CAMERA_BYTES: u64 = 64;

fn missing(kind: PipelineKind, asset: &'static str) -> CoreError {
    CoreError::MissingAsset {
        pipeline: kind.name().to_string(),
        asset,
    }
}

/// Σ over triangles of their clipped screen bounding-box pixel counts. Counts
/// pixel-in-triangle tests, so overlapping triangles count multiply.
pub fn raster_coverage_estimate(mesh: &crate::scene::MeshSet, camera: &Camera) -> u64 {
    let clip = space_convert(mesh, camera);
    let (w, h) = (camera.viewport.0 as f64, camera.viewport.1 as f64);
    let mut total = 0u64;
    for tri in &mesh.triangles {
        let vs = [
            &clip[tri[0] as usize],
            &clip[tri[1] as usize],
            &clip[tri[2] as usize],
        ];
        if vs.iter().any(|v| v.degenerate || v.clip.w <= 1e-9) {
            continue;
        }
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vs {
            let ndc = v.ndc();
            let sx = (ndc.x + 1.0) * 0.5 * w;
            let sy = (1.0 - ndc.y) * 0.5 * h;
            min_x = min_x.min(sx);
            max_x = max_x.max(sx);
            min_y = min_y.min(sy);
            max_y = max_y.max(sy);
        }
        let x0 = (min_x - 0.5).floor().max(0.0);
        let x1 = (max_x - 0.5).ceil().min(w - 1.0);
        let y0 = (min_y - 0.5).floor().max(0.0);
        let y1 = (max_y - 0.5).ceil().min(h - 1.0);
        if x1 >= x0 && y1 >= y0 {
            total += (x1 - x0 + 1.0) as u64 * (y1 - y0 + 1.0) as u64;
        }
    }
    total
}

/// Σ over Gaussians of their clipped threshold-ellipse bounding boxes — the
/// compile-time stand-in for the exact splat candidate count.
pub fn splat_coverage_estimate(
    set: &crate::scene::GaussianSet,
    camera: &Camera,
    threshold: f64,
) -> u64 {
    let (w, h) = (camera.viewport.0 as f64, camera.viewport.1 as f64);
    let mut total = 0u64;
    for gi in 0..set.len() {
        let Some(pg) = project_gaussian(&set.means[gi], &set.covariances[gi], camera) else {
            continue;
        };
        let r = footprint_radius(&pg, set.opacities[gi], threshold);
        if r == 0.0 {
            continue;
        }
        let (cx, cy) = pg.center;
        let x0 = (cx - r - 0.5).floor().max(0.0);
        let x1 = (cx + r - 0.5).ceil().min(w - 1.0);
        let y0 = (cy - r - 0.5).floor().max(0.0);
        let y1 = (cy + r - 0.5).ceil().min(h - 1.0);
        if x1 >= x0 && y1 >= y0 && cx + r >= 0.0 && cy + r >= 0.0 {
            total += (x1 - x0 + 1.0) as u64 * (y1 - y0 + 1.0) as u64;
        }
    }
    total
}

fn mlp_layer_dims(mlp: &MlpParams) -> Vec<(u32, u32)> {
    mlp.tiles[0].iter().map(|l| (l.in_dim, l.out_dim)).collect()
}

fn mlp_weight_bytes(mlp: &MlpParams) -> u64 {
    mlp.parameter_count() * 2
}

fn gemm_indexing(dim: IndexDim, pattern: AccessPattern) -> (IndexingTask, ReductionTask) {
    (
        IndexingTask {
            item: IndexItem::Scalars,
            dimension: dim,
            function: IndexFunction::AutomaticCounter,
        },
        ReductionTask { pattern },
    )
}

fn ray_cast_node(n_rays: u64, samples: u32, output_width: u32) -> MicroOpNode {
    let n_samples = n_rays * samples as u64;
    let (indexing, reduction) = gemm_indexing(IndexDim::D1, AccessPattern::Continuous);
    MicroOpNode {
        kind: MicroOpKind::Gemm,
        indexing,
        reduction,
        role: Role::RayCast,
        workload: Workload {
            elements_in: n_rays,
            elements_out: n_samples,
            input_width: 2,
            output_width,
            external_in_bytes: CAMERA_BYTES,
            external_out_bytes: 0,
            asset_bytes: 0,
            detail: WorkDetail::Gemm {
                batch: n_samples,
                layer_dims: vec![],
                macs: n_samples * RAYCAST_MACS_PER_SAMPLE,
                sfu_ops: n_rays * RAYCAST_SFU_PER_RAY,
                tiles: 1,
            },
        },
    }
}

fn mlp_node(mlp: &MlpParams, batch: u64, input_width: u32, output_width: u32) -> MicroOpNode {
    let dims = mlp_layer_dims(mlp);
    let macs: u64 = batch * dims.iter().map(|&(i, o)| i as u64 * o as u64).sum::<u64>();
    let sfu: u64 = batch * dims.iter().map(|&(_, o)| o as u64).sum::<u64>();
    let tiles = mlp.tiles.len() as u32;
    let pattern = if tiles > 1 {
        AccessPattern::Discrete
    } else {
        AccessPattern::Continuous
    };
    let (indexing, reduction) = gemm_indexing(IndexDim::D2, pattern);
    MicroOpNode {
        kind: MicroOpKind::Gemm,
        indexing,
        reduction,
        role: Role::MlpInference,
        workload: Workload {
            elements_in: batch,
            elements_out: batch,
            input_width,
            output_width,
            external_in_bytes: 0,
            external_out_bytes: 0,
            asset_bytes: mlp_weight_bytes(mlp),
            detail: WorkDetail::Gemm {
                batch,
                layer_dims: dims,
                macs,
                sfu_ops: sfu,
                tiles,
            },
        },
    }
}

fn blend_node(samples: u64, n_pixels: u64, density_mode: bool) -> MicroOpNode {
    let (indexing, reduction) = gemm_indexing(IndexDim::D1, AccessPattern::Continuous);
    MicroOpNode {
        kind: MicroOpKind::Gemm,
        indexing,
        reduction,
        role: Role::Blending,
        workload: Workload {
            elements_in: samples,
            elements_out: n_pixels,
            input_width: 4,
            output_width: 3,
            external_in_bytes: 0,
            external_out_bytes: n_pixels * 3 * 2,
            asset_bytes: 0,
            detail: WorkDetail::Gemm {
                batch: samples,
                layer_dims: vec![],
                macs: samples * BLEND_MACS_PER_SAMPLE,
                // Density-to-alpha conversion costs one exp per sample.
                sfu_ops: if density_mode { samples } else { 0 },
                tiles: 1,
            },
        },
    }
}

fn chain_edges(nodes: &[MicroOpNode]) -> Vec<Edge> {
    nodes
        .windows(2)
        .enumerate()
        .map(|(i, pair)| Edge {
            from: i,
            to: i + 1,
            width: pair[0].workload.output_width,
            elements: pair[0].workload.elements_out,
        })
        .collect()
}

/// Lower a pipeline into its micro-operator graph. Fails if `assets` lacks a
/// representation the pipeline needs.
pub fn compile_pipeline(
    kind: PipelineKind,
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<PipelineGraph> {
    let (w, h) = camera.viewport;
    let n_pixels = w as u64 * h as u64;
    let nodes = match kind {
        PipelineKind::Mesh => {
            let mesh = assets.mesh.as_ref().ok_or_else(|| missing(kind, "mesh"))?;
            let tex = assets
                .texture
                .as_ref()
                .ok_or_else(|| missing(kind, "texture"))?;
            let mlp = assets.mlp.as_ref().ok_or_else(|| missing(kind, "mlp"))?;
            let coverage = raster_coverage_estimate(mesh, camera);
            let covered = coverage.min(n_pixels).max(1);
            let v = mesh.vertices.len() as u64;
            let t = mesh.triangles.len() as u64;

            let gp = MicroOpNode {
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
                    elements_in: t.max(1),
                    elements_out: n_pixels,
                    input_width: 3,
                    output_width: 2,
                    external_in_bytes: v * 6 + v * 4 + t * 6,
                    external_out_bytes: 0,
                    asset_bytes: 0,
                    detail: WorkDetail::Geometric {
                        vertices: v,
                        primitives: t,
                        coverage_estimate: coverage,
                        mode: GeometryMode::Rasterize,
                    },
                },
            };
            let texture = MicroOpNode {
                kind: MicroOpKind::CombinedGridIndexing,
                indexing: IndexingTask {
                    item: IndexItem::Features,
                    dimension: IndexDim::D2,
                    function: IndexFunction::LinearIndexing,
                },
                reduction: ReductionTask {
                    pattern: AccessPattern::Discrete,
                },
                role: Role::TextureLookup,
                workload: Workload {
                    elements_in: n_pixels,
                    elements_out: n_pixels,
                    input_width: 2,
                    output_width: tex.channels,
                    external_in_bytes: 0,
                    external_out_bytes: 0,
                    asset_bytes: tex.data.len() as u64 * 2,
                    detail: WorkDetail::Grid {
                        queries: covered,
                        levels: 1,
                        feature_width: tex.channels,
                        corners: 4,
                        table_bytes_per_level: tex.data.len() as u64 * 2,
                        int_ops_per_corner: LINEAR_INT_OPS_PER_CORNER,
                    },
                },
            };
            let mut decode = mlp_node(mlp, covered, tex.channels, 3);
            decode.workload.elements_in = n_pixels;
            decode.workload.elements_out = n_pixels;
            decode.workload.external_out_bytes = n_pixels * 3 * 2;
            vec![gp, texture, decode]
        }
        PipelineKind::Mlp => {
            let mlp = assets.mlp.as_ref().ok_or_else(|| missing(kind, "mlp"))?;
            let n_samples = n_pixels * sampling.samples_per_ray as u64;
            vec![
                ray_cast_node(n_pixels, sampling.samples_per_ray, 6),
                mlp_node(mlp, n_samples, 6, 4),
                blend_node(n_samples, n_pixels, true),
            ]
        }
        PipelineKind::LowRank => {
            let lr = assets
                .low_rank
                .as_ref()
                .ok_or_else(|| missing(kind, "low-rank grid"))?;
            let mlp = assets.mlp.as_ref().ok_or_else(|| missing(kind, "mlp"))?;
            let n_samples = n_pixels * sampling.samples_per_ray as u64;
            let f = lr.planes[0].feature_width;
            let res = lr.planes[0].resolution as u64;
            let plane_bytes = res * res * f as u64 * 2;
            let dgi = MicroOpNode {
                kind: MicroOpKind::DecomposedGridIndexing,
                indexing: IndexingTask {
                    item: IndexItem::Features,
                    dimension: IndexDim::D2,
                    function: IndexFunction::LinearIndexing,
                },
                reduction: ReductionTask {
                    pattern: AccessPattern::Discrete,
                },
                role: Role::GridLookup,
                workload: Workload {
                    elements_in: n_samples,
                    elements_out: n_samples,
                    input_width: 3,
                    output_width: f,
                    external_in_bytes: 0,
                    external_out_bytes: 0,
                    asset_bytes: plane_bytes * lr.planes.len() as u64,
                    detail: WorkDetail::Grid {
                        queries: n_samples,
                        levels: lr.planes.len() as u32,
                        feature_width: f,
                        corners: 4,
                        table_bytes_per_level: plane_bytes,
                        int_ops_per_corner: LINEAR_INT_OPS_PER_CORNER,
                    },
                },
            };
            vec![
                ray_cast_node(n_pixels, sampling.samples_per_ray, 3),
                dgi,
                mlp_node(mlp, n_samples, f, 4),
                blend_node(n_samples, n_pixels, true),
            ]
        }
        PipelineKind::HashGrid => {
            let grid = assets
                .hash_grid
                .as_ref()
                .ok_or_else(|| missing(kind, "hash grid"))?;
            let mlp = assets.mlp.as_ref().ok_or_else(|| missing(kind, "mlp"))?;
            let n_samples = n_pixels * sampling.samples_per_ray as u64;
            let out_width = grid.levels() * grid.feature_width;
            let cgi = MicroOpNode {
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
                    elements_in: n_samples,
                    elements_out: n_samples,
                    input_width: 3,
                    output_width: out_width,
                    external_in_bytes: 0,
                    external_out_bytes: 0,
                    asset_bytes: grid.levels() as u64 * grid.table_bytes_per_level(),
                    detail: WorkDetail::Grid {
                        queries: n_samples,
                        levels: grid.levels(),
                        feature_width: grid.feature_width,
                        corners: 8,
                        table_bytes_per_level: grid.table_bytes_per_level(),
                        int_ops_per_corner: HASH_INT_OPS_PER_CORNER,
                    },
                },
            };
            vec![
                ray_cast_node(n_pixels, sampling.samples_per_ray, 3),
                cgi,
                mlp_node(mlp, n_samples, out_width, 4),
                blend_node(n_samples, n_pixels, true),
            ]
        }
        PipelineKind::Gaussian => {
            let set = assets
                .gaussians
                .as_ref()
                .ok_or_else(|| missing(kind, "gaussians"))?;
            let g = set.len() as u64;
            let k_sh = set.sh_basis_width() as u64;
            let candidates = splat_coverage_estimate(set, camera, sampling.alpha_threshold).max(1);
            let patches =
                (w as u64).div_ceil(PATCH_EDGE as u64) * (h as u64).div_ceil(PATCH_EDGE as u64);

            let splat = MicroOpNode {
                kind: MicroOpKind::GeometricProcessing,
                indexing: IndexingTask {
                    item: IndexItem::MeshGaussian,
                    dimension: IndexDim::D1,
                    function: IndexFunction::AutomaticCounter,
                },
                reduction: ReductionTask {
                    pattern: AccessPattern::Continuous,
                },
                role: Role::Splatting,
                workload: Workload {
                    elements_in: g.max(1),
                    elements_out: candidates,
                    input_width: 10,
                    output_width: 3,
                    // Mean (6 B) + symmetric covariance (12 B) + opacity (2 B).
                    external_in_bytes: g * 20,
                    external_out_bytes: 0,
                    asset_bytes: 0,
                    detail: WorkDetail::Geometric {
                        vertices: g,
                        primitives: g,
                        coverage_estimate: candidates,
                        mode: GeometryMode::Splat,
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
                    elements_in: candidates,
                    elements_out: candidates,
                    input_width: 3,
                    output_width: 3,
                    external_in_bytes: 0,
                    external_out_bytes: 0,
                    asset_bytes: 0,
                    detail: WorkDetail::Sort {
                        patches,
                        elements: candidates,
                    },
                },
            };
            let (indexing, reduction) = gemm_indexing(IndexDim::D1, AccessPattern::Discrete);
            let sh = MicroOpNode {
                kind: MicroOpKind::Gemm,
                indexing,
                reduction,
                role: Role::ShColor,
                workload: Workload {
                    elements_in: candidates,
                    elements_out: candidates,
                    input_width: 3,
                    output_width: 4,
                    external_in_bytes: 0,
                    external_out_bytes: 0,
                    asset_bytes: g * 3 * k_sh * 2,
                    detail: WorkDetail::Gemm {
                        batch: g,
                        layer_dims: vec![(k_sh as u32, 3)],
                        macs: g * 3 * k_sh,
                        sfu_ops: g,
                        tiles: 1,
                    },
                },
            };
            let blend = blend_node(candidates, n_pixels, false);
            vec![splat, sort, sh, blend]
        }
        PipelineKind::HybridMeshHash => {
            let mesh = assets.mesh.as_ref().ok_or_else(|| missing(kind, "mesh"))?;
            let grid = assets
                .hash_grid
                .as_ref()
                .ok_or_else(|| missing(kind, "hash grid"))?;
            let mlp = assets.mlp.as_ref().ok_or_else(|| missing(kind, "mlp"))?;
            let coverage = raster_coverage_estimate(mesh, camera);
            let covered = coverage.min(n_pixels).max(1);
            let band_total = covered * sampling.band_samples as u64;
            let v = mesh.vertices.len() as u64;
            let t = mesh.triangles.len() as u64;
            let out_width = grid.levels() * grid.feature_width;

            let gp = MicroOpNode {
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
                    elements_in: t.max(1),
                    elements_out: band_total,
                    input_width: 3,
                    output_width: 3,
                    external_in_bytes: v * 6 + v * 4 + t * 6,
                    external_out_bytes: 0,
                    asset_bytes: 0,
                    detail: WorkDetail::Geometric {
                        vertices: v,
                        primitives: t,
                        coverage_estimate: coverage,
                        mode: GeometryMode::Rasterize,
                    },
                },
            };
            let cgi = MicroOpNode {
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
                    elements_in: band_total,
                    elements_out: band_total,
                    input_width: 3,
                    output_width: out_width,
                    external_in_bytes: 0,
                    external_out_bytes: 0,
                    asset_bytes: grid.levels() as u64 * grid.table_bytes_per_level(),
                    detail: WorkDetail::Grid {
                        queries: band_total,
                        levels: grid.levels(),
                        feature_width: grid.feature_width,
                        corners: 8,
                        table_bytes_per_level: grid.table_bytes_per_level(),
                        int_ops_per_corner: HASH_INT_OPS_PER_CORNER,
                    },
                },
            };
            vec![
                gp,
                cgi,
                mlp_node(mlp, band_total, out_width, 4),
                blend_node(band_total, n_pixels, true),
            ]
        }
    };
    let edges = chain_edges(&nodes);
    Ok(PipelineGraph { kind, nodes, edges })
}
