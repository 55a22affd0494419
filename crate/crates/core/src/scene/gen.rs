//! Deterministic synthetic scene generation.
//!
//! The same `(kind, seed, scale)` triple always yields bit-identical assets.
//! Every generated value is rounded through `f32` so that the f32 blob
//! serialization in [`super::io`] round-trips losslessly.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Activation, Camera, GaussianSet, HashGridRep, LowRankRep, MeshSet, MlpLayer, MlpParams,
    PipelineKind, PlaneAggregation, PlaneAxes, PlaneGrid, ScaleClass, SceneAssets, Texture,
};

/// Workload sizing per scale class. Medium is the desk-scale configuration
/// the architecture sweeps are calibrated against; change with care.
struct ScaleSpec {
    viewport: (u32, u32),
    triangles: u32,
    texture_res: u32,
    texture_channels: u32,
    hash_levels: u32,
    hash_table_log2: u32,
    hash_feature_width: u32,
    hash_base_res: u32,
    plane_res: u32,
    plane_feature_width: u32,
    gaussians: u32,
    sh_degree: u32,
    /// Hidden width of the standalone MLP pipeline's networks.
    mlp_hidden: u32,
    /// Hidden width of the small decoder MLPs behind grids and textures.
    decoder_hidden: u32,
    mlp_tile_grid: u32,
}

fn spec_for(scale: ScaleClass) -> ScaleSpec {
    match scale {
        ScaleClass::Tiny => ScaleSpec {
            viewport: (32, 32),
            triangles: 24,
            texture_res: 16,
            texture_channels: 8,
            hash_levels: 4,
            hash_table_log2: 10,
            hash_feature_width: 2,
            hash_base_res: 4,
            plane_res: 16,
            plane_feature_width: 8,
            gaussians: 24,
            sh_degree: 0,
            mlp_hidden: 16,
            decoder_hidden: 16,
            mlp_tile_grid: 2,
        },
        ScaleClass::Small => ScaleSpec {
            viewport: (64, 64),
            triangles: 64,
            texture_res: 32,
            texture_channels: 8,
            hash_levels: 8,
            hash_table_log2: 12,
            hash_feature_width: 2,
            hash_base_res: 4,
            plane_res: 32,
            plane_feature_width: 8,
            gaussians: 64,
            sh_degree: 1,
            mlp_hidden: 32,
            decoder_hidden: 16,
            mlp_tile_grid: 2,
        },
        ScaleClass::Medium => ScaleSpec {
            viewport: (256, 256),
            triangles: 256,
            texture_res: 64,
            texture_channels: 8,
            hash_levels: 16,
            hash_table_log2: 14,
            hash_feature_width: 2,
            hash_base_res: 4,
            plane_res: 64,
            plane_feature_width: 8,
            gaussians: 256,
            sh_degree: 1,
            mlp_hidden: 32,
            decoder_hidden: 8,
            mlp_tile_grid: 2,
        },
    }
}

/// Samples per ray used by the volumetric pipelines at each scale.
pub fn samples_per_ray(scale: ScaleClass) -> u32 {
    match scale {
        ScaleClass::Tiny => 4,
        ScaleClass::Small => 8,
        ScaleClass::Medium => 4,
    }
}

fn kind_id(kind: PipelineKind) -> u64 {
    PipelineKind::ALL.iter().position(|&k| k == kind).unwrap() as u64
}

fn scale_id(scale: ScaleClass) -> u64 {
    ScaleClass::ALL.iter().position(|&s| s == scale).unwrap() as u64
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn rng_for(kind: PipelineKind, seed: u64, scale: ScaleClass) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed
        ^ splitmix(kind_id(kind).wrapping_mul(0x517c_c1b7_2722_0a95))
        ^ splitmix(scale_id(scale) << 17);
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Round through f32 so serialized blobs reproduce the in-memory value.
fn q(x: f64) -> f64 {
    x as f32 as f64
}

fn qrange(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    q(rng.gen_range(lo..hi))
}

/// The default camera for a pipeline at a given scale. Volumetric scenes live
/// in the unit cube and are viewed head-on from +Z; surface scenes (mesh,
/// Gaussian) sit on the -Z side of a camera at the origin.
pub fn default_camera(kind: PipelineKind, scale: ScaleClass) -> Camera {
    let viewport = spec_for(scale).viewport;
    match kind {
        PipelineKind::Mesh | PipelineKind::Gaussian => Camera {
            position: Vector3::zeros(),
            orientation: Matrix3::identity(),
            fov_y: std::f64::consts::FRAC_PI_3,
            near: 0.5,
            far: 10.0,
            viewport,
        },
        PipelineKind::Mlp
        | PipelineKind::LowRank
        | PipelineKind::HashGrid
        | PipelineKind::HybridMeshHash => Camera {
            position: Vector3::new(0.5, 0.5, 2.2),
            orientation: Matrix3::identity(),
            fov_y: std::f64::consts::FRAC_PI_3,
            near: 1.2,
            far: 2.2,
            viewport,
        },
    }
}

/// Generate the assets a pipeline kind needs. Deterministic in the triple.
pub fn generate_synthetic_scene(kind: PipelineKind, seed: u64, scale: ScaleClass) -> SceneAssets {
    let spec = spec_for(scale);
    let mut rng = rng_for(kind, seed, scale);

    let mut assets = SceneAssets {
        kind,
        scale,
        seed,
        mesh: None,
        texture: None,
        mlp: None,
        low_rank: None,
        hash_grid: None,
        gaussians: None,
    };

    match kind {
        PipelineKind::Mesh => {
            assets.mesh = Some(gen_mesh(&mut rng, spec.triangles, MeshPlacement::Facing));
            assets.texture = Some(gen_texture(
                &mut rng,
                spec.texture_res,
                spec.texture_channels,
            ));
            assets.mlp = Some(gen_mlp(
                &mut rng,
                1,
                &[spec.texture_channels, spec.decoder_hidden, 3],
                Activation::Sigmoid,
            ));
        }
        PipelineKind::Mlp => {
            // Position + view direction in, color + density out, one small
            // network per spatial tile.
            assets.mlp = Some(gen_mlp(
                &mut rng,
                spec.mlp_tile_grid,
                &[6, spec.mlp_hidden, spec.mlp_hidden, 4],
                Activation::Relu,
            ));
        }
        PipelineKind::LowRank => {
            assets.low_rank = Some(gen_low_rank(
                &mut rng,
                spec.plane_res,
                spec.plane_feature_width,
                seed,
            ));
            assets.mlp = Some(gen_mlp(
                &mut rng,
                1,
                &[spec.plane_feature_width, spec.decoder_hidden, 4],
                Activation::Relu,
            ));
        }
        PipelineKind::HashGrid => {
            let grid = gen_hash_grid(&mut rng, &spec);
            let in_w = grid.levels() * grid.feature_width;
            assets.hash_grid = Some(grid);
            assets.mlp = Some(gen_mlp(
                &mut rng,
                1,
                &[in_w, spec.decoder_hidden, 4],
                Activation::Relu,
            ));
        }
        PipelineKind::Gaussian => {
            assets.gaussians = Some(gen_gaussians(&mut rng, spec.gaussians, spec.sh_degree));
        }
        PipelineKind::HybridMeshHash => {
            assets.mesh = Some(gen_mesh(&mut rng, spec.triangles, MeshPlacement::UnitBox));
            let grid = gen_hash_grid(&mut rng, &spec);
            let in_w = grid.levels() * grid.feature_width;
            assets.hash_grid = Some(grid);
            assets.mlp = Some(gen_mlp(
                &mut rng,
                1,
                &[in_w, spec.decoder_hidden, 4],
                Activation::Relu,
            ));
        }
    }

    assets
}

enum MeshPlacement {
    /// In front of a camera at the origin looking down -Z.
    Facing,
    /// Inside the unit cube, for the hybrid pipeline's field lookups.
    UnitBox,
}

fn gen_mesh(rng: &mut ChaCha8Rng, triangles: u32, placement: MeshPlacement) -> MeshSet {
    let mut mesh = MeshSet::default();
    for t in 0..triangles {
        let (center, radius) = match placement {
            MeshPlacement::Facing => (
                Vector3::new(
                    qrange(rng, -1.2, 1.2),
                    qrange(rng, -1.2, 1.2),
                    qrange(rng, -5.5, -2.5),
                ),
                qrange(rng, 0.15, 0.6),
            ),
            MeshPlacement::UnitBox => (
                Vector3::new(
                    qrange(rng, 0.2, 0.8),
                    qrange(rng, 0.2, 0.8),
                    qrange(rng, 0.2, 0.8),
                ),
                qrange(rng, 0.05, 0.25),
            ),
        };
        for _ in 0..3 {
            let offset = Vector3::new(
                qrange(rng, -1.0, 1.0),
                qrange(rng, -1.0, 1.0),
                qrange(rng, -1.0, 1.0),
            ) * radius;
            mesh.vertices.push((center + offset).map(q));
            mesh.uvs
                .push([qrange(rng, 0.0, 1.0), qrange(rng, 0.0, 1.0)]);
        }
        mesh.triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
    }
    mesh
}

fn gen_texture(rng: &mut ChaCha8Rng, res: u32, channels: u32) -> Texture {
    let n = res as usize * res as usize * channels as usize;
    Texture {
        width: res,
        height: res,
        channels,
        data: (0..n).map(|_| qrange(rng, 0.0, 1.0)).collect(),
    }
}

fn gen_mlp(
    rng: &mut ChaCha8Rng,
    tile_grid: u32,
    widths: &[u32],
    final_act: Activation,
) -> MlpParams {
    let tiles = (tile_grid * tile_grid * tile_grid) as usize;
    let mut out = MlpParams {
        tile_grid,
        tiles: Vec::with_capacity(tiles),
    };
    for _ in 0..tiles {
        let mut layers = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let last = i + 1 == widths.len() - 1;
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            layers.push(MlpLayer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights: (0..fan_in as usize * fan_out as usize)
                    .map(|_| qrange(rng, -a, a))
                    .collect(),
                bias: (0..fan_out as usize)
                    .map(|_| qrange(rng, -0.1, 0.1))
                    .collect(),
                activation: if last { final_act } else { Activation::Relu },
            });
        }
        out.tiles.push(layers);
    }
    out
}

fn gen_low_rank(rng: &mut ChaCha8Rng, res: u32, width: u32, seed: u64) -> LowRankRep {
    let planes = [PlaneAxes::Xy, PlaneAxes::Yz, PlaneAxes::Xz]
        .into_iter()
        .map(|axes| PlaneGrid {
            axes,
            resolution: res,
            feature_width: width,
            data: (0..res as usize * res as usize * width as usize)
                .map(|_| qrange(rng, -1.0, 1.0))
                .collect(),
        })
        .collect();
    LowRankRep {
        planes,
        // Exercise both aggregation modes across seeds.
        aggregation: if seed.is_multiple_of(2) {
            PlaneAggregation::Sum
        } else {
            PlaneAggregation::Product
        },
    }
}

fn gen_hash_grid(rng: &mut ChaCha8Rng, spec: &ScaleSpec) -> HashGridRep {
    let table_size = 1u32 << spec.hash_table_log2;
    let resolutions: Vec<u32> = (0..spec.hash_levels)
        .map(|l| spec.hash_base_res.saturating_mul(1 << l).max(2))
        .collect();
    let tables = (0..spec.hash_levels)
        .map(|_| {
            (0..table_size as usize * spec.hash_feature_width as usize)
                .map(|_| qrange(rng, -1.0, 1.0))
                .collect()
        })
        .collect();
    HashGridRep {
        resolutions,
        table_size,
        feature_width: spec.hash_feature_width,
        tables,
        // Fixed odd spatial-hash constants; stored with the asset so the
        // functional reference and any oracle agree on the mapping.
        hash_constants: [0x9E3F_79B1, 0x85EB_CA77, 0xC2B2_AE3D],
    }
}

fn gen_gaussians(rng: &mut ChaCha8Rng, count: u32, sh_degree: u32) -> GaussianSet {
    let k = ((sh_degree + 1) * (sh_degree + 1)) as usize;
    let mut set = GaussianSet {
        means: Vec::new(),
        covariances: Vec::new(),
        opacities: Vec::new(),
        sh_degree,
        sh_coeffs: Vec::new(),
    };
    for _ in 0..count {
        set.means.push(Vector3::new(
            qrange(rng, -1.2, 1.2),
            qrange(rng, -1.2, 1.2),
            qrange(rng, -6.0, -2.0),
        ));

        // Random orientation and per-axis scales; the covariance is PSD by
        // construction and mirrored component-wise so f32 rounding cannot
        // break symmetry.
        let axis = Unit::new_normalize(Vector3::new(
            rng.gen_range(-1.0..1.0f64),
            rng.gen_range(-1.0..1.0f64),
            rng.gen_range(-1.0..1.0f64),
        ));
        let rot = Rotation3::from_axis_angle(&axis, rng.gen_range(0.0..std::f64::consts::TAU));
        let scales = Vector3::new(
            rng.gen_range(0.05..0.25f64),
            rng.gen_range(0.05..0.25f64),
            rng.gen_range(0.05..0.25f64),
        );
        let cov = rot.matrix()
            * Matrix3::from_diagonal(&scales.map(|s| s * s))
            * rot.matrix().transpose();
        let mut sym = Matrix3::zeros();
        for r in 0..3 {
            for c in r..3 {
                let v = q(cov[(r, c)]);
                sym[(r, c)] = v;
                sym[(c, r)] = v;
            }
        }
        set.covariances.push(sym);

        set.opacities.push(qrange(rng, 0.3, 0.95));

        let mut coeffs = Vec::with_capacity(3 * k);
        for _channel in 0..3 {
            // DC term sized so colors land inside [0,1] before clamping.
            coeffs.push(qrange(rng, -1.5, 1.5));
            for _ in 1..k {
                coeffs.push(qrange(rng, -0.3, 0.3));
            }
        }
        set.sh_coeffs.push(coeffs);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::validate_scene;

    #[test]
    fn same_triple_is_bit_identical() {
        let a = generate_synthetic_scene(PipelineKind::Mesh, 7, ScaleClass::Tiny);
        let b = generate_synthetic_scene(PipelineKind::Mesh, 7, ScaleClass::Tiny);
        let ma = a.mesh.as_ref().unwrap();
        let mb = b.mesh.as_ref().unwrap();
        assert_eq!(ma.vertices.len(), mb.vertices.len());
        for (va, vb) in ma.vertices.iter().zip(&mb.vertices) {
            assert_eq!(va, vb);
        }
        let ta = a.texture.as_ref().unwrap();
        let tb = b.texture.as_ref().unwrap();
        assert_eq!(ta.data, tb.data);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_synthetic_scene(PipelineKind::Mesh, 0, ScaleClass::Tiny);
        let b = generate_synthetic_scene(PipelineKind::Mesh, 1, ScaleClass::Tiny);
        assert_ne!(
            a.mesh.as_ref().unwrap().vertices[0],
            b.mesh.as_ref().unwrap().vertices[0]
        );
    }

    #[test]
    fn hash_grid_resolutions_strictly_increase() {
        let assets = generate_synthetic_scene(PipelineKind::HashGrid, 0, ScaleClass::Tiny);
        let grid = assets.hash_grid.as_ref().unwrap();
        for w in grid.resolutions.windows(2) {
            assert!(w[1] > w[0], "resolutions {:?}", grid.resolutions);
        }
        assert!(grid.table_size.is_power_of_two());
    }

    #[test]
    fn gaussian_covariances_are_symmetric_psd() {
        // PSD is checked against an eigenvalue oracle inside validate_scene.
        let assets = generate_synthetic_scene(PipelineKind::Gaussian, 3, ScaleClass::Small);
        let g = assets.gaussians.as_ref().unwrap();
        for cov in &g.covariances {
            assert_eq!(cov[(0, 1)], cov[(1, 0)]);
            assert_eq!(cov[(0, 2)], cov[(2, 0)]);
            assert_eq!(cov[(1, 2)], cov[(2, 1)]);
            let eig = nalgebra::SymmetricEigen::new(*cov);
            assert!(eig.eigenvalues.min() > -1e-9);
        }
        assert!(validate_scene(&assets).is_empty());
    }

    #[test]
    fn all_kinds_validate_cleanly() {
        for kind in PipelineKind::ALL {
            for seed in [0u64, 9] {
                let assets = generate_synthetic_scene(kind, seed, ScaleClass::Tiny);
                let report = validate_scene(&assets);
                assert!(report.is_empty(), "{kind:?} seed {seed}: {report:?}");
            }
        }
    }

    #[test]
    fn violations_are_detected_per_field() {
        let mut assets = generate_synthetic_scene(PipelineKind::Mesh, 0, ScaleClass::Tiny);
        let nv = assets.mesh.as_ref().unwrap().vertices.len() as u32;
        assets.mesh.as_mut().unwrap().triangles[0][1] = nv; // one past the end
        let report = validate_scene(&assets);
        assert!(
            report.iter().any(|v| v.path == "mesh.triangles[0]"),
            "{report:?}"
        );

        let mut assets = generate_synthetic_scene(PipelineKind::Gaussian, 0, ScaleClass::Tiny);
        assets.gaussians.as_mut().unwrap().opacities[2] = 1.5;
        let report = validate_scene(&assets);
        assert!(
            report.iter().any(|v| v.path == "gaussians.opacities[2]"),
            "{report:?}"
        );

        let mut assets = generate_synthetic_scene(PipelineKind::HashGrid, 0, ScaleClass::Tiny);
        assets.hash_grid.as_mut().unwrap().resolutions[1] = 2;
        let report = validate_scene(&assets);
        assert!(
            report.iter().any(|v| v.path == "hash_grid.resolutions"),
            "{report:?}"
        );

        let mut assets = generate_synthetic_scene(PipelineKind::HashGrid, 0, ScaleClass::Tiny);
        assets.hash_grid.as_mut().unwrap().table_size -= 1;
        let report = validate_scene(&assets);
        assert!(
            report.iter().any(|v| v.path == "hash_grid.table_size"),
            "{report:?}"
        );

        let mut assets = generate_synthetic_scene(PipelineKind::Gaussian, 0, ScaleClass::Tiny);
        assets.gaussians.as_mut().unwrap().covariances[0][(0, 1)] += 0.01;
        let report = validate_scene(&assets);
        assert!(
            report
                .iter()
                .any(|v| v.path.starts_with("gaussians.covariances[0]")),
            "{report:?}"
        );

        let mut assets = generate_synthetic_scene(PipelineKind::Mlp, 0, ScaleClass::Tiny);
        assets.mlp.as_mut().unwrap().tiles[0][1].in_dim += 1;
        let report = validate_scene(&assets);
        assert!(!report.is_empty(), "mlp chain mismatch not caught");
    }
}
