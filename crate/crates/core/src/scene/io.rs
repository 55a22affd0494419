//! Scene serialization: a JSON manifest (`scene.json`) describing shapes and
//! dtypes, next to raw little-endian binary blobs.
//!
//! Floats are stored as f32. The generator only emits f32-exact values, so
//! save/load round trips reproduce the in-memory scene bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

use super::{
    Activation, GaussianSet, HashGridRep, LowRankRep, MeshSet, MlpLayer, MlpParams, PipelineKind,
    PlaneAggregation, PlaneAxes, PlaneGrid, ScaleClass, SceneAssets, Texture,
};

pub const SCENE_MANIFEST: &str = "scene.json";
const SCENE_FORMAT: &str = "nrsim-scene/1";

#[derive(Serialize, Deserialize)]
struct BlobRef {
    file: String,
    dtype: String,
    shape: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct MeshMeta {
    vertices: BlobRef,
    uvs: BlobRef,
    triangles: BlobRef,
}

#[derive(Serialize, Deserialize)]
struct TextureMeta {
    width: u32,
    height: u32,
    channels: u32,
    data: BlobRef,
}

#[derive(Serialize, Deserialize)]
struct MlpMeta {
    tile_grid: u32,
    layer_widths: Vec<u32>,
    activations: Vec<String>,
    /// All parameters, tile-major then layer-major: weights then bias.
    params: BlobRef,
}

#[derive(Serialize, Deserialize)]
struct PlaneMeta {
    axes: String,
    resolution: u32,
    feature_width: u32,
    data: BlobRef,
}

#[derive(Serialize, Deserialize)]
struct LowRankMeta {
    aggregation: String,
    planes: Vec<PlaneMeta>,
}

#[derive(Serialize, Deserialize)]
struct HashGridMeta {
    resolutions: Vec<u32>,
    table_size: u32,
    feature_width: u32,
    hash_constants: [u32; 3],
    /// Level-major concatenation of all tables.
    tables: BlobRef,
}

#[derive(Serialize, Deserialize)]
struct GaussianMeta {
    count: u32,
    sh_degree: u32,
    means: BlobRef,
    /// Full 3x3 row-major covariances.
    covariances: BlobRef,
    opacities: BlobRef,
    sh_coeffs: BlobRef,
}

#[derive(Serialize, Deserialize)]
struct SceneManifest {
    format: String,
    kind: String,
    scale: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mesh: Option<MeshMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    texture: Option<TextureMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mlp: Option<MlpMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low_rank: Option<LowRankMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hash_grid: Option<HashGridMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaussians: Option<GaussianMeta>,
}

// ---------------------------------------------------------------------------
// blob helpers
// ---------------------------------------------------------------------------

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_f32_blob(dir: &Path, name: &str, values: &[f64], shape: &[u64]) -> Result<BlobRef> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_atomic(&dir.join(name), &bytes)?;
    Ok(BlobRef {
        file: name.to_string(),
        dtype: "f32".into(),
        shape: shape.to_vec(),
    })
}

fn write_u32_blob(dir: &Path, name: &str, values: &[u32], shape: &[u64]) -> Result<BlobRef> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(&dir.join(name), &bytes)?;
    Ok(BlobRef {
        file: name.to_string(),
        dtype: "u32".into(),
        shape: shape.to_vec(),
    })
}

fn blob_len(blob: &BlobRef) -> u64 {
    blob.shape.iter().product()
}

fn read_f32_blob(dir: &Path, blob: &BlobRef) -> Result<Vec<f64>> {
    if blob.dtype != "f32" {
        return Err(CoreError::Io(format!(
            "blob {} has dtype {}, expected f32",
            blob.file, blob.dtype
        )));
    }
    let bytes = fs::read(dir.join(&blob.file))?;
    let want = blob_len(blob) as usize;
    if bytes.len() != want * 4 {
        return Err(CoreError::Io(format!(
            "blob {}: {} bytes, manifest shape implies {}",
            blob.file,
            bytes.len(),
            want * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn read_u32_blob(dir: &Path, blob: &BlobRef) -> Result<Vec<u32>> {
    if blob.dtype != "u32" {
        return Err(CoreError::Io(format!(
            "blob {} has dtype {}, expected u32",
            blob.file, blob.dtype
        )));
    }
    let bytes = fs::read(dir.join(&blob.file))?;
    let want = blob_len(blob) as usize;
    if bytes.len() != want * 4 {
        return Err(CoreError::Io(format!(
            "blob {}: {} bytes, manifest shape implies {}",
            blob.file,
            bytes.len(),
            want * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn act_name(a: Activation) -> &'static str {
    match a {
        Activation::Linear => "linear",
        Activation::Relu => "relu",
        Activation::Sigmoid => "sigmoid",
    }
}

fn act_from(name: &str) -> Result<Activation> {
    match name {
        "linear" => Ok(Activation::Linear),
        "relu" => Ok(Activation::Relu),
        "sigmoid" => Ok(Activation::Sigmoid),
        other => Err(CoreError::Io(format!("unknown activation `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// save / load
// ---------------------------------------------------------------------------

/// Write a scene as `scene.json` plus blobs into `dir` (created if missing).
/// Returns the list of files written (manifest first).
pub fn save_scene(dir: &Path, assets: &SceneAssets) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![dir.join(SCENE_MANIFEST)];
    let mut track = |dir: &Path, blob: BlobRef| {
        files.push(dir.join(&blob.file));
        blob
    };

    let mesh = match &assets.mesh {
        Some(m) => {
            let flat_v: Vec<f64> = m.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
            let flat_uv: Vec<f64> = m.uvs.iter().flatten().copied().collect();
            let flat_t: Vec<u32> = m.triangles.iter().flatten().copied().collect();
            Some(MeshMeta {
                vertices: track(
                    dir,
                    write_f32_blob(
                        dir,
                        "mesh_vertices.bin",
                        &flat_v,
                        &[m.vertices.len() as u64, 3],
                    )?,
                ),
                uvs: track(
                    dir,
                    write_f32_blob(dir, "mesh_uvs.bin", &flat_uv, &[m.uvs.len() as u64, 2])?,
                ),
                triangles: track(
                    dir,
                    write_u32_blob(
                        dir,
                        "mesh_triangles.bin",
                        &flat_t,
                        &[m.triangles.len() as u64, 3],
                    )?,
                ),
            })
        }
        None => None,
    };

    let texture = match &assets.texture {
        Some(t) => Some(TextureMeta {
            width: t.width,
            height: t.height,
            channels: t.channels,
            data: track(
                dir,
                write_f32_blob(
                    dir,
                    "texture.bin",
                    &t.data,
                    &[t.height as u64, t.width as u64, t.channels as u64],
                )?,
            ),
        }),
        None => None,
    };

    let mlp = match &assets.mlp {
        Some(m) => {
            let layers0 = &m.tiles[0];
            let mut widths = vec![layers0[0].in_dim];
            widths.extend(layers0.iter().map(|l| l.out_dim));
            let activations = layers0
                .iter()
                .map(|l| act_name(l.activation).to_string())
                .collect();
            let mut params = Vec::new();
            for tile in &m.tiles {
                for layer in tile {
                    params.extend_from_slice(&layer.weights);
                    params.extend_from_slice(&layer.bias);
                }
            }
            Some(MlpMeta {
                tile_grid: m.tile_grid,
                layer_widths: widths,
                activations,
                params: track(
                    dir,
                    write_f32_blob(dir, "mlp_params.bin", &params, &[params.len() as u64])?,
                ),
            })
        }
        None => None,
    };

    let low_rank = match &assets.low_rank {
        Some(lr) => {
            let mut planes = Vec::new();
            for (i, p) in lr.planes.iter().enumerate() {
                planes.push(PlaneMeta {
                    axes: p.axes.name().to_string(),
                    resolution: p.resolution,
                    feature_width: p.feature_width,
                    data: track(
                        dir,
                        write_f32_blob(
                            dir,
                            &format!("plane_{i}.bin"),
                            &p.data,
                            &[
                                p.resolution as u64,
                                p.resolution as u64,
                                p.feature_width as u64,
                            ],
                        )?,
                    ),
                });
            }
            Some(LowRankMeta {
                aggregation: match lr.aggregation {
                    PlaneAggregation::Sum => "sum".into(),
                    PlaneAggregation::Product => "product".into(),
                },
                planes,
            })
        }
        None => None,
    };

    let hash_grid = match &assets.hash_grid {
        Some(g) => {
            let flat: Vec<f64> = g.tables.iter().flatten().copied().collect();
            Some(HashGridMeta {
                resolutions: g.resolutions.clone(),
                table_size: g.table_size,
                feature_width: g.feature_width,
                hash_constants: g.hash_constants,
                tables: track(
                    dir,
                    write_f32_blob(
                        dir,
                        "hash_tables.bin",
                        &flat,
                        &[
                            g.levels() as u64,
                            g.table_size as u64,
                            g.feature_width as u64,
                        ],
                    )?,
                ),
            })
        }
        None => None,
    };

    let gaussians = match &assets.gaussians {
        Some(g) => {
            let n = g.len() as u64;
            let means: Vec<f64> = g.means.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
            let covs: Vec<f64> = g
                .covariances
                .iter()
                .flat_map(|c| c.transpose().as_slice().to_vec())
                .collect();
            let sh: Vec<f64> = g.sh_coeffs.iter().flatten().copied().collect();
            let k = g.sh_basis_width() as u64;
            Some(GaussianMeta {
                count: g.len() as u32,
                sh_degree: g.sh_degree,
                means: track(
                    dir,
                    write_f32_blob(dir, "gaussian_means.bin", &means, &[n, 3])?,
                ),
                covariances: track(
                    dir,
                    write_f32_blob(dir, "gaussian_covs.bin", &covs, &[n, 3, 3])?,
                ),
                opacities: track(
                    dir,
                    write_f32_blob(dir, "gaussian_opacities.bin", &g.opacities, &[n])?,
                ),
                sh_coeffs: track(
                    dir,
                    write_f32_blob(dir, "gaussian_sh.bin", &sh, &[n, 3, k])?,
                ),
            })
        }
        None => None,
    };

    let manifest = SceneManifest {
        format: SCENE_FORMAT.into(),
        kind: assets.kind.name().into(),
        scale: assets.scale.name().into(),
        seed: assets.seed,
        mesh,
        texture,
        mlp,
        low_rank,
        hash_grid,
        gaussians,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CoreError::Io(format!("manifest encode: {e}")))?;
    write_atomic(&dir.join(SCENE_MANIFEST), json.as_bytes())?;
    Ok(files)
}

/// Load a scene directory written by [`save_scene`].
pub fn load_scene(dir: &Path) -> Result<SceneAssets> {
    let json = fs::read_to_string(dir.join(SCENE_MANIFEST))?;
    let manifest: SceneManifest =
        serde_json::from_str(&json).map_err(|e| CoreError::Io(format!("manifest parse: {e}")))?;
    if manifest.format != SCENE_FORMAT {
        return Err(CoreError::Io(format!(
            "unsupported scene format `{}` (expected `{SCENE_FORMAT}`)",
            manifest.format
        )));
    }
    let kind = PipelineKind::from_name(&manifest.kind)
        .ok_or_else(|| CoreError::Io(format!("unknown pipeline kind `{}`", manifest.kind)))?;
    let scale = ScaleClass::from_name(&manifest.scale)
        .ok_or_else(|| CoreError::Io(format!("unknown scale `{}`", manifest.scale)))?;

    let mesh = match &manifest.mesh {
        Some(m) => {
            let v = read_f32_blob(dir, &m.vertices)?;
            let uv = read_f32_blob(dir, &m.uvs)?;
            let t = read_u32_blob(dir, &m.triangles)?;
            Some(MeshSet {
                vertices: v
                    .chunks_exact(3)
                    .map(|c| Vector3::new(c[0], c[1], c[2]))
                    .collect(),
                uvs: uv.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
                triangles: t.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            })
        }
        None => None,
    };

    let texture = match &manifest.texture {
        Some(t) => Some(Texture {
            width: t.width,
            height: t.height,
            channels: t.channels,
            data: read_f32_blob(dir, &t.data)?,
        }),
        None => None,
    };

    let mlp = match &manifest.mlp {
        Some(m) => {
            let params = read_f32_blob(dir, &m.params)?;
            if m.activations.len() + 1 != m.layer_widths.len() {
                return Err(CoreError::Io(
                    "mlp manifest: activations do not match layer widths".into(),
                ));
            }
            let tiles_n = (m.tile_grid as usize).pow(3);
            let per_tile: usize = m
                .layer_widths
                .windows(2)
                .map(|w| w[0] as usize * w[1] as usize + w[1] as usize)
                .sum();
            if params.len() != tiles_n * per_tile {
                return Err(CoreError::Io(format!(
                    "mlp params blob: {} values, expected {}",
                    params.len(),
                    tiles_n * per_tile
                )));
            }
            let mut tiles = Vec::with_capacity(tiles_n);
            let mut off = 0usize;
            for _ in 0..tiles_n {
                let mut layers = Vec::new();
                for (i, w) in m.layer_widths.windows(2).enumerate() {
                    let (ni, no) = (w[0] as usize, w[1] as usize);
                    let weights = params[off..off + ni * no].to_vec();
                    off += ni * no;
                    let bias = params[off..off + no].to_vec();
                    off += no;
                    layers.push(MlpLayer {
                        in_dim: w[0],
                        out_dim: w[1],
                        weights,
                        bias,
                        activation: act_from(&m.activations[i])?,
                    });
                }
                tiles.push(layers);
            }
            Some(MlpParams {
                tile_grid: m.tile_grid,
                tiles,
            })
        }
        None => None,
    };

    let low_rank = match &manifest.low_rank {
        Some(lr) => {
            let mut planes = Vec::new();
            for p in &lr.planes {
                let axes = match p.axes.as_str() {
                    "xy" => PlaneAxes::Xy,
                    "yz" => PlaneAxes::Yz,
                    "xz" => PlaneAxes::Xz,
                    other => return Err(CoreError::Io(format!("unknown plane axes `{other}`"))),
                };
                planes.push(PlaneGrid {
                    axes,
                    resolution: p.resolution,
                    feature_width: p.feature_width,
                    data: read_f32_blob(dir, &p.data)?,
                });
            }
            let aggregation = match lr.aggregation.as_str() {
                "sum" => PlaneAggregation::Sum,
                "product" => PlaneAggregation::Product,
                other => return Err(CoreError::Io(format!("unknown aggregation `{other}`"))),
            };
            Some(LowRankRep {
                planes,
                aggregation,
            })
        }
        None => None,
    };

    let hash_grid = match &manifest.hash_grid {
        Some(g) => {
            let flat = read_f32_blob(dir, &g.tables)?;
            let per_level = g.table_size as usize * g.feature_width as usize;
            if flat.len() != per_level * g.resolutions.len() {
                return Err(CoreError::Io(format!(
                    "hash tables blob: {} values, expected {}",
                    flat.len(),
                    per_level * g.resolutions.len()
                )));
            }
            Some(HashGridRep {
                resolutions: g.resolutions.clone(),
                table_size: g.table_size,
                feature_width: g.feature_width,
                tables: flat.chunks_exact(per_level).map(|c| c.to_vec()).collect(),
                hash_constants: g.hash_constants,
            })
        }
        None => None,
    };

    let gaussians = match &manifest.gaussians {
        Some(g) => {
            let means = read_f32_blob(dir, &g.means)?;
            let covs = read_f32_blob(dir, &g.covariances)?;
            let opac = read_f32_blob(dir, &g.opacities)?;
            let sh = read_f32_blob(dir, &g.sh_coeffs)?;
            let n = g.count as usize;
            let k = ((g.sh_degree + 1) * (g.sh_degree + 1)) as usize;
            let set = GaussianSet {
                means: means
                    .chunks_exact(3)
                    .map(|c| Vector3::new(c[0], c[1], c[2]))
                    .collect(),
                covariances: covs.chunks_exact(9).map(Matrix3::from_row_slice).collect(),
                opacities: opac,
                sh_degree: g.sh_degree,
                sh_coeffs: sh.chunks_exact(3 * k).map(|c| c.to_vec()).collect(),
            };
            if set.len() != n {
                return Err(CoreError::Io(format!(
                    "gaussian blobs describe {} primitives, manifest says {n}",
                    set.len()
                )));
            }
            Some(set)
        }
        None => None,
    };

    Ok(SceneAssets {
        kind,
        scale,
        seed: manifest.seed,
        mesh,
        texture,
        mlp,
        low_rank,
        hash_grid,
        gaussians,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::generate_synthetic_scene;

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        for kind in PipelineKind::ALL {
            let original = generate_synthetic_scene(kind, 11, ScaleClass::Tiny);
            let sub = dir.path().join(kind.name());
            save_scene(&sub, &original).unwrap();
            let loaded = load_scene(&sub).unwrap();

            assert_eq!(loaded.kind, original.kind);
            assert_eq!(loaded.seed, original.seed);
            match (&original.mesh, &loaded.mesh) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.vertices, b.vertices);
                    assert_eq!(a.triangles, b.triangles);
                    assert_eq!(a.uvs, b.uvs);
                }
                (None, None) => {}
                _ => panic!("mesh presence mismatch for {kind:?}"),
            }
            match (&original.hash_grid, &loaded.hash_grid) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.resolutions, b.resolutions);
                    assert_eq!(a.hash_constants, b.hash_constants);
                    assert_eq!(a.tables, b.tables);
                }
                (None, None) => {}
                _ => panic!("hash grid presence mismatch for {kind:?}"),
            }
            match (&original.mlp, &loaded.mlp) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.tile_grid, b.tile_grid);
                    for (ta, tb) in a.tiles.iter().zip(&b.tiles) {
                        for (la, lb) in ta.iter().zip(tb) {
                            assert_eq!(la.weights, lb.weights);
                            assert_eq!(la.bias, lb.bias);
                            assert_eq!(la.activation, lb.activation);
                        }
                    }
                }
                (None, None) => {}
                _ => panic!("mlp presence mismatch for {kind:?}"),
            }
            match (&original.gaussians, &loaded.gaussians) {
                (Some(a), Some(b)) => {
                    assert_eq!(a.means, b.means);
                    assert_eq!(a.covariances, b.covariances);
                    assert_eq!(a.opacities, b.opacities);
                    assert_eq!(a.sh_coeffs, b.sh_coeffs);
                }
                (None, None) => {}
                _ => panic!("gaussian presence mismatch for {kind:?}"),
            }
        }
    }

    #[test]
    fn truncated_blob_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let assets = generate_synthetic_scene(PipelineKind::HashGrid, 0, ScaleClass::Tiny);
        save_scene(dir.path(), &assets).unwrap();
        let blob = dir.path().join("hash_tables.bin");
        let bytes = std::fs::read(&blob).unwrap();
        std::fs::write(&blob, &bytes[..bytes.len() - 4]).unwrap();
        let err = load_scene(dir.path()).unwrap_err();
        assert!(err.to_string().contains("hash_tables.bin"), "{err}");
    }
}
