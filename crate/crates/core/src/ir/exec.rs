//! Functional graph execution: walk the node chain, transforming a typed
//! intermediate state per role. Produces the same image as a monolithic
//! renderer of the pipeline, by construction of the shared kernels.

use nalgebra::Vector3;

use crate::error::{CoreError, Result};
use crate::image::Image;
use crate::kernels::blend::{alpha_from_density, volume_blend, BlendSample};
use crate::kernels::gemm::gemm;
use crate::kernels::grid::{combined_grid_index, decomposed_grid_index, texture_index, FilterMode};
use crate::kernels::raster::{
    fragment_view_depth, rasterize_meshes, space_convert, ClipVertex, FragmentBuffer,
};
use crate::kernels::ray::{pixel_ray, ray_cast, RaySample};
use crate::kernels::sort::patch_sort;
use crate::kernels::splat::{splat_gaussians, SplatCandidateList};
use crate::scene::{Camera, MlpParams, SceneAssets};

use super::{PipelineGraph, Role, SamplingConfig};

/// Ray samples plus the pixel each ray belongs to (rays may cover only part
/// of the viewport, e.g. hybrid band sampling on rasterized hits).
struct SampleBatch {
    pixel_index: Vec<u32>,
    samples: Vec<RaySample>,
    per_ray: u32,
}

enum Stage {
    Start,
    Fragments {
        clip: Vec<ClipVertex>,
        buf: FragmentBuffer,
    },
    PixelFeatures {
        width: usize,
        data: Vec<f64>,
        covered: Vec<bool>,
    },
    Samples(SampleBatch),
    SampleFeatures {
        width: usize,
        data: Vec<f64>,
        batch: SampleBatch,
    },
    Candidates {
        list: SplatCandidateList,
        sorted: bool,
    },
    ColoredCandidates {
        list: SplatCandidateList,
        colors: Vec<[f64; 3]>,
    },
    Done(Image),
}

impl Stage {
    fn name(&self) -> &'static str {
        match self {
            Stage::Start => "start",
            Stage::Fragments { .. } => "fragments",
            Stage::PixelFeatures { .. } => "pixel-features",
            Stage::Samples(_) => "samples",
            Stage::SampleFeatures { .. } => "sample-features",
            Stage::Candidates { .. } => "candidates",
            Stage::ColoredCandidates { .. } => "colored-candidates",
            Stage::Done(_) => "image",
        }
    }
}

fn stage_error(role: Role, stage: &Stage) -> CoreError {
    CoreError::Contract(format!(
        "node role {} cannot consume stage `{}`",
        role.name(),
        stage.name()
    ))
}

/// Execute a validated graph against its assets. Deterministic: fixed pixel-
/// major iteration everywhere.
pub fn execute_graph(
    graph: &PipelineGraph,
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Image> {
    let mut stage = Stage::Start;
    for node in &graph.nodes {
        stage = step(stage, node.role, assets, camera, sampling)?;
    }
    finish(stage, camera)
}

fn missing(asset: &'static str) -> CoreError {
    CoreError::Contract(format!("graph execution needs the `{asset}` asset"))
}

fn step(
    stage: Stage,
    role: Role,
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Stage> {
    match role {
        Role::Rasterization => match stage {
            Stage::Start => {
                let mesh = assets.mesh.as_ref().ok_or_else(|| missing("mesh"))?;
                let clip = space_convert(mesh, camera);
                let buf = rasterize_meshes(&clip, &mesh.triangles, camera.viewport);
                Ok(Stage::Fragments { clip, buf })
            }
            other => Err(stage_error(role, &other)),
        },

        Role::TextureLookup => match stage {
            Stage::Fragments { buf, .. } => {
                let mesh = assets.mesh.as_ref().ok_or_else(|| missing("mesh"))?;
                let tex = assets.texture.as_ref().ok_or_else(|| missing("texture"))?;
                let width = tex.channels as usize;
                let n = buf.index.len();
                let mut data = vec![0.0; n * width];
                let mut covered = vec![false; n];
                for i in 0..n {
                    let Some(ti) = buf.index[i] else { continue };
                    let tri = mesh.triangles[ti as usize];
                    let b = buf.bary[i];
                    let mut uv = [0.0f64; 2];
                    for (j, &v) in tri.iter().enumerate() {
                        uv[0] += b[j] * mesh.uvs[v as usize][0];
                        uv[1] += b[j] * mesh.uvs[v as usize][1];
                    }
                    let feat = texture_index(tex, uv, FilterMode::Bilinear);
                    data[i * width..][..width].copy_from_slice(&feat);
                    covered[i] = true;
                }
                Ok(Stage::PixelFeatures {
                    width,
                    data,
                    covered,
                })
            }
            other => Err(stage_error(role, &other)),
        },

        Role::RayCast => match stage {
            Stage::Start => {
                let (w, h) = camera.viewport;
                let per_ray = sampling.samples_per_ray;
                let mut batch = SampleBatch {
                    pixel_index: Vec::with_capacity((w * h) as usize),
                    samples: Vec::with_capacity((w * h * per_ray) as usize),
                    per_ray,
                };
                for py in 0..h {
                    for px in 0..w {
                        batch.pixel_index.push(py * w + px);
                        batch.samples.extend(ray_cast(camera, (px, py), per_ray));
                    }
                }
                Ok(Stage::Samples(batch))
            }
            other => Err(stage_error(role, &other)),
        },

        Role::GridLookup => {
            // Hybrid: fragments first become band samples around the hit.
            let batch = match stage {
                Stage::Samples(batch) => batch,
                Stage::Fragments { clip, buf } => {
                    band_samples(&clip, &buf, assets, camera, sampling)?
                }
                other => return Err(stage_error(role, &other)),
            };
            let (width, data) = if let Some(grid) = assets.hash_grid.as_ref() {
                let width = grid.levels() as usize * grid.feature_width as usize;
                let mut data = Vec::with_capacity(batch.samples.len() * width);
                for s in &batch.samples {
                    data.extend(combined_grid_index(grid, s.position));
                }
                (width, data)
            } else if let Some(lr) = assets.low_rank.as_ref() {
                let width = lr.planes[0].feature_width as usize;
                let mut data = Vec::with_capacity(batch.samples.len() * width);
                for s in &batch.samples {
                    data.extend(decomposed_grid_index(lr, s.position));
                }
                (width, data)
            } else {
                return Err(missing("hash grid or low-rank grid"));
            };
            Ok(Stage::SampleFeatures { width, data, batch })
        }

        Role::MlpInference => {
            let mlp = assets.mlp.as_ref().ok_or_else(|| missing("mlp"))?;
            match stage {
                Stage::PixelFeatures {
                    width,
                    data,
                    covered,
                } => {
                    let out_w = mlp.output_width() as usize;
                    let n = covered.len();
                    let mut out = vec![0.0; n * out_w];
                    let rows: Vec<usize> = (0..n).filter(|&i| covered[i]).collect();
                    let inputs: Vec<f64> = rows
                        .iter()
                        .flat_map(|&i| data[i * width..][..width].iter().copied())
                        .collect();
                    let y = run_layers(mlp, 0, &inputs, rows.len(), width)?;
                    for (r, &i) in rows.iter().enumerate() {
                        out[i * out_w..][..out_w].copy_from_slice(&y[r * out_w..][..out_w]);
                    }
                    Ok(Stage::PixelFeatures {
                        width: out_w,
                        data: out,
                        covered,
                    })
                }
                Stage::SampleFeatures { width, data, batch } => {
                    let out_w = mlp.output_width() as usize;
                    let y = run_tiled(mlp, &data, width, &batch.samples)?;
                    Ok(Stage::SampleFeatures {
                        width: out_w,
                        data: y,
                        batch,
                    })
                }
                Stage::Samples(batch) => {
                    // Raw samples: the network consumes position + direction.
                    let width = 6usize;
                    let mut data = Vec::with_capacity(batch.samples.len() * width);
                    for s in &batch.samples {
                        data.extend_from_slice(&[
                            s.position.x,
                            s.position.y,
                            s.position.z,
                            s.direction.x,
                            s.direction.y,
                            s.direction.z,
                        ]);
                    }
                    let out_w = mlp.output_width() as usize;
                    let y = run_tiled(mlp, &data, width, &batch.samples)?;
                    Ok(Stage::SampleFeatures {
                        width: out_w,
                        data: y,
                        batch,
                    })
                }
                other => Err(stage_error(role, &other)),
            }
        }

        Role::Splatting => match stage {
            Stage::Start => {
                let set = assets
                    .gaussians
                    .as_ref()
                    .ok_or_else(|| missing("gaussians"))?;
                let list = splat_gaussians(set, camera, sampling.alpha_threshold);
                Ok(Stage::Candidates {
                    list,
                    sorted: false,
                })
            }
            other => Err(stage_error(role, &other)),
        },

        Role::DepthSort => match stage {
            Stage::Candidates { mut list, .. } => {
                for px in list.pixels.iter_mut() {
                    let keys: Vec<f64> = px.iter().map(|c| c.depth).collect();
                    let perm = patch_sort(&keys);
                    let sorted = perm.iter().map(|&i| px[i as usize]).collect();
                    *px = sorted;
                }
                Ok(Stage::Candidates { list, sorted: true })
            }
            other => Err(stage_error(role, &other)),
        },

        Role::ShColor => match stage {
            Stage::Candidates { list, sorted: true } => {
                let set = assets
                    .gaussians
                    .as_ref()
                    .ok_or_else(|| missing("gaussians"))?;
                let k = set.sh_basis_width() as usize;
                let colors = (0..set.len())
                    .map(|g| {
                        let dir = (set.means[g] - camera.position).normalize();
                        let basis = sh_basis(dir, set.sh_degree);
                        let coeffs = &set.sh_coeffs[g];
                        let mut rgb = [0.0f64; 3];
                        for (c, out) in rgb.iter_mut().enumerate() {
                            let mut acc = 0.0;
                            for (j, &b) in basis.iter().enumerate() {
                                acc += b * coeffs[c * k + j];
                            }
                            *out = (acc + 0.5).max(0.0);
                        }
                        rgb
                    })
                    .collect();
                Ok(Stage::ColoredCandidates { list, colors })
            }
            other => Err(stage_error(role, &other)),
        },

        Role::Blending => match stage {
            Stage::SampleFeatures { width, data, batch } => {
                if width != 4 {
                    return Err(CoreError::Contract(format!(
                        "blending expects 4-wide samples, got {width}"
                    )));
                }
                let (w, h) = camera.viewport;
                let mut img = Image::new(w, h, 3);
                let per = batch.per_ray as usize;
                for (ri, &pix) in batch.pixel_index.iter().enumerate() {
                    let mut blend = Vec::with_capacity(per);
                    for s in 0..per {
                        let i = ri * per + s;
                        let row = &data[i * 4..][..4];
                        blend.push(BlendSample {
                            color: [row[0], row[1], row[2]],
                            alpha: alpha_from_density(row[3], batch.samples[i].segment)?,
                        });
                    }
                    let (rgb, _t) = volume_blend(&blend, sampling.early_termination);
                    let at = pix as usize * 3;
                    img.data[at..at + 3].copy_from_slice(&rgb);
                }
                Ok(Stage::Done(img))
            }
            Stage::ColoredCandidates { list, colors } => {
                let mut img = Image::new(list.width, list.height, 3);
                for (pi, px) in list.pixels.iter().enumerate() {
                    let blend: Vec<BlendSample> = px
                        .iter()
                        .map(|c| BlendSample {
                            color: colors[c.gaussian as usize],
                            alpha: c.alpha,
                        })
                        .collect();
                    let (rgb, _t) = volume_blend(&blend, sampling.early_termination);
                    img.data[pi * 3..pi * 3 + 3].copy_from_slice(&rgb);
                }
                Ok(Stage::Done(img))
            }
            other => Err(stage_error(role, &other)),
        },
    }
}

/// Build the hybrid pipeline's band samples: for each rasterized hit, a few
/// midpoint samples across a thin slab around the surface depth.
fn band_samples(
    clip: &[ClipVertex],
    buf: &FragmentBuffer,
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<SampleBatch> {
    let mesh = assets.mesh.as_ref().ok_or_else(|| missing("mesh"))?;
    let half_band = sampling.band_fraction * (camera.far - camera.near);
    let per_ray = sampling.band_samples;
    let segment = 2.0 * half_band / per_ray as f64;
    let mut batch = SampleBatch {
        pixel_index: Vec::new(),
        samples: Vec::new(),
        per_ray,
    };
    for py in 0..buf.height {
        for px in 0..buf.width {
            let i = buf.at(px, py);
            let Some(ti) = buf.index[i] else { continue };
            let t_hit = fragment_view_depth(buf.bary[i], mesh.triangles[ti as usize], clip);
            let (origin, dir) = pixel_ray(camera, (px, py));
            let unit = dir.normalize();
            batch.pixel_index.push(py * buf.width + px);
            for s in 0..per_ray {
                let t = t_hit - half_band + (s as f64 + 0.5) * segment;
                batch.samples.push(RaySample {
                    t,
                    position: origin + dir * t,
                    direction: unit,
                    segment,
                });
            }
        }
    }
    Ok(batch)
}

/// Run one tile's layer stack over a row batch.
fn run_layers(
    mlp: &MlpParams,
    tile: usize,
    inputs: &[f64],
    rows: usize,
    width: usize,
) -> Result<Vec<f64>> {
    let mut x = inputs.to_vec();
    let mut w = width;
    for layer in &mlp.tiles[tile] {
        x = gemm(
            &x,
            rows,
            w,
            &layer.weights,
            layer.out_dim as usize,
            &layer.bias,
            layer.activation,
        )?;
        w = layer.out_dim as usize;
    }
    Ok(x)
}

/// Run the (possibly tiled) MLP over per-sample rows, routing each sample to
/// the tile containing its position. Results are written back in input order.
fn run_tiled(
    mlp: &MlpParams,
    data: &[f64],
    width: usize,
    samples: &[RaySample],
) -> Result<Vec<f64>> {
    let rows = samples.len();
    let out_w = mlp.output_width() as usize;
    if mlp.tiles.len() == 1 {
        return run_layers(mlp, 0, data, rows, width);
    }
    let mut out = vec![0.0; rows * out_w];
    let mut routing: Vec<Vec<usize>> = vec![Vec::new(); mlp.tiles.len()];
    for (i, s) in samples.iter().enumerate() {
        routing[mlp.tile_of(&s.position)].push(i);
    }
    for (tile, rows_idx) in routing.iter().enumerate() {
        if rows_idx.is_empty() {
            continue;
        }
        let inputs: Vec<f64> = rows_idx
            .iter()
            .flat_map(|&i| data[i * width..][..width].iter().copied())
            .collect();
        let y = run_layers(mlp, tile, &inputs, rows_idx.len(), width)?;
        for (r, &i) in rows_idx.iter().enumerate() {
            out[i * out_w..][..out_w].copy_from_slice(&y[r * out_w..][..out_w]);
        }
    }
    Ok(out)
}

/// First few real spherical harmonic basis values for a unit direction.
pub fn sh_basis(dir: Vector3<f64>, degree: u32) -> Vec<f64> {
    const C0: f64 = 0.282_094_791_773_878_14;
    const C1: f64 = 0.488_602_511_903_919_9;
    let mut b = vec![C0];
    if degree >= 1 {
        b.push(-C1 * dir.y);
        b.push(C1 * dir.z);
        b.push(-C1 * dir.x);
    }
    b
}

fn finish(stage: Stage, camera: &Camera) -> Result<Image> {
    match stage {
        Stage::Done(img) => Ok(img),
        // Mesh pipeline: the decoder's per-pixel RGB is the image; uncovered
        // pixels stay black.
        Stage::PixelFeatures {
            width: 3,
            data,
            covered,
        } => {
            let (w, h) = camera.viewport;
            let mut img = Image::new(w, h, 3);
            for (i, &c) in covered.iter().enumerate() {
                if c {
                    img.data[i * 3..i * 3 + 3].copy_from_slice(&data[i * 3..i * 3 + 3]);
                }
            }
            Ok(img)
        }
        other => Err(CoreError::Contract(format!(
            "graph ended in stage `{}`, expected an image",
            other.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::compile_pipeline;
    use crate::scene::{
        default_camera, generate_synthetic_scene, Activation, MeshSet, MlpLayer, PipelineKind,
        ScaleClass, Texture,
    };
    use nalgebra::Vector3;

    fn run(kind: PipelineKind, seed: u64) -> Image {
        let assets = generate_synthetic_scene(kind, seed, ScaleClass::Tiny);
        let camera = default_camera(kind, ScaleClass::Tiny);
        let sampling = SamplingConfig::for_scale(ScaleClass::Tiny);
        let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
        execute_graph(&graph, &assets, &camera, &sampling).unwrap()
    }

    #[test]
    fn every_pipeline_renders_deterministically() {
        for kind in PipelineKind::ALL {
            let a = run(kind, 3);
            let b = run(kind, 3);
            assert_eq!(a, b, "{kind:?} not bit-stable");
            assert!(
                a.data.iter().all(|v| v.is_finite()),
                "{kind:?} produced non-finite values"
            );
        }
    }

    #[test]
    fn constant_scene_renders_constant_image() {
        // One full-viewport triangle, constant texture, identity-like decoder:
        // every pixel must take the same value.
        let kind = PipelineKind::Mesh;
        let camera = default_camera(kind, ScaleClass::Tiny);
        let mut assets = generate_synthetic_scene(kind, 0, ScaleClass::Tiny);
        assets.mesh = Some(MeshSet {
            vertices: vec![
                Vector3::new(-100.0, -100.0, -3.0),
                Vector3::new(100.0, -100.0, -3.0),
                Vector3::new(0.0, 100.0, -3.0),
            ],
            triangles: vec![[0, 1, 2]],
            uvs: vec![[0.3, 0.3], [0.6, 0.3], [0.45, 0.8]],
        });
        assets.texture = Some(Texture {
            width: 4,
            height: 4,
            channels: 2,
            data: vec![0.25; 32],
        });
        // Decoder: [2 -> 3], weights sum the two channels, linear activation.
        assets.mlp = Some(crate::scene::MlpParams {
            tile_grid: 1,
            tiles: vec![vec![MlpLayer {
                in_dim: 2,
                out_dim: 3,
                weights: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                bias: vec![0.0, 0.0, 0.5],
                activation: Activation::Linear,
            }]],
        });
        let sampling = SamplingConfig::for_scale(ScaleClass::Tiny);
        let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
        let img = execute_graph(&graph, &assets, &camera, &sampling).unwrap();
        for px in img.data.chunks_exact(3) {
            assert!((px[0] - 0.25).abs() < 1e-12);
            assert!((px[1] - 0.25).abs() < 1e-12);
            assert!((px[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_density_hash_grid_renders_black() {
        let kind = PipelineKind::HashGrid;
        let camera = default_camera(kind, ScaleClass::Tiny);
        let mut assets = generate_synthetic_scene(kind, 0, ScaleClass::Tiny);
        // Zero the decoder entirely: density and color both collapse to 0
        // after ReLU, so transmittance stays 1 and the image stays black.
        if let Some(mlp) = assets.mlp.as_mut() {
            for tile in &mut mlp.tiles {
                for layer in tile {
                    layer.weights.iter_mut().for_each(|w| *w = 0.0);
                    layer.bias.iter_mut().for_each(|b| *b = 0.0);
                }
            }
        }
        let sampling = SamplingConfig::for_scale(ScaleClass::Tiny);
        let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
        let img = execute_graph(&graph, &assets, &camera, &sampling).unwrap();
        assert!(img.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn role_mismatch_is_a_contract_error() {
        let kind = PipelineKind::Mesh;
        let assets = generate_synthetic_scene(kind, 0, ScaleClass::Tiny);
        let camera = default_camera(kind, ScaleClass::Tiny);
        let sampling = SamplingConfig::for_scale(ScaleClass::Tiny);
        let mut graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
        graph.nodes.swap(0, 1);
        assert!(execute_graph(&graph, &assets, &camera, &sampling).is_err());
    }
}
