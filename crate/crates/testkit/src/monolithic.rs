//! Monolithic per-pixel renderers for every pipeline family. These never
//! build or execute an operator graph: each renderer is a straight-line loop
//! over pixels calling the numeric kernels directly, so they pin down what the
//! compiled-and-executed graphs must produce.

use nalgebra::Vector3;
use nrsim_core::error::{CoreError, Result};
use nrsim_core::image::Image;
use nrsim_core::ir::SamplingConfig;
use nrsim_core::kernels::blend::alpha_from_density;
use nrsim_core::kernels::grid::{
    combined_grid_index, decomposed_grid_index, texture_index, FilterMode,
};
use nrsim_core::kernels::raster::{fragment_view_depth, rasterize_meshes, space_convert};
use nrsim_core::kernels::ray::{pixel_ray, ray_cast};
use nrsim_core::kernels::splat::splat_gaussians;
use nrsim_core::scene::{Camera, MlpLayer, MlpParams, PipelineKind, SceneAssets};
use nrsim_core::EARLY_TERMINATION_FLOOR;

use crate::oracles::{composite, insertion_sort_oracle};

/// Render a scene without the operator graph. The output must match
/// compile-then-execute for the same assets, camera, and sampling.
pub fn render_monolithic(
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Image> {
    match assets.kind {
        PipelineKind::Mesh => render_mesh(assets, camera),
        PipelineKind::Mlp => render_mlp(assets, camera, sampling),
        PipelineKind::LowRank => render_low_rank(assets, camera, sampling),
        PipelineKind::HashGrid => render_hash_grid(assets, camera, sampling),
        PipelineKind::Gaussian => render_gaussian(assets, camera, sampling),
        PipelineKind::HybridMeshHash => render_hybrid(assets, camera, sampling),
    }
}

fn need<'a, T>(opt: &'a Option<T>, what: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| CoreError::Contract(format!("monolithic renderer needs the `{what}` asset")))
}

/// Single-row MLP forward pass: per layer, K-ascending accumulation then bias
/// and activation — the same arithmetic order as one GEMM row.
fn forward(layers: &[MlpLayer], x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    for layer in layers {
        let (ind, outd) = (layer.in_dim as usize, layer.out_dim as usize);
        let mut next = vec![0.0; outd];
        for (col, slot) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &xv) in cur.iter().take(ind).enumerate() {
                acc += xv * layer.weights[k * outd + col];
            }
            *slot = layer.activation.apply(acc + layer.bias[col]);
        }
        cur = next;
    }
    cur
}

/// Tile selection matching the executor: a single network serves every sample.
fn route<'a>(mlp: &'a MlpParams, p: &Vector3<f64>) -> &'a [MlpLayer] {
    if mlp.tiles.len() == 1 {
        &mlp.tiles[0]
    } else {
        &mlp.tiles[mlp.tile_of(p)]
    }
}

fn termination_floor(sampling: &SamplingConfig) -> f64 {
    if sampling.early_termination {
        EARLY_TERMINATION_FLOOR
    } else {
        f64::NEG_INFINITY
    }
}

fn render_mesh(assets: &SceneAssets, camera: &Camera) -> Result<Image> {
    let mesh = need(&assets.mesh, "mesh")?;
    let tex = need(&assets.texture, "texture")?;
    let mlp = need(&assets.mlp, "mlp")?;
    let clip = space_convert(mesh, camera);
    let buf = rasterize_meshes(&clip, &mesh.triangles, camera.viewport);
    let (w, h) = camera.viewport;
    let mut img = Image::new(w, h, 3);
    for i in 0..buf.index.len() {
        let Some(ti) = buf.index[i] else { continue };
        let tri = mesh.triangles[ti as usize];
        let b = buf.bary[i];
        let mut uv = [0.0f64; 2];
        for (j, &v) in tri.iter().enumerate() {
            uv[0] += b[j] * mesh.uvs[v as usize][0];
            uv[1] += b[j] * mesh.uvs[v as usize][1];
        }
        let feat = texture_index(tex, uv, FilterMode::Bilinear);
        let rgb = forward(&mlp.tiles[0], &feat);
        img.data[i * 3..i * 3 + 3].copy_from_slice(&rgb[..3]);
    }
    Ok(img)
}

/// Shared volumetric loop: per pixel, march the given samples through the MLP
/// and composite. `feature` turns a sample position into the network input.
fn march_volumetric(
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
    feature: impl Fn(&nrsim_core::kernels::ray::RaySample) -> Vec<f64>,
) -> Result<Image> {
    let mlp = need(&assets.mlp, "mlp")?;
    let (w, h) = camera.viewport;
    let mut img = Image::new(w, h, 3);
    let floor = termination_floor(sampling);
    for py in 0..h {
        for px in 0..w {
            let mut ray = Vec::with_capacity(sampling.samples_per_ray as usize);
            for s in ray_cast(camera, (px, py), sampling.samples_per_ray) {
                let y = forward(route(mlp, &s.position), &feature(&s));
                let alpha = alpha_from_density(y[3], s.segment)?;
                ray.push(([y[0], y[1], y[2]], alpha));
            }
            let (rgb, _) = composite(&ray, floor);
            let at = (py * w + px) as usize * 3;
            img.data[at..at + 3].copy_from_slice(&rgb);
        }
    }
    Ok(img)
}

fn render_mlp(assets: &SceneAssets, camera: &Camera, sampling: &SamplingConfig) -> Result<Image> {
    march_volumetric(assets, camera, sampling, |s| {
        vec![
            s.position.x,
            s.position.y,
            s.position.z,
            s.direction.x,
            s.direction.y,
            s.direction.z,
        ]
    })
}

fn render_low_rank(
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Image> {
    let lr = need(&assets.low_rank, "low-rank grid")?;
    march_volumetric(assets, camera, sampling, |s| {
        decomposed_grid_index(lr, s.position)
    })
}

fn render_hash_grid(
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Image> {
    let grid = need(&assets.hash_grid, "hash grid")?;
    march_volumetric(assets, camera, sampling, |s| {
        combined_grid_index(grid, s.position)
    })
}

fn render_gaussian(
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Image> {
    let set = need(&assets.gaussians, "gaussians")?;
    let list = splat_gaussians(set, camera, sampling.alpha_threshold);
    let k = set.sh_basis_width() as usize;
    let floor = termination_floor(sampling);
    let mut img = Image::new(list.width, list.height, 3);
    for (pi, px) in list.pixels.iter().enumerate() {
        // Stable depth order via the insertion-sort reference, independent of
        // the merge sort the graph path uses.
        let keys: Vec<f64> = px.iter().map(|c| c.depth).collect();
        let order = insertion_sort_oracle(&keys);
        let ray: Vec<([f64; 3], f64)> = order
            .iter()
            .map(|&ci| {
                let cand = px[ci as usize];
                let g = cand.gaussian as usize;
                let dir = (set.means[g] - camera.position).normalize();
                let basis = local_sh_basis(dir, set.sh_degree);
                let coeffs = &set.sh_coeffs[g];
                let mut rgb = [0.0f64; 3];
                for (c, out) in rgb.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, &b) in basis.iter().enumerate() {
                        acc += b * coeffs[c * k + j];
                    }
                    *out = (acc + 0.5).max(0.0);
                }
                (rgb, cand.alpha)
            })
            .collect();
        let (rgb, _) = composite(&ray, floor);
        img.data[pi * 3..pi * 3 + 3].copy_from_slice(&rgb);
    }
    Ok(img)
}

fn render_hybrid(
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<Image> {
    let mesh = need(&assets.mesh, "mesh")?;
    let grid = need(&assets.hash_grid, "hash grid")?;
    let mlp = need(&assets.mlp, "mlp")?;
    let clip = space_convert(mesh, camera);
    let buf = rasterize_meshes(&clip, &mesh.triangles, camera.viewport);
    let half_band = sampling.band_fraction * (camera.far - camera.near);
    let segment = 2.0 * half_band / sampling.band_samples as f64;
    let floor = termination_floor(sampling);
    let mut img = Image::new(buf.width, buf.height, 3);
    for py in 0..buf.height {
        for px in 0..buf.width {
            let i = buf.at(px, py);
            let Some(ti) = buf.index[i] else { continue };
            let t_hit = fragment_view_depth(buf.bary[i], mesh.triangles[ti as usize], &clip);
            let (origin, dir) = pixel_ray(camera, (px, py));
            let mut ray = Vec::with_capacity(sampling.band_samples as usize);
            for j in 0..sampling.band_samples {
                let t = t_hit - half_band + (j as f64 + 0.5) * segment;
                let pos = origin + dir * t;
                let y = forward(route(mlp, &pos), &combined_grid_index(grid, pos));
                ray.push(([y[0], y[1], y[2]], alpha_from_density(y[3], segment)?));
            }
            let (rgb, _) = composite(&ray, floor);
            img.data[i * 3..i * 3 + 3].copy_from_slice(&rgb);
        }
    }
    Ok(img)
}

/// Real spherical harmonic basis, re-stated locally so the monolithic path
/// does not share the graph executor's copy.
fn local_sh_basis(dir: Vector3<f64>, degree: u32) -> Vec<f64> {
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
