//! Randomized kernel-vs-oracle suites, parameterized by case count so the
//! same code backs quick unit runs and the full acceptance gate. Each case is
//! seeded deterministically: a passing count passes forever.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;

use nrsim_core::kernels::blend::{volume_blend, BlendSample};
use nrsim_core::kernels::gemm::gemm;
use nrsim_core::kernels::grid::{
    combined_grid_index, decomposed_grid_index, texture_index, FilterMode,
};
use nrsim_core::kernels::raster::{rasterize_meshes, space_convert};
use nrsim_core::kernels::ray::pixel_ray;
use nrsim_core::kernels::sort::patch_sort;
use nrsim_core::kernels::splat::splat_gaussians;
use nrsim_core::scene::{
    Activation, Camera, GaussianSet, HashGridRep, LowRankRep, MeshSet, PlaneAggregation, PlaneAxes,
    PlaneGrid, Texture,
};

use crate::case_rng;
use crate::oracles::{
    bilinear_oracle, brute_force_rasterize, hash_grid_oracle, insertion_sort_oracle,
    naive_gemm_oracle, plane_grid_oracle, projection_oracle, ray_direction_oracle,
    splat_alpha_oracle,
};

fn suite_camera(viewport: (u32, u32)) -> Camera {
    Camera {
        position: Vector3::zeros(),
        orientation: Matrix3::identity(),
        fov_y: std::f64::consts::FRAC_PI_3,
        near: 0.5,
        far: 10.0,
        viewport,
    }
}

/// Rasterizer vs. per-pixel exhaustive search: same winner (or a true depth
/// tie), same depth, same perspective-corrected barycentrics.
pub fn raster_suite(cases: u64) {
    for case in 0..cases {
        let mut rng = case_rng("raster", case);
        let camera = suite_camera((16, 16));
        let tris = rng.gen_range(1..=5u32);
        let mut mesh = MeshSet::default();
        for t in 0..tris {
            let cx = rng.gen_range(-1.5..1.5);
            let cy = rng.gen_range(-1.5..1.5);
            let cz = rng.gen_range(-6.0..-1.5);
            let r = rng.gen_range(0.2..1.2);
            for _ in 0..3 {
                mesh.vertices.push(Vector3::new(
                    cx + rng.gen_range(-r..r),
                    cy + rng.gen_range(-r..r),
                    cz + rng.gen_range(-r..r),
                ));
                mesh.uvs.push([0.0, 0.0]);
            }
            mesh.triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        let clip = space_convert(&mesh, &camera);
        let buf = rasterize_meshes(&clip, &mesh.triangles, camera.viewport);
        let want = brute_force_rasterize(&mesh.vertices, &mesh.triangles, &camera);

        for (i, w) in want.iter().enumerate() {
            match (buf.index[i], w) {
                (None, None) => {}
                (Some(gi), Some((wi, wz, wb))) => {
                    if gi != *wi {
                        // Distinct winners are only admissible on an exact
                        // depth tie between different triangles.
                        assert!(
                            (buf.depth[i] - wz).abs() < 1e-9,
                            "case {case} pixel {i}: kernel tri {gi} z {} vs oracle tri {wi} z {wz}",
                            buf.depth[i]
                        );
                        continue;
                    }
                    assert!(
                        (buf.depth[i] - wz).abs() < 1e-9,
                        "case {case} pixel {i}: depth {} vs {wz}",
                        buf.depth[i]
                    );
                    for j in 0..3 {
                        assert!(
                            (buf.bary[i][j] - wb[j]).abs() < 1e-7,
                            "case {case} pixel {i}: bary {:?} vs {wb:?}",
                            buf.bary[i]
                        );
                    }
                }
                (got, _) => panic!(
                    "case {case} pixel {i}: kernel {got:?} vs oracle {:?}",
                    w.map(|x| x.0)
                ),
            }
        }
    }
}

/// Merge sort vs. insertion sort. Both are stable, so the permutations are
/// equal even with duplicate keys.
pub fn sort_suite(cases: u64) {
    for case in 0..cases {
        let mut rng = case_rng("sort", case);
        let n = rng.gen_range(0..200usize);
        // Coarse keys force plenty of duplicates.
        let keys: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..32u32) as f64 * 0.25)
            .collect();
        let got = patch_sort(&keys);
        let want = insertion_sort_oracle(&keys);
        assert_eq!(got, want, "case {case} keys {keys:?}");
    }
}

/// GEMM vs. the triple loop: bit-identical by the shared accumulation order.
pub fn gemm_suite(cases: u64) {
    for case in 0..cases {
        let mut rng = case_rng("gemm", case);
        let (m, k, n) = (
            rng.gen_range(1..24usize),
            rng.gen_range(1..24usize),
            rng.gen_range(1..24usize),
        );
        let inputs: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let weights: Vec<f64> = (0..k * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let bias: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let act = [Activation::Linear, Activation::Relu, Activation::Sigmoid][case as usize % 3];
        let got = gemm(&inputs, m, k, &weights, n, &bias, act).expect("shapes are consistent");
        let want = naive_gemm_oracle(&inputs, m, k, &weights, n, &bias, act);
        assert_eq!(got, want, "case {case} m {m} k {k} n {n}");
    }
}

/// All three grid-indexing paths against scalar interpolation oracles.
pub fn grid_suite(cases: u64) {
    for case in 0..cases {
        let mut rng = case_rng("grid", case);

        // Texture path, including out-of-range uv to exercise clamping.
        let (tw, th, tc) = (
            rng.gen_range(2..16u32),
            rng.gen_range(2..16u32),
            rng.gen_range(1..5u32),
        );
        let tex = Texture {
            width: tw,
            height: th,
            channels: tc,
            data: (0..(tw * th * tc) as usize)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        };
        for _ in 0..8 {
            let uv = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
            let got = texture_index(&tex, uv, FilterMode::Bilinear);
            let want = bilinear_oracle(&tex, uv);
            for (g, w) in got.iter().zip(&want) {
                assert!(
                    (g - w).abs() < 1e-6,
                    "case {case} texture uv {uv:?}: {got:?} vs {want:?}"
                );
            }
        }

        // Hashed multi-level grid.
        let levels = rng.gen_range(1..4usize);
        let fw = rng.gen_range(1..4u32);
        let table_size = 1u32 << rng.gen_range(4..8u32);
        let mut res = rng.gen_range(3..6u32);
        let mut resolutions = Vec::new();
        for _ in 0..levels {
            resolutions.push(res);
            res = res * 2 - rng.gen_range(0..2u32);
        }
        let grid = HashGridRep {
            tables: (0..levels)
                .map(|_| {
                    (0..(table_size * fw) as usize)
                        .map(|_| rng.gen_range(-1.0..1.0))
                        .collect()
                })
                .collect(),
            resolutions,
            table_size,
            feature_width: fw,
            hash_constants: [0x9E3F_79B1, 0x85EB_CA77, 0xC2B2_AE3D],
        };
        for _ in 0..8 {
            let p = Vector3::new(
                rng.gen_range(-0.2..1.2),
                rng.gen_range(-0.2..1.2),
                rng.gen_range(-0.2..1.2),
            );
            let got = combined_grid_index(&grid, p);
            let want = hash_grid_oracle(&grid, p);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "case {case} hash grid at {p:?}");
            }
        }

        // Low-rank planes under both aggregations.
        let res = rng.gen_range(3..17u32);
        let fw = rng.gen_range(1..4u32) as usize;
        let lr = LowRankRep {
            planes: [PlaneAxes::Xy, PlaneAxes::Yz, PlaneAxes::Xz]
                .into_iter()
                .map(|axes| PlaneGrid {
                    axes,
                    resolution: res,
                    feature_width: fw as u32,
                    data: (0..res as usize * res as usize * fw)
                        .map(|_| rng.gen_range(-1.0..1.0))
                        .collect(),
                })
                .collect(),
            aggregation: if case % 2 == 0 {
                PlaneAggregation::Sum
            } else {
                PlaneAggregation::Product
            },
        };
        for _ in 0..8 {
            let p = Vector3::new(
                rng.gen_range(-0.2..1.2),
                rng.gen_range(-0.2..1.2),
                rng.gen_range(-0.2..1.2),
            );
            let got = decomposed_grid_index(&lr, p);
            let want = plane_grid_oracle(&lr, p);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "case {case} planes at {p:?}");
            }
        }
    }
}

/// Compositing conservation: accumulated sample weights plus the residual
/// transmittance must equal 1.
pub fn blend_suite(cases: u64) {
    for case in 0..cases {
        let mut rng = case_rng("blend", case);
        let n = rng.gen_range(0..64usize);
        let samples: Vec<BlendSample> = (0..n)
            .map(|_| BlendSample {
                color: [
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                ],
                alpha: rng.gen_range(0.0..1.0),
            })
            .collect();
        let (color, t) = volume_blend(&samples, false);

        let mut weight_total = 0.0;
        let mut running = 1.0;
        let mut want = [0.0f64; 3];
        for s in &samples {
            let w = s.alpha * running;
            weight_total += w;
            for (acc, &col) in want.iter_mut().zip(&s.color) {
                *acc += col * w;
            }
            running *= 1.0 - s.alpha;
        }
        assert!(
            (weight_total + t - 1.0).abs() < 1e-6,
            "case {case}: weights {weight_total} + residual {t} != 1"
        );
        for c in 0..3 {
            assert!(
                (color[c] - want[c]).abs() < 1e-6,
                "case {case}: color mismatch"
            );
        }
    }
}

/// Splatting vs. the finite-difference oracle: candidate alphas agree, and no
/// pixel outside the candidate set clears the threshold.
pub fn splat_suite(cases: u64) {
    let threshold = nrsim_core::ALPHA_THRESHOLD;
    for case in 0..cases {
        let mut rng = case_rng("splat", case);
        let camera = suite_camera((24, 24));
        let count = rng.gen_range(1..4usize);
        let mut set = GaussianSet {
            means: Vec::new(),
            covariances: Vec::new(),
            opacities: Vec::new(),
            sh_degree: 0,
            sh_coeffs: Vec::new(),
        };
        for _ in 0..count {
            set.means.push(Vector3::new(
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-6.0..-1.0),
            ));
            let axis = Unit::new_normalize(Vector3::new(
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
            let rot = Rotation3::from_axis_angle(&axis, rng.gen_range(0.0..std::f64::consts::TAU));
            let scales = Vector3::new(
                rng.gen_range(0.05..0.4f64),
                rng.gen_range(0.05..0.4),
                rng.gen_range(0.05..0.4),
            );
            let cov = rot.matrix()
                * Matrix3::from_diagonal(&scales.map(|s| s * s))
                * rot.matrix().transpose();
            set.covariances.push((cov + cov.transpose()) * 0.5);
            set.opacities.push(rng.gen_range(0.2..0.95));
            set.sh_coeffs.push(vec![0.5; 3]);
        }
        let list = splat_gaussians(&set, &camera, threshold);

        let (w, h) = camera.viewport;
        for py in 0..h {
            for px in 0..w {
                let cands = list.at(px, py);
                for g in 0..count {
                    let oracle = splat_alpha_oracle(
                        &set.means[g],
                        &set.covariances[g],
                        set.opacities[g],
                        &camera,
                        (px, py),
                    );
                    let got = cands.iter().find(|c| c.gaussian == g as u32);
                    match (got, oracle) {
                        (Some(c), Some(a)) => assert!(
                            (c.alpha - a).abs() < 1e-5,
                            "case {case} gaussian {g} pixel ({px},{py}): alpha {} vs {a}",
                            c.alpha
                        ),
                        (None, Some(a)) => assert!(
                            a <= threshold + 1e-5,
                            "case {case} gaussian {g} pixel ({px},{py}): missed alpha {a}"
                        ),
                        (None, None) => {}
                        (Some(c), None) => panic!(
                            "case {case} gaussian {g}: kernel kept alpha {} for a culled Gaussian",
                            c.alpha
                        ),
                    }
                }
            }
        }
    }
}

/// Pixel rays vs. inverse-projection unprojection, and the projection matrix
/// against its frustum-form oracle.
pub fn ray_suite(cases: u64) {
    for case in 0..cases {
        let mut rng = case_rng("ray", case);
        let camera = suite_camera((rng.gen_range(4..40u32), rng.gen_range(4..40u32)));

        let got = nrsim_core::kernels::raster::projection_matrix(&camera);
        let want = projection_oracle(&camera);
        assert!(
            (got - want).abs().max() < 1e-9,
            "case {case}: projection mismatch"
        );

        for _ in 0..4 {
            let px = rng.gen_range(0..camera.viewport.0);
            let py = rng.gen_range(0..camera.viewport.1);
            let (_, dir) = pixel_ray(&camera, (px, py));
            let unit = dir.normalize();
            let oracle = ray_direction_oracle(&camera, (px, py));
            assert!(
                (unit - oracle).norm() < 1e-9,
                "case {case} pixel ({px},{py}): {unit:?} vs {oracle:?}"
            );
        }
    }
}
