//! Kernel-level oracles. Each reimplements one operation from scratch in the
//! most direct way available, sharing no code with the production kernels.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3, Vector4};
use nrsim_core::scene::{Activation, Camera, HashGridRep, LowRankRep, PlaneAggregation, Texture};

/// Perspective matrix assembled from frustum extents (the glFrustum form),
/// rather than from field-of-view terms directly.
pub fn projection_oracle(camera: &Camera) -> Matrix4<f64> {
    let t = camera.near * (camera.fov_y / 2.0).tan();
    let r = t * camera.aspect();
    let (n, f) = (camera.near, camera.far);
    let mut m = Matrix4::zeros();
    m[(0, 0)] = n / r;
    m[(1, 1)] = n / t;
    m[(2, 2)] = -(f + n) / (f - n);
    m[(2, 3)] = -2.0 * f * n / (f - n);
    m[(3, 2)] = -1.0;
    m
}

/// World point -> clip-space 4-vector via the matrix oracle.
pub fn project_point(p: &Vector3<f64>, camera: &Camera) -> Vector4<f64> {
    let view = camera.orientation.transpose() * (p - camera.position);
    projection_oracle(camera) * Vector4::new(view.x, view.y, view.z, 1.0)
}

/// Screen-space position of a clip-space point, plus its NDC depth.
pub fn to_screen(clip: &Vector4<f64>, viewport: (u32, u32)) -> (f64, f64, f64) {
    let ndc = clip.xyz() / clip.w;
    (
        (ndc.x + 1.0) * 0.5 * viewport.0 as f64,
        (1.0 - ndc.y) * 0.5 * viewport.1 as f64,
        ndc.z,
    )
}

/// One pixel's closest hit from exhaustive pixel x triangle search.
pub type OracleFragment = Option<(u32, f64, [f64; 3])>;

/// Brute-force rasterizer: for every pixel, test every triangle and keep the
/// depth-argmin (ties to the smaller index). Barycentrics come from solving
/// the 2x2 edge system per pixel, and are perspective-corrected for output.
pub fn brute_force_rasterize(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    camera: &Camera,
) -> Vec<OracleFragment> {
    let (w, h) = camera.viewport;
    let clip: Vec<Vector4<f64>> = vertices.iter().map(|v| project_point(v, camera)).collect();
    let degenerate: Vec<bool> = vertices
        .iter()
        .map(|v| (v - camera.position).norm_squared() < 1e-24)
        .collect();
    let mut out: Vec<OracleFragment> = vec![None; (w * h) as usize];
    for py in 0..h {
        for px in 0..w {
            let pc = (px as f64 + 0.5, py as f64 + 0.5);
            let mut best: Option<(u32, f64, [f64; 3])> = None;
            for (ti, tri) in triangles.iter().enumerate() {
                if tri.iter().any(|&v| degenerate[v as usize]) {
                    continue;
                }
                let [ca, cb, cc] = [
                    &clip[tri[0] as usize],
                    &clip[tri[1] as usize],
                    &clip[tri[2] as usize],
                ];
                if ca.w <= 1e-9 || cb.w <= 1e-9 || cc.w <= 1e-9 {
                    continue;
                }
                let (ax, ay, az) = to_screen(ca, (w, h));
                let (bx, by, bz) = to_screen(cb, (w, h));
                let (cx, cy, cz) = to_screen(cc, (w, h));
                // Solve [b-a c-a][beta gamma]^T = p-a by Cramer's rule.
                let det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
                if det.abs() < 1e-12 {
                    continue;
                }
                let (ex, ey) = (pc.0 - ax, pc.1 - ay);
                let beta = (ex * (cy - ay) - ey * (cx - ax)) / det;
                let gamma = ((bx - ax) * ey - (by - ay) * ex) / det;
                let alpha = 1.0 - beta - gamma;
                if alpha < -1e-12 || beta < -1e-12 || gamma < -1e-12 {
                    continue;
                }
                let z = alpha * az + beta * bz + gamma * cz;
                if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&z) {
                    continue;
                }
                if best.is_none_or(|(_, bd, _)| z < bd) {
                    // Perspective-correct the barycentrics for attribute use.
                    let qa = alpha / ca.w;
                    let qb = beta / cb.w;
                    let qc = gamma / cc.w;
                    let s = qa + qb + qc;
                    best = Some((ti as u32, z, [qa / s, qb / s, qc / s]));
                }
            }
            out[(py * w + px) as usize] = best;
        }
    }
    out
}

/// Direct weight-sum bilinear texture lookup.
pub fn bilinear_oracle(tex: &Texture, uv: [f64; 2]) -> Vec<f64> {
    let (w, h, c) = (tex.width as f64, tex.height as f64, tex.channels as usize);
    let x = uv[0].clamp(0.0, 1.0) * w - 0.5;
    let y = uv[1].clamp(0.0, 1.0) * h - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let texel = |xi: f64, yi: f64| {
        let xi = (xi.max(0.0)).min(w - 1.0) as usize;
        let yi = (yi.max(0.0)).min(h - 1.0) as usize;
        &tex.data[(yi * tex.width as usize + xi) * c..][..c]
    };
    let mut out = vec![0.0; c];
    for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
        for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            let t = texel(x0 + dx, y0 + dy);
            for (o, &v) in out.iter_mut().zip(t) {
                *o += wx * wy * v;
            }
        }
    }
    out
}

/// Naive multi-level hash-grid lookup: explicit 8-corner loop per level.
pub fn hash_grid_oracle(grid: &HashGridRep, p: Vector3<f64>) -> Vec<f64> {
    let f = grid.feature_width as usize;
    let [c0, c1, c2] = grid.hash_constants;
    let mask = grid.table_size - 1;
    let mut out = Vec::new();
    for (li, &res) in grid.resolutions.iter().enumerate() {
        let scaled = [
            p.x.clamp(0.0, 1.0) * (res - 1) as f64,
            p.y.clamp(0.0, 1.0) * (res - 1) as f64,
            p.z.clamp(0.0, 1.0) * (res - 1) as f64,
        ];
        let base: Vec<u32> = scaled
            .iter()
            .map(|&v| (v.floor() as i64).clamp(0, res as i64 - 2) as u32)
            .collect();
        let frac: Vec<f64> = scaled
            .iter()
            .zip(&base)
            .map(|(&v, &b)| v - b as f64)
            .collect();
        let mut acc = vec![0.0; f];
        for dz in 0..2u32 {
            for dy in 0..2u32 {
                for dx in 0..2u32 {
                    let wx = if dx == 1 { frac[0] } else { 1.0 - frac[0] };
                    let wy = if dy == 1 { frac[1] } else { 1.0 - frac[1] };
                    let wz = if dz == 1 { frac[2] } else { 1.0 - frac[2] };
                    let slot = ((base[0] + dx).wrapping_mul(c0)
                        ^ (base[1] + dy).wrapping_mul(c1)
                        ^ (base[2] + dz).wrapping_mul(c2))
                        & mask;
                    let feat = &grid.tables[li][slot as usize * f..][..f];
                    for (a, &v) in acc.iter_mut().zip(feat) {
                        *a += wx * wy * wz * v;
                    }
                }
            }
        }
        out.extend(acc);
    }
    out
}

/// Naive per-plane bilinear + aggregation lookup.
pub fn plane_grid_oracle(grid: &LowRankRep, p: Vector3<f64>) -> Vec<f64> {
    let f = grid.planes[0].feature_width as usize;
    let mut out = match grid.aggregation {
        PlaneAggregation::Sum => vec![0.0; f],
        PlaneAggregation::Product => vec![1.0; f],
    };
    for plane in &grid.planes {
        let (a, b) = plane.axes.project(&p);
        let res = plane.resolution;
        let sa = a.clamp(0.0, 1.0) * (res - 1) as f64;
        let sb = b.clamp(0.0, 1.0) * (res - 1) as f64;
        let a0 = (sa.floor() as i64).clamp(0, res as i64 - 2) as usize;
        let b0 = (sb.floor() as i64).clamp(0, res as i64 - 2) as usize;
        let (fa, fb) = (sa - a0 as f64, sb - b0 as f64);
        let at = |ai: usize, bi: usize| &plane.data[(bi * res as usize + ai) * f..][..f];
        let mut part = vec![0.0; f];
        for (bi, wb) in [(b0, 1.0 - fb), (b0 + 1, fb)] {
            for (ai, wa) in [(a0, 1.0 - fa), (a0 + 1, fa)] {
                for (o, &v) in part.iter_mut().zip(at(ai, bi)) {
                    *o += wa * wb * v;
                }
            }
        }
        for (o, v) in out.iter_mut().zip(part) {
            match grid.aggregation {
                PlaneAggregation::Sum => *o += v,
                PlaneAggregation::Product => *o *= v,
            }
        }
    }
    out
}

/// Stable insertion sort returning the permutation; the independent reference
/// for the merge-sort kernel. Equal keys keep input order.
pub fn insertion_sort_oracle(keys: &[f64]) -> Vec<u32> {
    let mut perm: Vec<u32> = Vec::with_capacity(keys.len());
    for i in 0..keys.len() as u32 {
        // Insert after every element with key <= keys[i] (stability).
        let mut at = perm.len();
        while at > 0 && keys[perm[at - 1] as usize] > keys[i as usize] {
            at -= 1;
        }
        perm.insert(at, i);
    }
    perm
}

/// Triple-loop GEMM with K-ascending accumulation — bit-identical to the
/// production kernel by the shared order contract.
pub fn naive_gemm_oracle(
    inputs: &[f64],
    m: usize,
    k: usize,
    weights: &[f64],
    n: usize,
    bias: &[f64],
    activation: Activation,
) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for row in 0..m {
        for col in 0..n {
            let mut acc = 0.0;
            for kk in 0..k {
                acc += inputs[row * k + kk] * weights[kk * n + col];
            }
            out[row * n + col] = activation.apply(acc + bias[col]);
        }
    }
    out
}

/// Screen-space footprint of a Gaussian via numerical differentiation: the
/// Jacobian of the projection is estimated with central differences instead
/// of the analytic form the kernel uses.
pub fn splat_alpha_oracle(
    mean: &Vector3<f64>,
    cov: &Matrix3<f64>,
    opacity: f64,
    camera: &Camera,
    pixel: (u32, u32),
) -> Option<f64> {
    let view_depth = {
        let v = camera.orientation.transpose() * (mean - camera.position);
        -v.z
    };
    if view_depth < camera.near {
        return None;
    }
    let screen = |p: &Vector3<f64>| {
        let c = project_point(p, camera);
        let (sx, sy, _) = to_screen(&c, camera.viewport);
        (sx, sy)
    };
    let center = screen(mean);
    let eps = 1e-5;
    let mut jac = [[0.0f64; 3]; 2];
    for axis in 0..3 {
        let mut hi = *mean;
        let mut lo = *mean;
        hi[axis] += eps;
        lo[axis] -= eps;
        let (hx, hy) = screen(&hi);
        let (lx, ly) = screen(&lo);
        jac[0][axis] = (hx - lx) / (2.0 * eps);
        jac[1][axis] = (hy - ly) / (2.0 * eps);
    }
    // 2x2 screen covariance = J Sigma J^T, expanded by hand.
    let mut cov2 = [[0.0f64; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += jac[r][i] * cov[(i, j)] * jac[c][j];
                }
            }
            cov2[r][c] = acc;
        }
    }
    let mut m = Matrix2::new(cov2[0][0], cov2[0][1], cov2[1][0], cov2[1][1]);
    if m.determinant() <= 1e-12 {
        m[(0, 0)] += 1e-6;
        m[(1, 1)] += 1e-6;
    }
    let inv = m.try_inverse()?;
    let dx = pixel.0 as f64 + 0.5 - center.0;
    let dy = pixel.1 as f64 + 0.5 - center.1;
    let q = inv[(0, 0)] * dx * dx + 2.0 * inv[(0, 1)] * dx * dy + inv[(1, 1)] * dy * dy;
    Some(opacity * (-0.5 * q).exp())
}

/// Pixel-center ray direction by unprojecting two NDC depths through the
/// inverted projection matrix.
pub fn ray_direction_oracle(camera: &Camera, pixel: (u32, u32)) -> Vector3<f64> {
    let inv = projection_oracle(camera)
        .try_inverse()
        .expect("projection invertible");
    let (w, h) = camera.viewport;
    let ndc_x = 2.0 * (pixel.0 as f64 + 0.5) / w as f64 - 1.0;
    let ndc_y = 1.0 - 2.0 * (pixel.1 as f64 + 0.5) / h as f64;
    let unproject = |z: f64| {
        let p = inv * Vector4::new(ndc_x, ndc_y, z, 1.0);
        p.xyz() / p.w
    };
    let near = unproject(-1.0);
    let far = unproject(1.0);
    (camera.orientation * (far - near)).normalize()
}

/// Scalar front-to-back compositing used by the monolithic renderers.
/// `floor` < 0 disables early termination.
pub fn composite(samples: &[([f64; 3], f64)], floor: f64) -> ([f64; 3], f64) {
    let mut rgb = [0.0f64; 3];
    let mut t = 1.0f64;
    for (color, alpha) in samples {
        for c in 0..3 {
            rgb[c] += color[c] * alpha * t;
        }
        t *= 1.0 - alpha;
        if t < floor {
            break;
        }
    }
    (rgb, t)
}
