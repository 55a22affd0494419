//! Space conversion (perspective projection into clip space) and the
//! depth-buffered triangle rasterizer.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::scene::{Camera, MeshSet};

/// A projected vertex. `clip.w` is the view-space depth (positive in front of
/// the camera); `degenerate` marks vertices coincident with the camera origin,
/// which are excluded from rasterization.
#[derive(Debug, Clone, Copy)]
pub struct ClipVertex {
    pub clip: Vector4<f64>,
    pub degenerate: bool,
}

impl ClipVertex {
    #[inline]
    pub fn ndc(&self) -> Vector3<f64> {
        self.clip.xyz() / self.clip.w
    }
}

/// Standard right-handed perspective matrix: the camera looks down −Z in view
/// space, near/far map to NDC z = −1/+1, and w_clip = view depth.
pub fn projection_matrix(camera: &Camera) -> Matrix4<f64> {
    let f = 1.0 / (camera.fov_y / 2.0).tan();
    let a = camera.aspect();
    let (n, fr) = (camera.near, camera.far);
    let mut p = Matrix4::zeros();
    p[(0, 0)] = f / a;
    p[(1, 1)] = f;
    p[(2, 2)] = (fr + n) / (n - fr);
    p[(2, 3)] = 2.0 * fr * n / (n - fr);
    p[(3, 2)] = -1.0;
    p
}

/// Project every mesh vertex into clip space.
pub fn space_convert(mesh: &MeshSet, camera: &Camera) -> Vec<ClipVertex> {
    let proj = projection_matrix(camera);
    let rot_t = camera.orientation.transpose();
    mesh.vertices
        .iter()
        .map(|v| {
            let rel = v - camera.position;
            let degenerate = rel.norm_squared() < 1e-24;
            let view = rot_t * rel;
            let clip = proj * Vector4::new(view.x, view.y, view.z, 1.0);
            ClipVertex { clip, degenerate }
        })
        .collect()
}

/// Per-pixel closest-hit record. `index` is `None` where nothing was drawn;
/// `depth` is the interpolated NDC depth of the winning fragment (+inf when
/// empty); `bary` are perspective-corrected barycentric coefficients.
#[derive(Debug, Clone)]
pub struct FragmentBuffer {
    pub width: u32,
    pub height: u32,
    pub index: Vec<Option<u32>>,
    pub depth: Vec<f64>,
    pub bary: Vec<[f64; 3]>,
}

impl FragmentBuffer {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        FragmentBuffer {
            width,
            height,
            index: vec![None; n],
            depth: vec![f64::INFINITY; n],
            bary: vec![[0.0; 3]; n],
        }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Number of covered pixels.
    pub fn coverage(&self) -> usize {
        self.index.iter().filter(|i| i.is_some()).count()
    }
}

#[inline]
fn screen_xyz(v: &ClipVertex, width: u32, height: u32) -> (f64, f64, f64) {
    let ndc = v.ndc();
    let sx = (ndc.x + 1.0) * 0.5 * width as f64;
    let sy = (1.0 - ndc.y) * 0.5 * height as f64;
    (sx, sy, ndc.z)
}

/// Rasterize triangles against a Z-buffer. Depth test is strict `<` with
/// triangles visited in index order, so on exact depth ties the smaller
/// triangle index wins. Triangles touching or crossing the camera plane are
/// culled rather than clipped; fragments outside NDC depth [−1, 1] are
/// discarded.
pub fn rasterize_meshes(
    vertices: &[ClipVertex],
    triangles: &[[u32; 3]],
    viewport: (u32, u32),
) -> FragmentBuffer {
    let (width, height) = viewport;
    let mut buf = FragmentBuffer::empty(width, height);
    if width == 0 || height == 0 {
        return buf;
    }

    for (ti, tri) in triangles.iter().enumerate() {
        let [a, b, c] = [
            &vertices[tri[0] as usize],
            &vertices[tri[1] as usize],
            &vertices[tri[2] as usize],
        ];
        if a.degenerate || b.degenerate || c.degenerate {
            continue;
        }
        if a.clip.w <= 1e-9 || b.clip.w <= 1e-9 || c.clip.w <= 1e-9 {
            continue;
        }
        let (ax, ay, az) = screen_xyz(a, width, height);
        let (bx, by, bz) = screen_xyz(b, width, height);
        let (cx, cy, cz) = screen_xyz(c, width, height);

        // Twice the signed screen area; either winding is shaded.
        let area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
        if area.abs() < 1e-12 {
            continue;
        }
        let inv_area = 1.0 / area;

        let min_x = ax.min(bx).min(cx);
        let max_x = ax.max(bx).max(cx);
        let min_y = ay.min(by).min(cy);
        let max_y = ay.max(by).max(cy);
        // Pixel centers live at (px + 0.5, py + 0.5).
        let x0 = ((min_x - 0.5).floor().max(0.0)) as u32;
        let x1 = ((max_x - 0.5).ceil().min(width as f64 - 1.0)).max(0.0) as u32;
        let y0 = ((min_y - 0.5).floor().max(0.0)) as u32;
        let y1 = ((max_y - 0.5).ceil().min(height as f64 - 1.0)).max(0.0) as u32;
        if min_x - 0.5 > width as f64 || min_y - 0.5 > height as f64 || max_x < 0.0 || max_y < 0.0 {
            continue;
        }

        const EDGE_EPS: f64 = 1e-12;
        for py in y0..=y1 {
            let pyc = py as f64 + 0.5;
            for px in x0..=x1 {
                let pxc = px as f64 + 0.5;
                let l0 = ((cx - bx) * (pyc - by) - (cy - by) * (pxc - bx)) * inv_area;
                let l1 = ((ax - cx) * (pyc - cy) - (ay - cy) * (pxc - cx)) * inv_area;
                let l2 = 1.0 - l0 - l1;
                if l0 < -EDGE_EPS || l1 < -EDGE_EPS || l2 < -EDGE_EPS {
                    continue;
                }
                // NDC z is affine in screen space, so plain barycentric
                // interpolation gives the depth-buffer value.
                let z = l0 * az + l1 * bz + l2 * cz;
                if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&z) {
                    continue;
                }
                let at = buf.at(px, py);
                if z < buf.depth[at] {
                    let q0 = l0 / a.clip.w;
                    let q1 = l1 / b.clip.w;
                    let q2 = l2 / c.clip.w;
                    let s = q0 + q1 + q2;
                    buf.index[at] = Some(ti as u32);
                    buf.depth[at] = z;
                    buf.bary[at] = [q0 / s, q1 / s, q2 / s];
                }
            }
        }
    }
    buf
}

/// Perspective-correct view-space depth of a fragment, reconstructed from its
/// stored barycentric coefficients and the triangle's clip vertices.
pub fn fragment_view_depth(bary: [f64; 3], tri: [u32; 3], vertices: &[ClipVertex]) -> f64 {
    bary[0] * vertices[tri[0] as usize].clip.w
        + bary[1] * vertices[tri[1] as usize].clip.w
        + bary[2] * vertices[tri[2] as usize].clip.w
}
