//! Ray casting: per-pixel view rays with uniform midpoint sampling between
//! the near and far planes.

use nalgebra::Vector3;

use crate::scene::Camera;

/// One sample point on a pixel ray. `t` is measured in view-space depth units
/// (the ray parameter is scaled so depth(t) = t), `direction` is the unit
/// world-space ray direction, and `segment` is the slab thickness used for
/// density-to-alpha conversion.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    pub t: f64,
    pub position: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub segment: f64,
}

/// World-space ray through a pixel center, scaled so that advancing the
/// parameter by 1 advances view depth by 1.
pub fn pixel_ray(camera: &Camera, pixel: (u32, u32)) -> (Vector3<f64>, Vector3<f64>) {
    let (w, h) = camera.viewport;
    let half = (camera.fov_y / 2.0).tan();
    let ndc_x = 2.0 * (pixel.0 as f64 + 0.5) / w as f64 - 1.0;
    let ndc_y = 1.0 - 2.0 * (pixel.1 as f64 + 0.5) / h as f64;
    let dir_view = Vector3::new(ndc_x * half * camera.aspect(), ndc_y * half, -1.0);
    (camera.position, camera.orientation * dir_view)
}

/// Cast the pixel-center ray and place `samples` uniform midpoint samples on
/// [near, far]: t_i = near + (i + ½)·(far − near)/S.
pub fn ray_cast(camera: &Camera, pixel: (u32, u32), samples: u32) -> Vec<RaySample> {
    let (origin, dir) = pixel_ray(camera, pixel);
    let unit = dir.normalize();
    let segment = (camera.far - camera.near) / samples as f64;
    (0..samples)
        .map(|i| {
            let t = camera.near + (i as f64 + 0.5) * segment;
            RaySample {
                t,
                position: origin + dir * t,
                direction: unit,
                segment,
            }
        })
        .collect()
}
