//! Gaussian splatting: project 3D Gaussians to screen space with the affine
//! (Jacobian) approximation, evaluate per-pixel alphas, and keep candidates
//! above the threshold.

use nalgebra::{Matrix2, Matrix2x3, Vector3};

use crate::scene::{Camera, GaussianSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatCandidate {
    pub gaussian: u32,
    /// Opacity × Gaussian falloff at the pixel center; always > threshold.
    pub alpha: f64,
    /// View-space depth of the Gaussian mean, the sorting key.
    pub depth: f64,
}

/// Per-pixel unsorted candidate lists plus diagnostics counters.
#[derive(Debug, Clone)]
pub struct SplatCandidateList {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Vec<SplatCandidate>>,
    /// Projected covariances that needed diagonal regularization.
    pub regularized: u64,
    /// Gaussians culled for sitting behind the near plane.
    pub culled: u64,
}

impl SplatCandidateList {
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> &[SplatCandidate] {
        &self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn candidate_count(&self) -> usize {
        self.pixels.iter().map(|p| p.len()).sum()
    }
}

/// Screen-space footprint of one projected Gaussian: center, 2x2 covariance,
/// and mean depth. Shared between the functional kernel and workload
/// estimation.
pub struct ProjectedGaussian {
    pub center: (f64, f64),
    pub cov: Matrix2<f64>,
    pub depth: f64,
    pub regularized: bool,
}

/// Project one Gaussian; `None` if its mean is on or behind the near plane.
pub fn project_gaussian(
    mean: &Vector3<f64>,
    cov: &nalgebra::Matrix3<f64>,
    camera: &Camera,
) -> Option<ProjectedGaussian> {
    let rot_t = camera.orientation.transpose();
    let view = rot_t * (mean - camera.position);
    let depth = -view.z;
    if depth < camera.near {
        return None;
    }
    let (w, h) = (camera.viewport.0 as f64, camera.viewport.1 as f64);
    // Square pixels: the vertical field of view plus the W/H aspect make the
    // horizontal and vertical focal lengths equal in pixel units.
    let focal = h / (2.0 * (camera.fov_y / 2.0).tan());
    let cx = w / 2.0 + focal * view.x / depth;
    let cy = h / 2.0 - focal * view.y / depth;

    let cov_view = rot_t * cov * camera.orientation;
    let d2 = depth * depth;
    let jac = Matrix2x3::new(
        focal / depth,
        0.0,
        focal * view.x / d2,
        0.0,
        -focal / depth,
        -focal * view.y / d2,
    );
    let mut cov2 = jac * cov_view * jac.transpose();
    let mut regularized = false;
    if cov2.determinant() <= 1e-12 {
        cov2[(0, 0)] += 1e-6;
        cov2[(1, 1)] += 1e-6;
        regularized = true;
    }
    Some(ProjectedGaussian {
        center: (cx, cy),
        cov: cov2,
        depth,
        regularized,
    })
}

/// Conservative pixel radius of the footprint where alpha can exceed
/// `threshold`: the threshold ellipse's major semi-axis.
pub fn footprint_radius(pg: &ProjectedGaussian, opacity: f64, threshold: f64) -> f64 {
    if opacity <= threshold {
        return 0.0;
    }
    let q_max = 2.0 * (opacity / threshold).ln();
    let tr_half = (pg.cov[(0, 0)] + pg.cov[(1, 1)]) / 2.0;
    let det = pg.cov.determinant();
    let lambda_max = tr_half + (tr_half * tr_half - det).max(0.0).sqrt();
    (q_max * lambda_max).sqrt()
}

/// Evaluate every Gaussian against every pixel inside its threshold-ellipse
/// bounding box; candidates with alpha ≤ threshold are bypassed.
pub fn splat_gaussians(set: &GaussianSet, camera: &Camera, threshold: f64) -> SplatCandidateList {
    let (width, height) = camera.viewport;
    let mut list = SplatCandidateList {
        width,
        height,
        pixels: vec![Vec::new(); width as usize * height as usize],
        regularized: 0,
        culled: 0,
    };
    for gi in 0..set.len() {
        let Some(pg) = project_gaussian(&set.means[gi], &set.covariances[gi], camera) else {
            list.culled += 1;
            continue;
        };
        if pg.regularized {
            list.regularized += 1;
        }
        let opacity = set.opacities[gi];
        let radius = footprint_radius(&pg, opacity, threshold);
        if radius == 0.0 {
            continue;
        }
        let inv = pg
            .cov
            .try_inverse()
            .expect("regularized 2x2 covariance is invertible");
        let (cx, cy) = pg.center;
        let x0 = ((cx - radius - 0.5).floor().max(0.0)) as i64;
        let x1 = ((cx + radius - 0.5).ceil()).min(width as f64 - 1.0) as i64;
        let y0 = ((cy - radius - 0.5).floor().max(0.0)) as i64;
        let y1 = ((cy + radius - 0.5).ceil()).min(height as f64 - 1.0) as i64;
        if cx + radius < 0.0 || cy + radius < 0.0 || x0 > x1 || y0 > y1 {
            continue;
        }
        for py in y0..=y1 {
            for px in x0..=x1 {
                let dx = px as f64 + 0.5 - cx;
                let dy = py as f64 + 0.5 - cy;
                let q = inv[(0, 0)] * dx * dx + 2.0 * inv[(0, 1)] * dx * dy + inv[(1, 1)] * dy * dy;
                let alpha = opacity * (-0.5 * q).exp();
                if alpha > threshold {
                    list.pixels[py as usize * width as usize + px as usize].push(SplatCandidate {
                        gaussian: gi as u32,
                        alpha,
                        depth: pg.depth,
                    });
                }
            }
        }
    }
    list
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{default_camera, PipelineKind, ScaleClass};
    use crate::ALPHA_THRESHOLD;
    use nalgebra::Matrix3;

    fn one_gaussian(mean: Vector3<f64>, cov: Matrix3<f64>, opacity: f64) -> GaussianSet {
        GaussianSet {
            means: vec![mean],
            covariances: vec![cov],
            opacities: vec![opacity],
            sh_degree: 0,
            sh_coeffs: vec![vec![0.5, 0.5, 0.5]],
        }
    }

    #[test]
    fn empty_set_yields_empty_lists() {
        let cam = default_camera(PipelineKind::Gaussian, ScaleClass::Tiny);
        let set = GaussianSet {
            means: vec![],
            covariances: vec![],
            opacities: vec![],
            sh_degree: 0,
            sh_coeffs: vec![],
        };
        let list = splat_gaussians(&set, &cam, ALPHA_THRESHOLD);
        assert_eq!(list.candidate_count(), 0);
    }

    #[test]
    fn opacity_below_threshold_is_bypassed_everywhere() {
        let cam = default_camera(PipelineKind::Gaussian, ScaleClass::Tiny);
        let set = one_gaussian(
            Vector3::new(0.0, 0.0, -4.0),
            Matrix3::identity() * 0.04,
            0.001,
        );
        let list = splat_gaussians(&set, &cam, ALPHA_THRESHOLD);
        assert_eq!(list.candidate_count(), 0);
    }

    #[test]
    fn centered_isotropic_gaussian_reaches_its_opacity() {
        // Even-sized viewport: the optical axis hits the corner between the
        // middle pixels, so aim the Gaussian through a pixel center instead.
        let cam = default_camera(PipelineKind::Gaussian, ScaleClass::Tiny);
        let (w, h) = cam.viewport;
        let focal = h as f64 / (2.0 * (cam.fov_y / 2.0).tan());
        let depth = 4.0;
        // Pick pixel (w/2, h/2); its center is at +0.5 pixels from the corner.
        let px = (w / 2, h / 2);
        let x_view = (px.0 as f64 + 0.5 - w as f64 / 2.0) * depth / focal;
        let y_view = -(px.1 as f64 + 0.5 - h as f64 / 2.0) * depth / focal;
        let set = one_gaussian(
            Vector3::new(x_view, y_view, -depth),
            Matrix3::identity() * 0.04,
            0.8,
        );
        let list = splat_gaussians(&set, &cam, ALPHA_THRESHOLD);
        let at = list.at(px.0, px.1);
        assert_eq!(at.len(), 1);
        assert!((at[0].alpha - 0.8).abs() < 1e-5, "alpha {}", at[0].alpha);
        assert!((at[0].depth - depth).abs() < 1e-12);
    }

    #[test]
    fn all_candidates_exceed_threshold() {
        let cam = default_camera(PipelineKind::Gaussian, ScaleClass::Tiny);
        let set = one_gaussian(
            Vector3::new(0.3, -0.2, -3.0),
            Matrix3::identity() * 0.1,
            0.9,
        );
        let list = splat_gaussians(&set, &cam, ALPHA_THRESHOLD);
        assert!(list.candidate_count() > 0);
        for px in &list.pixels {
            for c in px {
                assert!(c.alpha > ALPHA_THRESHOLD);
            }
        }
    }

    #[test]
    fn behind_camera_gaussian_is_culled() {
        let cam = default_camera(PipelineKind::Gaussian, ScaleClass::Tiny);
        let set = one_gaussian(Vector3::new(0.0, 0.0, 1.0), Matrix3::identity() * 0.04, 0.9);
        let list = splat_gaussians(&set, &cam, ALPHA_THRESHOLD);
        assert_eq!(list.candidate_count(), 0);
        assert_eq!(list.culled, 1);
    }

    #[test]
    fn degenerate_covariance_is_regularized_and_counted() {
        let cam = default_camera(PipelineKind::Gaussian, ScaleClass::Tiny);
        // Rank-1 covariance: a needle along x only.
        let mut cov = Matrix3::zeros();
        cov[(0, 0)] = 0.04;
        let set = one_gaussian(Vector3::new(0.0, 0.0, -4.0), cov, 0.9);
        let list = splat_gaussians(&set, &cam, ALPHA_THRESHOLD);
        assert_eq!(list.regularized, 1);
    }
}
