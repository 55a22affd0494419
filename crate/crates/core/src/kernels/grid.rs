//! Grid-indexing micro-operators: texture lookup, multi-level hashed grids,
//! and low-rank plane grids. All lookups clamp out-of-range query points.

use nalgebra::Vector3;

use crate::scene::{HashGridRep, LowRankRep, PlaneAggregation, Texture};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Bilinear,
    Nearest,
}

/// Hash a 3D integer vertex into a table of `table_size` slots (power of two).
#[inline]
pub fn hash_vertex(coords: [u32; 3], constants: [u32; 3], table_size: u32) -> u32 {
    (coords[0].wrapping_mul(constants[0])
        ^ coords[1].wrapping_mul(constants[1])
        ^ coords[2].wrapping_mul(constants[2]))
        & (table_size - 1)
}

/// Split a continuous grid coordinate over `res` vertices into a base vertex
/// and a fractional weight. The base is clamped so base+1 stays in range,
/// which makes queries at the far edge interpolate with weight 1.
#[inline]
fn cell_of(x: f64, res: u32) -> (u32, f64) {
    let coord = x.clamp(0.0, 1.0) * (res - 1) as f64;
    let base = (coord.floor() as i64).clamp(0, res as i64 - 2) as u32;
    (base, coord - base as f64)
}

/// Texture lookup with texel-center addressing and clamp-to-edge borders.
pub fn texture_index(tex: &Texture, uv: [f64; 2], mode: FilterMode) -> Vec<f64> {
    let (w, h, c) = (tex.width as i64, tex.height as i64, tex.channels as usize);
    let u = uv[0].clamp(0.0, 1.0);
    let v = uv[1].clamp(0.0, 1.0);
    let fetch = |x: i64, y: i64| {
        let x = x.clamp(0, w - 1) as usize;
        let y = y.clamp(0, h - 1) as usize;
        &tex.data[(y * w as usize + x) * c..][..c]
    };
    match mode {
        FilterMode::Nearest => {
            let x = ((u * w as f64).floor() as i64).clamp(0, w - 1);
            let y = ((v * h as f64).floor() as i64).clamp(0, h - 1);
            fetch(x, y).to_vec()
        }
        FilterMode::Bilinear => {
            let x = u * w as f64 - 0.5;
            let y = v * h as f64 - 0.5;
            let x0 = x.floor();
            let y0 = y.floor();
            let (fx, fy) = (x - x0, y - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let (t00, t10) = (fetch(x0, y0), fetch(x0 + 1, y0));
            let (t01, t11) = (fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1));
            (0..c)
                .map(|i| {
                    (1.0 - fx) * (1.0 - fy) * t00[i]
                        + fx * (1.0 - fy) * t10[i]
                        + (1.0 - fx) * fy * t01[i]
                        + fx * fy * t11[i]
                })
                .collect()
        }
    }
}

/// Multi-level hashed grid lookup: per level, hash the 8 cell corners into the
/// level's 1D table and interpolate trilinearly; levels concatenate to an
/// L·F-wide feature. Collisions are tolerated by construction.
pub fn combined_grid_index(grid: &HashGridRep, point: Vector3<f64>) -> Vec<f64> {
    let f = grid.feature_width as usize;
    let mut out = Vec::with_capacity(grid.levels() as usize * f);
    for (level, &res) in grid.resolutions.iter().enumerate() {
        let (bx, fx) = cell_of(point.x, res);
        let (by, fy) = cell_of(point.y, res);
        let (bz, fz) = cell_of(point.z, res);
        let table = &grid.tables[level];
        let mut acc = vec![0.0f64; f];
        for corner in 0..8u32 {
            let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let w = (if dx == 1 { fx } else { 1.0 - fx })
                * (if dy == 1 { fy } else { 1.0 - fy })
                * (if dz == 1 { fz } else { 1.0 - fz });
            let slot = hash_vertex(
                [bx + dx, by + dy, bz + dz],
                grid.hash_constants,
                grid.table_size,
            );
            let feat = &table[slot as usize * f..][..f];
            for (a, &v) in acc.iter_mut().zip(feat) {
                *a += w * v;
            }
        }
        out.extend_from_slice(&acc);
    }
    out
}

/// Bilinear lookup on one square plane grid; `(a, b)` are the projected
/// in-plane coordinates in [0,1]². Data layout is b-major: `[(b·res + a)·F]`.
fn plane_sample(data: &[f64], res: u32, f: usize, a: f64, b: f64) -> Vec<f64> {
    let (a0, fa) = cell_of(a, res);
    let (b0, fb) = cell_of(b, res);
    let fetch = |ai: u32, bi: u32| &data[(bi as usize * res as usize + ai as usize) * f..][..f];
    let (t00, t10) = (fetch(a0, b0), fetch(a0 + 1, b0));
    let (t01, t11) = (fetch(a0, b0 + 1), fetch(a0 + 1, b0 + 1));
    (0..f)
        .map(|i| {
            (1.0 - fa) * (1.0 - fb) * t00[i]
                + fa * (1.0 - fb) * t10[i]
                + (1.0 - fa) * fb * t01[i]
                + fa * fb * t11[i]
        })
        .collect()
}

/// Low-rank decomposed grid lookup: bilinear per plane, then elementwise
/// aggregation (sum or product) across planes.
pub fn decomposed_grid_index(grid: &LowRankRep, point: Vector3<f64>) -> Vec<f64> {
    let f = grid.planes[0].feature_width as usize;
    let mut out = match grid.aggregation {
        PlaneAggregation::Sum => vec![0.0f64; f],
        PlaneAggregation::Product => vec![1.0f64; f],
    };
    for plane in &grid.planes {
        let (a, b) = plane.axes.project(&point);
        let part = plane_sample(&plane.data, plane.resolution, f, a, b);
        for (o, v) in out.iter_mut().zip(part) {
            match grid.aggregation {
                PlaneAggregation::Sum => *o += v,
                PlaneAggregation::Product => *o *= v,
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{PlaneAxes, PlaneGrid};

    fn checker_texture() -> Texture {
        // 4x4, 2 channels; value = (x + 10*y, x*y).
        let (w, h, c) = (4u32, 4u32, 2u32);
        let mut data = Vec::new();
        for y in 0..h {
            for x in 0..w {
                data.push(x as f64 + 10.0 * y as f64);
                data.push((x * y) as f64);
            }
        }
        Texture {
            width: w,
            height: h,
            channels: c,
            data,
        }
    }

    #[test]
    fn bilinear_at_texel_center_is_exact() {
        let tex = checker_texture();
        // Texel (2,1) center: u=(2+0.5)/4, v=(1+0.5)/4.
        let got = texture_index(&tex, [2.5 / 4.0, 1.5 / 4.0], FilterMode::Bilinear);
        assert_eq!(got, vec![12.0, 2.0]);
    }

    #[test]
    fn bilinear_midway_between_texels_is_their_mean() {
        let tex = checker_texture();
        // Midpoint between texels (1,2) and (2,2): u = 2/4.
        let got = texture_index(&tex, [0.5, 2.5 / 4.0], FilterMode::Bilinear);
        assert_eq!(got[0], (21.0 + 22.0) / 2.0);
        assert_eq!(got[1], (2.0 + 4.0) / 2.0);
    }

    #[test]
    fn nearest_picks_containing_texel_and_clamps() {
        let tex = checker_texture();
        assert_eq!(
            texture_index(&tex, [0.3, 0.3], FilterMode::Nearest),
            vec![11.0, 1.0]
        );
        assert_eq!(
            texture_index(&tex, [1.0, 1.0], FilterMode::Nearest),
            vec![33.0, 9.0]
        );
        assert_eq!(
            texture_index(&tex, [-5.0, 2.0], FilterMode::Nearest),
            vec![30.0, 0.0]
        );
    }

    fn tiny_hash_grid() -> HashGridRep {
        let table_size = 1 << 6;
        let feature_width = 2;
        let resolutions = vec![3, 5];
        let tables = resolutions
            .iter()
            .enumerate()
            .map(|(l, _)| {
                (0..table_size * feature_width)
                    .map(|i| (i as f64 * 0.13 + l as f64).sin())
                    .collect()
            })
            .collect();
        HashGridRep {
            resolutions,
            table_size: table_size as u32,
            feature_width: feature_width as u32,
            tables,
            hash_constants: [0x9E3F_79B1, 0x85EB_CA77, 0xC2B2_AE3D],
        }
    }

    #[test]
    fn hash_grid_on_vertex_returns_table_entry() {
        let g = tiny_hash_grid();
        // Vertex (1,2,0) of level 0 (res 3): point = (0.5, 1.0, 0.0).
        let p = Vector3::new(0.5, 1.0, 0.0);
        let got = combined_grid_index(&g, p);
        let slot = hash_vertex([1, 2, 0], g.hash_constants, g.table_size) as usize;
        let want = &g.tables[0][slot * 2..][..2];
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn hash_grid_cell_center_is_mean_of_corners() {
        let g = tiny_hash_grid();
        // Center of level-0 cell (0,0,0): grid coord (0.5,0.5,0.5) over res 3
        // means point = 0.25 in each axis.
        let got = combined_grid_index(&g, Vector3::new(0.25, 0.25, 0.25));
        let mut mean = [0.0f64; 2];
        for corner in 0..8u32 {
            let v = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let slot = hash_vertex(v, g.hash_constants, g.table_size) as usize;
            mean[0] += g.tables[0][slot * 2] / 8.0;
            mean[1] += g.tables[0][slot * 2 + 1] / 8.0;
        }
        assert!((got[0] - mean[0]).abs() < 1e-12);
        assert!((got[1] - mean[1]).abs() < 1e-12);
    }

    #[test]
    fn hash_grid_is_continuous_across_cell_faces() {
        let g = tiny_hash_grid();
        // x = 0.5 is the shared face between level-0 cells; approach from both
        // sides.
        let eps = 1e-9;
        let a = combined_grid_index(&g, Vector3::new(0.5 - eps, 0.3, 0.7));
        let b = combined_grid_index(&g, Vector3::new(0.5 + eps, 0.3, 0.7));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    fn planes(values: [f64; 3]) -> LowRankRep {
        let mk = |axes, v: f64| PlaneGrid {
            axes,
            resolution: 4,
            feature_width: 2,
            data: vec![v; 4 * 4 * 2],
        };
        LowRankRep {
            planes: vec![
                mk(PlaneAxes::Xy, values[0]),
                mk(PlaneAxes::Yz, values[1]),
                mk(PlaneAxes::Xz, values[2]),
            ],
            aggregation: PlaneAggregation::Sum,
        }
    }

    #[test]
    fn zero_planes_sum_to_zero() {
        let g = planes([0.0, 0.0, 0.0]);
        assert_eq!(
            decomposed_grid_index(&g, Vector3::new(0.3, 0.4, 0.5)),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn constant_planes_sum_and_multiply_as_expected() {
        let mut g = planes([1.0, 2.0, 4.0]);
        let p = Vector3::new(0.3, 0.4, 0.5);
        assert_eq!(decomposed_grid_index(&g, p), vec![7.0, 7.0]);
        g.aggregation = PlaneAggregation::Product;
        assert_eq!(decomposed_grid_index(&g, p), vec![8.0, 8.0]);
    }

    #[test]
    fn single_nonzero_plane_vertex_query_is_exact() {
        let mut g = planes([0.0, 0.0, 0.0]);
        // Plane 0 is XY with resolution 4; set vertex (1,2).
        g.planes[0].data[(2 * 4 + 1) * 2] = 9.0;
        g.planes[0].data[(2 * 4 + 1) * 2 + 1] = -3.0;
        // XY-projection of the query must land on grid coord (1,2)/3.
        let p = Vector3::new(1.0 / 3.0, 2.0 / 3.0, 0.77);
        assert_eq!(decomposed_grid_index(&g, p), vec![9.0, -3.0]);
    }
}
