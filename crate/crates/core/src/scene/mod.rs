//! Scene assets: the union of representations the six pipelines draw from.
//!
//! All numeric fields are `f64` in memory but are generated and stored as
//! exact `f32` values, so a save/load round trip is lossless.

mod gen;
mod io;

pub use gen::{default_camera, generate_synthetic_scene, samples_per_ray};
pub use io::{load_scene, save_scene};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// The six pipeline families the compiler can lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    Mesh,
    Mlp,
    LowRank,
    HashGrid,
    Gaussian,
    HybridMeshHash,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 6] = [
        PipelineKind::Mesh,
        PipelineKind::Mlp,
        PipelineKind::LowRank,
        PipelineKind::HashGrid,
        PipelineKind::Gaussian,
        PipelineKind::HybridMeshHash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::Mesh => "mesh",
            PipelineKind::Mlp => "mlp",
            PipelineKind::LowRank => "low-rank",
            PipelineKind::HashGrid => "hash-grid",
            PipelineKind::Gaussian => "gaussian",
            PipelineKind::HybridMeshHash => "hybrid-mesh-hash",
        }
    }

    pub fn from_name(name: &str) -> Option<PipelineKind> {
        PipelineKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

/// Workload size classes for the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleClass {
    /// Unit-test sized: renders in milliseconds even under brute-force oracles.
    Tiny,
    Small,
    /// Desk-scale: the size the architecture sweeps run against.
    Medium,
}

impl ScaleClass {
    pub const ALL: [ScaleClass; 3] = [ScaleClass::Tiny, ScaleClass::Small, ScaleClass::Medium];

    pub fn name(self) -> &'static str {
        match self {
            ScaleClass::Tiny => "tiny",
            ScaleClass::Small => "small",
            ScaleClass::Medium => "medium",
        }
    }

    pub fn from_name(name: &str) -> Option<ScaleClass> {
        ScaleClass::ALL.iter().copied().find(|s| s.name() == name)
    }
}

/// Pinhole camera. `orientation` maps camera space to world space; the camera
/// looks down its local -Z axis, +Y is up, and `fov_y` is the vertical field
/// of view in radians.
#[derive(Debug, Clone)]
pub struct Camera {
    pub position: Vector3<f64>,
    pub orientation: Matrix3<f64>,
    pub fov_y: f64,
    pub near: f64,
    pub far: f64,
    /// (width, height) in pixels.
    pub viewport: (u32, u32),
}

impl Camera {
    pub fn aspect(&self) -> f64 {
        self.viewport.0 as f64 / self.viewport.1 as f64
    }
}

/// Triangle mesh with per-vertex texture coordinates.
#[derive(Debug, Clone, Default)]
pub struct MeshSet {
    pub vertices: Vec<Vector3<f64>>,
    /// Vertex index triples.
    pub triangles: Vec<[u32; 3]>,
    /// Per-vertex uv in [0,1]^2, parallel to `vertices`.
    pub uvs: Vec<[f64; 2]>,
}

/// Dense 2D feature map sampled by the texture path of combined grid indexing.
#[derive(Debug, Clone)]
pub struct Texture {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    /// Row-major `height x width x channels`.
    pub data: Vec<f64>,
}

/// Per-layer activation applied after the affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlpLayer {
    pub in_dim: u32,
    pub out_dim: u32,
    /// Row-major `in_dim x out_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// A small MLP, optionally replicated over a cubic grid of spatial tiles.
/// Samples are routed to the tile containing their position; `tile_grid = 1`
/// means a single shared network.
#[derive(Debug, Clone)]
pub struct MlpParams {
    pub tile_grid: u32,
    /// `tile_grid^3` networks with identical layer shapes.
    pub tiles: Vec<Vec<MlpLayer>>,
}

impl MlpParams {
    pub fn input_width(&self) -> u32 {
        self.tiles[0][0].in_dim
    }

    pub fn output_width(&self) -> u32 {
        self.tiles[0].last().map(|l| l.out_dim).unwrap_or(0)
    }

    /// Total parameter count across all tiles.
    pub fn parameter_count(&self) -> u64 {
        self.tiles
            .iter()
            .flat_map(|layers| layers.iter())
            .map(|l| l.weights.len() as u64 + l.bias.len() as u64)
            .sum()
    }

    /// Tile index for a point in the unit cube.
    pub fn tile_of(&self, p: &Vector3<f64>) -> usize {
        let g = self.tile_grid as f64;
        let cell = |v: f64| ((v * g).floor() as i64).clamp(0, self.tile_grid as i64 - 1) as usize;
        let g = self.tile_grid as usize;
        (cell(p.z) * g + cell(p.y)) * g + cell(p.x)
    }
}

/// Which world axes a low-rank plane spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneAxes {
    Xy,
    Yz,
    Xz,
}

impl PlaneAxes {
    pub fn name(self) -> &'static str {
        match self {
            PlaneAxes::Xy => "xy",
            PlaneAxes::Yz => "yz",
            PlaneAxes::Xz => "xz",
        }
    }

    /// Project a unit-cube point onto this plane's two coordinates.
    pub fn project(self, p: &Vector3<f64>) -> (f64, f64) {
        match self {
            PlaneAxes::Xy => (p.x, p.y),
            PlaneAxes::Yz => (p.y, p.z),
            PlaneAxes::Xz => (p.x, p.z),
        }
    }
}

/// How per-plane features are combined into one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneAggregation {
    Sum,
    Product,
}

#[derive(Debug, Clone)]
pub struct PlaneGrid {
    pub axes: PlaneAxes,
    /// Vertices per axis (the grid spans [0,1]^2 with `resolution - 1` cells).
    pub resolution: u32,
    pub feature_width: u32,
    /// Row-major `resolution x resolution x feature_width`.
    pub data: Vec<f64>,
}

/// Low-rank decomposition of a feature volume into axis-aligned planes.
#[derive(Debug, Clone)]
pub struct LowRankRep {
    pub planes: Vec<PlaneGrid>,
    pub aggregation: PlaneAggregation,
}

/// Multi-level feature grid backed by hashed tables.
#[derive(Debug, Clone)]
pub struct HashGridRep {
    /// Vertices per axis for each level; strictly increasing.
    pub resolutions: Vec<u32>,
    /// Entries per level table; a power of two.
    pub table_size: u32,
    pub feature_width: u32,
    /// One table per level, row-major `table_size x feature_width`.
    pub tables: Vec<Vec<f64>>,
    /// Multiplicative constants of the coordinate hash, one per axis.
    pub hash_constants: [u32; 3],
}

impl HashGridRep {
    pub fn levels(&self) -> u32 {
        self.resolutions.len() as u32
    }

    pub fn table_bytes_per_level(&self) -> u64 {
        // 16-bit feature entries on the device side.
        self.table_size as u64 * self.feature_width as u64 * 2
    }
}

/// Anisotropic 3D Gaussians with per-Gaussian SH color coefficients.
#[derive(Debug, Clone)]
pub struct GaussianSet {
    pub means: Vec<Vector3<f64>>,
    pub covariances: Vec<Matrix3<f64>>,
    /// Opacity in (0, 1].
    pub opacities: Vec<f64>,
    pub sh_degree: u32,
    /// Per Gaussian: `3 x (sh_degree+1)^2` coefficients, row-major by channel.
    pub sh_coeffs: Vec<Vec<f64>>,
}

impl GaussianSet {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn sh_basis_width(&self) -> u32 {
        (self.sh_degree + 1) * (self.sh_degree + 1)
    }
}

/// Union of scene representations. A pipeline uses the subset it needs;
/// absent assets are an error at compile time, not here.
#[derive(Debug, Clone)]
pub struct SceneAssets {
    pub kind: PipelineKind,
    pub scale: ScaleClass,
    pub seed: u64,
    pub mesh: Option<MeshSet>,
    pub texture: Option<Texture>,
    pub mlp: Option<MlpParams>,
    pub low_rank: Option<LowRankRep>,
    pub hash_grid: Option<HashGridRep>,
    pub gaussians: Option<GaussianSet>,
}

/// One validation finding: where and what.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Violation {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Check every structural invariant of the present representations. Returns
/// an empty list iff the scene is well-formed; never fails hard.
pub fn validate_scene(assets: &SceneAssets) -> Vec<Violation> {
    let mut out = Vec::new();

    if let Some(mesh) = &assets.mesh {
        let nv = mesh.vertices.len();
        if mesh.uvs.len() != nv {
            out.push(Violation::new(
                "mesh.uvs",
                format!("{} uv entries for {} vertices", mesh.uvs.len(), nv),
            ));
        }
        for (i, tri) in mesh.triangles.iter().enumerate() {
            for &v in tri {
                if v as usize >= nv {
                    out.push(Violation::new(
                        format!("mesh.triangles[{i}]"),
                        format!("vertex index {v} out of range (vertex count {nv})"),
                    ));
                }
            }
        }
        for (i, uv) in mesh.uvs.iter().enumerate() {
            if !(0.0..=1.0).contains(&uv[0]) || !(0.0..=1.0).contains(&uv[1]) {
                out.push(Violation::new(
                    format!("mesh.uvs[{i}]"),
                    format!("uv ({}, {}) outside [0,1]^2", uv[0], uv[1]),
                ));
            }
        }
    }

    if let Some(tex) = &assets.texture {
        let want = tex.width as usize * tex.height as usize * tex.channels as usize;
        if tex.data.len() != want {
            out.push(Violation::new(
                "texture.data",
                format!(
                    "{} values, expected {}x{}x{} = {}",
                    tex.data.len(),
                    tex.height,
                    tex.width,
                    tex.channels,
                    want
                ),
            ));
        }
        if tex.width == 0 || tex.height == 0 || tex.channels == 0 {
            out.push(Violation::new("texture", "zero-sized dimension"));
        }
    }

    if let Some(mlp) = &assets.mlp {
        validate_mlp(mlp, &mut out);
    }

    if let Some(lr) = &assets.low_rank {
        if lr.planes.is_empty() {
            out.push(Violation::new("low_rank.planes", "no planes"));
        }
        let width = lr.planes.first().map(|p| p.feature_width).unwrap_or(0);
        for (i, plane) in lr.planes.iter().enumerate() {
            if plane.resolution < 2 {
                out.push(Violation::new(
                    format!("low_rank.planes[{i}].resolution"),
                    "needs at least 2 vertices per axis",
                ));
            }
            if plane.feature_width != width {
                out.push(Violation::new(
                    format!("low_rank.planes[{i}].feature_width"),
                    format!(
                        "width {} differs from plane 0 width {}",
                        plane.feature_width, width
                    ),
                ));
            }
            let want = plane.resolution as usize
                * plane.resolution as usize
                * plane.feature_width as usize;
            if plane.data.len() != want {
                out.push(Violation::new(
                    format!("low_rank.planes[{i}].data"),
                    format!("{} values, expected {}", plane.data.len(), want),
                ));
            }
        }
    }

    if let Some(grid) = &assets.hash_grid {
        if !grid.table_size.is_power_of_two() {
            out.push(Violation::new(
                "hash_grid.table_size",
                format!("{} is not a power of two", grid.table_size),
            ));
        }
        for w in grid.resolutions.windows(2) {
            if w[1] <= w[0] {
                out.push(Violation::new(
                    "hash_grid.resolutions",
                    format!("not strictly increasing at {} -> {}", w[0], w[1]),
                ));
                break;
            }
        }
        if grid.resolutions.iter().any(|&r| r < 2) {
            out.push(Violation::new(
                "hash_grid.resolutions",
                "level resolution below 2",
            ));
        }
        if grid.tables.len() != grid.resolutions.len() {
            out.push(Violation::new(
                "hash_grid.tables",
                format!(
                    "{} tables for {} levels",
                    grid.tables.len(),
                    grid.resolutions.len()
                ),
            ));
        }
        let want = grid.table_size as usize * grid.feature_width as usize;
        for (l, t) in grid.tables.iter().enumerate() {
            if t.len() != want {
                out.push(Violation::new(
                    format!("hash_grid.tables[{l}]"),
                    format!("{} values, expected {}", t.len(), want),
                ));
            }
        }
        if grid.hash_constants.iter().any(|&c| c % 2 == 0) {
            out.push(Violation::new(
                "hash_grid.hash_constants",
                "constants must be odd",
            ));
        }
    }

    if let Some(g) = &assets.gaussians {
        let n = g.means.len();
        if g.covariances.len() != n || g.opacities.len() != n || g.sh_coeffs.len() != n {
            out.push(Violation::new(
                "gaussians",
                format!(
                    "parallel arrays disagree: {} means, {} covariances, {} opacities, {} sh sets",
                    n,
                    g.covariances.len(),
                    g.opacities.len(),
                    g.sh_coeffs.len()
                ),
            ));
        }
        let k = g.sh_basis_width() as usize;
        for (i, c) in g.sh_coeffs.iter().enumerate() {
            if c.len() != 3 * k {
                out.push(Violation::new(
                    format!("gaussians.sh_coeffs[{i}]"),
                    format!("{} coefficients, expected 3x{k}", c.len()),
                ));
            }
        }
        for (i, &o) in g.opacities.iter().enumerate() {
            if !(o > 0.0 && o <= 1.0) {
                out.push(Violation::new(
                    format!("gaussians.opacities[{i}]"),
                    format!("opacity {o} outside (0, 1]"),
                ));
            }
        }
        for (i, cov) in g.covariances.iter().enumerate() {
            validate_covariance(i, cov, &mut out);
        }
    }

    out
}

fn validate_mlp(mlp: &MlpParams, out: &mut Vec<Violation>) {
    let tiles = mlp.tile_grid as usize;
    if mlp.tiles.len() != tiles * tiles * tiles {
        out.push(Violation::new(
            "mlp.tiles",
            format!(
                "{} tiles for grid {0}^3 = {1}",
                mlp.tiles.len(),
                tiles * tiles * tiles
            ),
        ));
    }
    for (t, layers) in mlp.tiles.iter().enumerate() {
        if layers.is_empty() {
            out.push(Violation::new(format!("mlp.tiles[{t}]"), "no layers"));
            continue;
        }
        for (i, layer) in layers.iter().enumerate() {
            let want = layer.in_dim as usize * layer.out_dim as usize;
            if layer.weights.len() != want {
                out.push(Violation::new(
                    format!("mlp.tiles[{t}].layers[{i}].weights"),
                    format!(
                        "{} values, expected {}x{}",
                        layer.weights.len(),
                        layer.in_dim,
                        layer.out_dim
                    ),
                ));
            }
            if layer.bias.len() != layer.out_dim as usize {
                out.push(Violation::new(
                    format!("mlp.tiles[{t}].layers[{i}].bias"),
                    format!("{} values, expected {}", layer.bias.len(), layer.out_dim),
                ));
            }
            if i > 0 && layers[i - 1].out_dim != layer.in_dim {
                out.push(Violation::new(
                    format!("mlp.tiles[{t}].layers[{i}]"),
                    format!(
                        "input width {} does not chain from previous output {}",
                        layer.in_dim,
                        layers[i - 1].out_dim
                    ),
                ));
            }
        }
        if t > 0 {
            let same_shape = layers.len() == mlp.tiles[0].len()
                && layers
                    .iter()
                    .zip(&mlp.tiles[0])
                    .all(|(a, b)| a.in_dim == b.in_dim && a.out_dim == b.out_dim);
            if !same_shape {
                out.push(Violation::new(
                    format!("mlp.tiles[{t}]"),
                    "layer shapes differ from tile 0",
                ));
            }
        }
    }
}

fn validate_covariance(i: usize, cov: &Matrix3<f64>, out: &mut Vec<Violation>) {
    let sym_err = (cov - cov.transpose()).abs().max();
    if sym_err > 1e-9 {
        out.push(Violation::new(
            format!("gaussians.covariances[{i}]"),
            format!("not symmetric (max asymmetry {sym_err:.3e})"),
        ));
        return;
    }
    // Positive semi-definiteness via the symmetric eigendecomposition.
    let eig = nalgebra::SymmetricEigen::new(*cov);
    if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
        out.push(Violation::new(
            format!("gaussians.covariances[{i}]"),
            format!("negative eigenvalue {:.3e}", eig.eigenvalues.min()),
        ));
    }
}

/// Camera invariants, kept separate from the asset checks because cameras are
/// built by the caller rather than stored with the scene.
pub fn validate_camera(cam: &Camera) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(cam.near > 0.0 && cam.far > cam.near) {
        out.push(Violation::new(
            "camera",
            format!("need 0 < near < far, got near {} far {}", cam.near, cam.far),
        ));
    }
    if !(cam.fov_y > 0.0 && cam.fov_y < std::f64::consts::PI) {
        out.push(Violation::new(
            "camera.fov_y",
            format!("{} not in (0, pi)", cam.fov_y),
        ));
    }
    if cam.viewport.0 == 0 || cam.viewport.1 == 0 {
        out.push(Violation::new("camera.viewport", "zero-sized viewport"));
    }
    let r = cam.orientation;
    let ortho_err = (r.transpose() * r - Matrix3::identity()).abs().max();
    if ortho_err > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
        out.push(Violation::new(
            "camera.orientation",
            format!(
                "not a rotation (orthogonality error {ortho_err:.3e}, det {})",
                r.determinant()
            ),
        ));
    }
    out
}
