//! The micro-operator intermediate representation.
//!
//! Every rendering pipeline lowers to an ordered graph of nodes drawn from
//! five kinds. Each kind decomposes into an indexing task (which items to
//! gather, over what dimensionality, by what rule) and a reduction task
//! (combining over a memory-access pattern); the legal combinations are
//! embedded as a table and enforced by [`validate_graph`].

mod compile;
mod exec;
mod text;

pub use compile::{compile_pipeline, SamplingConfig};
pub use exec::execute_graph;
pub use text::graph_to_text;

use serde::{Deserialize, Serialize};

use crate::scene::{PipelineKind, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MicroOpKind {
    GeometricProcessing,
    CombinedGridIndexing,
    DecomposedGridIndexing,
    Sorting,
    Gemm,
}

impl MicroOpKind {
    pub const ALL: [MicroOpKind; 5] = [
        MicroOpKind::GeometricProcessing,
        MicroOpKind::CombinedGridIndexing,
        MicroOpKind::DecomposedGridIndexing,
        MicroOpKind::Sorting,
        MicroOpKind::Gemm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MicroOpKind::GeometricProcessing => "geometric-processing",
            MicroOpKind::CombinedGridIndexing => "combined-grid-indexing",
            MicroOpKind::DecomposedGridIndexing => "decomposed-grid-indexing",
            MicroOpKind::Sorting => "sorting",
            MicroOpKind::Gemm => "gemm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexItem {
    MeshGaussian,
    Features,
    SortingKeys,
    Scalars,
}

impl IndexItem {
    pub fn name(self) -> &'static str {
        match self {
            IndexItem::MeshGaussian => "mesh/gaussian",
            IndexItem::Features => "features",
            IndexItem::SortingKeys => "sorting-keys",
            IndexItem::Scalars => "scalars",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexDim {
    D1,
    D2,
    D3,
}

impl IndexDim {
    pub fn name(self) -> &'static str {
        match self {
            IndexDim::D1 => "1d",
            IndexDim::D2 => "2d",
            IndexDim::D3 => "3d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexFunction {
    AutomaticCounter,
    RandomHash,
    LinearIndexing,
}

impl IndexFunction {
    pub fn name(self) -> &'static str {
        match self {
            IndexFunction::AutomaticCounter => "automatic-counter",
            IndexFunction::RandomHash => "random-hash",
            IndexFunction::LinearIndexing => "linear-indexing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessPattern {
    Continuous,
    Discrete,
}

impl AccessPattern {
    pub fn name(self) -> &'static str {
        match self {
            AccessPattern::Continuous => "continuous",
            AccessPattern::Discrete => "discrete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexingTask {
    pub item: IndexItem,
    pub dimension: IndexDim,
    pub function: IndexFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTask {
    pub pattern: AccessPattern,
}

/// One row family of the embedded task table: the values each column may take
/// for a given micro-operator kind.
pub struct TaskTemplate {
    pub items: &'static [IndexItem],
    pub dimensions: &'static [IndexDim],
    pub functions: &'static [IndexFunction],
    pub patterns: &'static [AccessPattern],
}

/// The task table: legal (item, dimension, function, access-pattern)
/// combinations per micro-operator kind.
pub fn task_template(kind: MicroOpKind) -> TaskTemplate {
    use AccessPattern::*;
    use IndexDim::*;
    use IndexFunction::*;
    use IndexItem::*;
    match kind {
        MicroOpKind::GeometricProcessing => TaskTemplate {
            items: &[MeshGaussian],
            dimensions: &[D1],
            functions: &[AutomaticCounter],
            patterns: &[Continuous],
        },
        MicroOpKind::CombinedGridIndexing => TaskTemplate {
            items: &[Features],
            dimensions: &[D1, D2, D3],
            functions: &[RandomHash, LinearIndexing],
            patterns: &[Discrete],
        },
        MicroOpKind::DecomposedGridIndexing => TaskTemplate {
            items: &[Features],
            dimensions: &[D2, D3],
            functions: &[LinearIndexing],
            patterns: &[Discrete],
        },
        MicroOpKind::Sorting => TaskTemplate {
            items: &[SortingKeys],
            dimensions: &[D1],
            functions: &[AutomaticCounter],
            patterns: &[Continuous],
        },
        MicroOpKind::Gemm => TaskTemplate {
            items: &[Scalars],
            dimensions: &[D1, D2],
            functions: &[AutomaticCounter],
            patterns: &[Continuous, Discrete],
        },
    }
}

/// Which pipeline step a node implements. Several steps share the GEMM kind;
/// the role keeps cost modeling and execution honest about what each node is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Rasterization,
    TextureLookup,
    RayCast,
    GridLookup,
    MlpInference,
    Splatting,
    DepthSort,
    ShColor,
    Blending,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Rasterization => "rasterization",
            Role::TextureLookup => "texture-lookup",
            Role::RayCast => "ray-cast",
            Role::GridLookup => "grid-lookup",
            Role::MlpInference => "mlp-inference",
            Role::Splatting => "splatting",
            Role::DepthSort => "depth-sort",
            Role::ShColor => "sh-color",
            Role::Blending => "blending",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryMode {
    Rasterize,
    Splat,
}

/// Kind-specific workload statistics the simulator consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WorkDetail {
    Geometric {
        vertices: u64,
        primitives: u64,
        /// Σ over primitives of clipped screen bounding-box pixels —
        /// deterministic compile-time coverage estimate.
        coverage_estimate: u64,
        mode: GeometryMode,
    },
    Grid {
        queries: u64,
        levels: u32,
        feature_width: u32,
        /// Interpolation footprint: 8 corners for 3D cells, 4 for 2D.
        corners: u32,
        table_bytes_per_level: u64,
        /// Index arithmetic per corner (hash multiplies/xors or linear
        /// address arithmetic), INT16 ALU issues.
        int_ops_per_corner: u32,
    },
    Sort {
        patches: u64,
        elements: u64,
    },
    Gemm {
        batch: u64,
        layer_dims: Vec<(u32, u32)>,
        macs: u64,
        sfu_ops: u64,
        /// Independent weight sets routed by spatial tile (1 = dense).
        tiles: u32,
    },
}

/// Element counts and boundary traffic for one node. `external_*_bytes` are
/// graph-boundary transfers (scene inputs, final image); tensors flowing
/// between nodes stay on chip and are carried by [`Edge`]s instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub elements_in: u64,
    pub elements_out: u64,
    pub input_width: u32,
    pub output_width: u32,
    pub external_in_bytes: u64,
    pub external_out_bytes: u64,
    /// Resident operand bytes (weights, tables, texture) fetched from DRAM.
    pub asset_bytes: u64,
    pub detail: WorkDetail,
}

impl Workload {
    /// Bytes per streamed input element (16-bit components on the wire).
    pub fn stream_item_bytes(&self) -> u32 {
        self.input_width * 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroOpNode {
    pub kind: MicroOpKind,
    pub indexing: IndexingTask,
    pub reduction: ReductionTask,
    pub role: Role,
    pub workload: Workload,
}

/// Data dependency between nodes; `width` components of 2 bytes each per
/// element stay in on-chip memory between producer and consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub width: u32,
    pub elements: u64,
}

impl Edge {
    pub fn bytes(&self) -> u64 {
        self.elements * self.width as u64 * 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineGraph {
    pub kind: PipelineKind,
    pub nodes: Vec<MicroOpNode>,
    pub edges: Vec<Edge>,
}

/// Structural validation: task-table membership, positive workloads,
/// acyclicity, and producer/consumer width agreement along every edge.
pub fn validate_graph(graph: &PipelineGraph) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut push = |path: String, message: String| report.push(Violation { path, message });

    for (i, node) in graph.nodes.iter().enumerate() {
        let path = format!("nodes[{i}]");
        let t = task_template(node.kind);
        if !t.items.contains(&node.indexing.item) {
            push(
                path.clone(),
                format!(
                    "item {} not legal for {}",
                    node.indexing.item.name(),
                    node.kind.name()
                ),
            );
        }
        if !t.dimensions.contains(&node.indexing.dimension) {
            push(
                path.clone(),
                format!(
                    "dimension {} not legal for {}",
                    node.indexing.dimension.name(),
                    node.kind.name()
                ),
            );
        }
        if !t.functions.contains(&node.indexing.function) {
            push(
                path.clone(),
                format!(
                    "function {} not legal for {}",
                    node.indexing.function.name(),
                    node.kind.name()
                ),
            );
        }
        if !t.patterns.contains(&node.reduction.pattern) {
            push(
                path.clone(),
                format!(
                    "access pattern {} not legal for {}",
                    node.reduction.pattern.name(),
                    node.kind.name()
                ),
            );
        }
        if node.workload.elements_in == 0 && node.workload.elements_out == 0 {
            push(path.clone(), "workload has no elements".into());
        }
        if node.workload.input_width == 0 || node.workload.output_width == 0 {
            push(path, "zero tensor width".into());
        }
    }

    for (e, edge) in graph.edges.iter().enumerate() {
        let path = format!("edges[{e}]");
        if edge.from >= graph.nodes.len() || edge.to >= graph.nodes.len() {
            push(path, "edge endpoint out of range".into());
            continue;
        }
        if edge.from >= edge.to {
            // Nodes are stored in dependency order, so any non-forward edge
            // introduces a cycle over the ordered list.
            push(
                path.clone(),
                format!("edge {} -> {} is not forward (cycle)", edge.from, edge.to),
            );
        }
        let producer = &graph.nodes[edge.from];
        let consumer = &graph.nodes[edge.to];
        if producer.workload.output_width != edge.width {
            push(
                path.clone(),
                format!(
                    "producer width {} != edge width {}",
                    producer.workload.output_width, edge.width
                ),
            );
        }
        if consumer.workload.input_width != edge.width {
            push(
                path,
                format!(
                    "consumer width {} != edge width {}",
                    consumer.workload.input_width, edge.width
                ),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{default_camera, generate_synthetic_scene, ScaleClass};

    fn tiny_graph(kind: PipelineKind) -> PipelineGraph {
        let assets = generate_synthetic_scene(kind, 0, ScaleClass::Tiny);
        let camera = default_camera(kind, ScaleClass::Tiny);
        compile_pipeline(
            kind,
            &assets,
            &camera,
            &SamplingConfig::for_scale(ScaleClass::Tiny),
        )
        .unwrap()
    }

    #[test]
    fn every_compiled_graph_validates_cleanly() {
        for kind in PipelineKind::ALL {
            let g = tiny_graph(kind);
            let report = validate_graph(&g);
            assert!(report.is_empty(), "{kind:?}: {report:?}");
        }
    }

    #[test]
    fn geometric_processing_rejects_random_hash() {
        let mut g = tiny_graph(PipelineKind::Mesh);
        g.nodes[0].indexing.function = IndexFunction::RandomHash;
        let report = validate_graph(&g);
        assert!(
            report.iter().any(|v| v.message.contains("random-hash")),
            "{report:?}"
        );
    }

    #[test]
    fn backward_edge_is_a_cycle_violation() {
        let mut g = tiny_graph(PipelineKind::Mesh);
        let last = g.nodes.len() - 1;
        g.edges.push(Edge {
            from: last,
            to: 0,
            width: 1,
            elements: 1,
        });
        let report = validate_graph(&g);
        assert!(
            report.iter().any(|v| v.message.contains("cycle")),
            "{report:?}"
        );
    }

    #[test]
    fn width_mismatch_is_detected() {
        let mut g = tiny_graph(PipelineKind::HashGrid);
        g.edges[0].width += 1;
        let report = validate_graph(&g);
        assert!(
            report.iter().any(|v| v.message.contains("width")),
            "{report:?}"
        );
    }

    #[test]
    fn task_table_matches_the_published_rows() {
        // Spot-check the distinguishing cells of the embedded table.
        let gp = task_template(MicroOpKind::GeometricProcessing);
        assert_eq!(gp.items, &[IndexItem::MeshGaussian]);
        assert_eq!(gp.patterns, &[AccessPattern::Continuous]);
        let cgi = task_template(MicroOpKind::CombinedGridIndexing);
        assert!(cgi.functions.contains(&IndexFunction::RandomHash));
        assert_eq!(cgi.patterns, &[AccessPattern::Discrete]);
        let dgi = task_template(MicroOpKind::DecomposedGridIndexing);
        assert_eq!(dgi.functions, &[IndexFunction::LinearIndexing]);
        assert!(!dgi.dimensions.contains(&IndexDim::D1));
        let sort = task_template(MicroOpKind::Sorting);
        assert_eq!(sort.items, &[IndexItem::SortingKeys]);
        let gemm = task_template(MicroOpKind::Gemm);
        assert_eq!(
            gemm.patterns,
            &[AccessPattern::Continuous, AccessPattern::Discrete]
        );
    }
}
