//! Stable plain-text rendering of a pipeline graph, for golden-file tests and
//! human inspection. Field order and formatting are part of the contract —
//! change them only together with the committed golden files.

use std::fmt::Write as _;

use super::{GeometryMode, PipelineGraph, WorkDetail};

pub fn graph_to_text(graph: &PipelineGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "pipeline {}", graph.kind.name());
    for (i, node) in graph.nodes.iter().enumerate() {
        let w = &node.workload;
        let _ = writeln!(
            s,
            "node {i} {} role={} item={} dim={} fn={} access={} in={}x{} out={}x{} ext-in={} ext-out={} asset={}",
            node.kind.name(),
            node.role.name(),
            node.indexing.item.name(),
            node.indexing.dimension.name(),
            node.indexing.function.name(),
            node.reduction.pattern.name(),
            w.elements_in,
            w.input_width,
            w.elements_out,
            w.output_width,
            w.external_in_bytes,
            w.external_out_bytes,
            w.asset_bytes,
        );
        match &w.detail {
            WorkDetail::Geometric {
                vertices,
                primitives,
                coverage_estimate,
                mode,
            } => {
                let mode = match mode {
                    GeometryMode::Rasterize => "rasterize",
                    GeometryMode::Splat => "splat",
                };
                let _ = writeln!(
                    s,
                    "  geometric vertices={vertices} primitives={primitives} coverage={coverage_estimate} mode={mode}"
                );
            }
            WorkDetail::Grid {
                queries,
                levels,
                feature_width,
                corners,
                table_bytes_per_level,
                int_ops_per_corner,
            } => {
                let _ = writeln!(
                    s,
                    "  grid queries={queries} levels={levels} width={feature_width} corners={corners} table-bytes={table_bytes_per_level} int-ops={int_ops_per_corner}"
                );
            }
            WorkDetail::Sort { patches, elements } => {
                let _ = writeln!(s, "  sort patches={patches} elements={elements}");
            }
            WorkDetail::Gemm {
                batch,
                layer_dims,
                macs,
                sfu_ops,
                tiles,
            } => {
                let dims = layer_dims
                    .iter()
                    .map(|(i, o)| format!("{i}x{o}"))
                    .collect::<Vec<_>>()
                    .join(",");
                let dims = if dims.is_empty() {
                    "-".to_string()
                } else {
                    dims
                };
                let _ = writeln!(
                    s,
                    "  gemm batch={batch} layers={dims} macs={macs} sfu={sfu_ops} tiles={tiles}"
                );
            }
        }
    }
    for e in &graph.edges {
        let _ = writeln!(
            s,
            "edge {}->{} width={} elements={}",
            e.from, e.to, e.width, e.elements
        );
    }
    s
}
