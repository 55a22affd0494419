//! The compiled-and-executed operator graph must produce the same image as a
//! straight-line per-pixel renderer, for every pipeline family.

use nrsim_core::ir::{compile_pipeline, execute_graph, SamplingConfig};
use nrsim_core::scene::{default_camera, generate_synthetic_scene, PipelineKind, ScaleClass};
use nrsim_testkit::monolithic::render_monolithic;

#[test]
fn graph_execution_matches_monolithic_rendering() {
    let scale = ScaleClass::Tiny;
    for kind in PipelineKind::ALL {
        for seed in 0..6u64 {
            let assets = generate_synthetic_scene(kind, seed, scale);
            let camera = default_camera(kind, scale);
            let sampling = SamplingConfig::for_scale(scale);
            let graph = compile_pipeline(kind, &assets, &camera, &sampling)
                .unwrap_or_else(|e| panic!("{kind:?} seed {seed}: compile failed: {e}"));
            let via_graph = execute_graph(&graph, &assets, &camera, &sampling)
                .unwrap_or_else(|e| panic!("{kind:?} seed {seed}: execute failed: {e}"));
            let direct = render_monolithic(&assets, &camera, &sampling)
                .unwrap_or_else(|e| panic!("{kind:?} seed {seed}: monolithic failed: {e}"));
            let diff = via_graph.max_abs_diff(&direct).expect("same image shape");
            assert!(
                diff <= 1e-5,
                "{kind:?} seed {seed}: graph vs monolithic differ by {diff:.3e}"
            );
        }
    }
}

#[test]
fn equivalence_holds_with_early_termination_disabled() {
    for kind in [PipelineKind::Gaussian, PipelineKind::HashGrid] {
        let assets = generate_synthetic_scene(kind, 11, ScaleClass::Tiny);
        let camera = default_camera(kind, ScaleClass::Tiny);
        let mut sampling = SamplingConfig::for_scale(ScaleClass::Tiny);
        sampling.early_termination = false;
        let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
        let via_graph = execute_graph(&graph, &assets, &camera, &sampling).unwrap();
        let direct = render_monolithic(&assets, &camera, &sampling).unwrap();
        let diff = via_graph.max_abs_diff(&direct).unwrap();
        assert!(diff <= 1e-5, "{kind:?}: differ by {diff:.3e}");
    }
}

#[test]
fn small_scale_equivalence_spot_check() {
    for kind in [
        PipelineKind::Mesh,
        PipelineKind::Mlp,
        PipelineKind::Gaussian,
    ] {
        let assets = generate_synthetic_scene(kind, 2, ScaleClass::Small);
        let camera = default_camera(kind, ScaleClass::Small);
        let sampling = SamplingConfig::for_scale(ScaleClass::Small);
        let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
        let via_graph = execute_graph(&graph, &assets, &camera, &sampling).unwrap();
        let direct = render_monolithic(&assets, &camera, &sampling).unwrap();
        let diff = via_graph.max_abs_diff(&direct).unwrap();
        assert!(diff <= 1e-5, "{kind:?} small: differ by {diff:.3e}");
    }
}
