//! Release gate: one test per acceptance criterion, each printing a
//! `criterion N ... pass` line on success (run with `--nocapture` to see
//! them). A failure in any assertion fails the corresponding criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nrsim_arch::array::{
    AluMode, ArrayMode, ControllerMode, FfPadRole, InputNetwork, PsPadRole, ReductionNetwork,
};
use nrsim_arch::{
    configure_array, ff_capacity_check, peak_macs_per_cycle, roofline_bound, run_sweep, simulate,
    ArchConfig, ArrayGeometry, Bound, FfFit,
};
use nrsim_core::ir::{
    compile_pipeline, execute_graph, AccessPattern, IndexDim, IndexFunction, IndexItem,
    IndexingTask, MicroOpKind, MicroOpNode, PipelineGraph, ReductionTask, Role, SamplingConfig,
    WorkDetail, Workload,
};
use nrsim_core::scene::{default_camera, generate_synthetic_scene, PipelineKind, ScaleClass};
use nrsim_testkit::monolithic::render_monolithic;
use nrsim_testkit::suites;

#[test]
fn criterion_1_micro_operator_kernels_match_their_oracles() {
    let start = Instant::now();
    suites::raster_suite(1000);
    suites::sort_suite(1000);
    suites::gemm_suite(1000);
    suites::grid_suite(1000);
    suites::blend_suite(1000);
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "oracle suites took {elapsed:?}, budget 60s"
    );
    println!(
        "criterion 1 (micro-operator oracle equivalence, 1000 cases/kernel in {elapsed:?}): pass"
    );
}

#[test]
fn criterion_2_pipelines_match_the_monolithic_renderer() {
    let start = Instant::now();
    let scale = ScaleClass::Tiny;
    let sampling = SamplingConfig::for_scale(scale);
    for kind in PipelineKind::ALL {
        for seed in 0..20u64 {
            let assets = generate_synthetic_scene(kind, seed, scale);
            let camera = default_camera(kind, scale);
            let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
            let ir = execute_graph(&graph, &assets, &camera, &sampling).unwrap();
            let oracle = render_monolithic(&assets, &camera, &sampling).unwrap();
            let diff = ir.max_abs_diff(&oracle).unwrap();
            assert!(
                diff <= 1e-5,
                "{} seed {seed}: max-abs diff {diff}",
                kind.name()
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 300,
        "pipeline equivalence took {elapsed:?}, budget 5min"
    );
    println!(
        "criterion 2 (graph executor vs monolithic renderer, 6x20 scenes in {elapsed:?}): pass"
    );
}

#[test]
fn criterion_3_array_configurations_match_the_module_state_table() {
    use MicroOpKind::*;
    let geometry = ArrayGeometry::default();

    // Expected six-column row per operator: input network, reduction
    // network, controller, FF-pad role, ALU mode, PS-pad role.
    let gp = configure_array(GeometricProcessing, geometry);
    assert_eq!(gp.input_network, InputNetwork::Off);
    assert_eq!(gp.reduction_network, ReductionNetwork::Off);
    assert_eq!(gp.controller, ControllerMode::RasterizationControl);
    assert_eq!(gp.ff_role, FfPadRole::GeometryRepresentation);
    assert_eq!(gp.alu, AluMode::VectorMode);
    assert_eq!(gp.ps_role, PsPadRole::ZBuffer);

    let cgi = configure_array(CombinedGridIndexing, geometry);
    assert_eq!(cgi.input_network, InputNetwork::On);
    assert_eq!(cgi.reduction_network, ReductionNetwork::HorizontallyOn);
    assert_eq!(cgi.controller, ControllerMode::GridControl);
    assert_eq!(cgi.ff_role, FfPadRole::GridFeatures);
    assert_eq!(cgi.alu, AluMode::IndexFunction);
    assert_eq!(cgi.ps_role, PsPadRole::Off);

    let dgi = configure_array(DecomposedGridIndexing, geometry);
    assert_eq!(dgi.input_network, InputNetwork::On);
    assert_eq!(dgi.reduction_network, ReductionNetwork::FullyOn);
    assert_eq!(dgi.controller, ControllerMode::GridControl);
    assert_eq!(dgi.ff_role, FfPadRole::GridFeatures);
    assert_eq!(dgi.alu, AluMode::IndexFunction);
    assert_eq!(dgi.ps_role, PsPadRole::Off);

    let sort = configure_array(Sorting, geometry);
    assert_eq!(sort.input_network, InputNetwork::Off);
    assert_eq!(sort.reduction_network, ReductionNetwork::Off);
    assert_eq!(sort.controller, ControllerMode::SortingControl);
    assert_eq!(sort.ff_role, FfPadRole::SortingElements);
    assert_eq!(sort.alu, AluMode::Comparator);
    assert_eq!(sort.ps_role, PsPadRole::Off);

    let gemm = configure_array(Gemm, geometry);
    assert_eq!(gemm.input_network, InputNetwork::On);
    assert_eq!(gemm.reduction_network, ReductionNetwork::Off);
    assert_eq!(gemm.controller, ControllerMode::GemmControl);
    assert_eq!(gemm.ff_role, FfPadRole::ModelWeights);
    assert_eq!(gemm.alu, AluMode::AdderTreeMode);
    assert_eq!(gemm.ps_role, PsPadRole::OutputFeatures);

    // Operating mode split and its structural invariant.
    assert_eq!(gemm.mode, ArrayMode::Systolic);
    for state in [gp, cgi, dgi, sort] {
        assert_eq!(state.mode, ArrayMode::Pipeline);
    }
    println!("criterion 3 (module-state table, 5 operators x 6 columns): pass");
}

#[test]
fn criterion_4_scaling_sweep_matches_the_reference_trend() {
    let start = Instant::now();
    let scale = ScaleClass::Medium;
    let assets = generate_synthetic_scene(PipelineKind::HashGrid, 0, scale);
    let camera = default_camera(PipelineKind::HashGrid, scale);
    let graph = compile_pipeline(
        PipelineKind::HashGrid,
        &assets,
        &camera,
        &SamplingConfig::for_scale(scale),
    )
    .unwrap();
    let table = run_sweep(&graph, &ArchConfig::default()).unwrap();

    let targets = [
        (2u32, 1u32, 1.1f64),
        (4, 1, 1.1),
        (1, 2, 1.0),
        (2, 2, 2.0),
        (4, 2, 2.2),
        (1, 4, 1.0),
        (2, 4, 2.0),
        (4, 4, 4.0),
    ];
    for (pe, sram, target) in targets {
        let speed = table.speed(pe, sram);
        let ratio = speed / target;
        assert!(
            (0.85..=1.15).contains(&ratio),
            "cell ({pe}x,{sram}x): speed {speed:.4}, target {target}, ratio {ratio:.4}"
        );
    }
    // Balanced (1:1) design points dominate their size class.
    assert!(table.balanced_scaling_dominates());
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 120,
        "sweep took {elapsed:?}, budget 2min"
    );
    println!(
        "criterion 4 (scaling trend within +/-15%, balanced diagonal dominant, {elapsed:?}): pass"
    );
}

#[test]
fn criterion_5_cycle_totals_respect_roofline_bounds() {
    let config = ArchConfig::default();
    // Every node of every pipeline at two scales stays above both bounds.
    for scale in [ScaleClass::Tiny, ScaleClass::Medium] {
        let sampling = SamplingConfig::for_scale(scale);
        for kind in PipelineKind::ALL {
            let assets = generate_synthetic_scene(kind, 1, scale);
            let camera = default_camera(kind, scale);
            let graph = compile_pipeline(kind, &assets, &camera, &sampling).unwrap();
            let report = simulate(&graph, &config).unwrap();
            for (node, cost) in graph.nodes.iter().zip(&report.nodes) {
                let (c, m) = roofline_bound(node, &config);
                assert!(
                    cost.cycles as f64 >= c && cost.cycles as f64 >= m,
                    "{} {} node {}: {} cycles under bounds ({c:.1}, {m:.1})",
                    kind.name(),
                    scale.name(),
                    cost.index,
                    cost.cycles
                );
            }
        }
    }

    // Reference matrix multiply: 1024x64 activations by 64x64 weights.
    let node = MicroOpNode {
        kind: MicroOpKind::Gemm,
        indexing: IndexingTask {
            item: IndexItem::Scalars,
            dimension: IndexDim::D2,
            function: IndexFunction::AutomaticCounter,
        },
        reduction: ReductionTask {
            pattern: AccessPattern::Continuous,
        },
        role: Role::MlpInference,
        workload: Workload {
            elements_in: 1024,
            elements_out: 1024,
            input_width: 64,
            output_width: 64,
            external_in_bytes: 1024 * 64 * 2,
            external_out_bytes: 1024 * 64 * 2,
            asset_bytes: 64 * 64 * 2,
            detail: WorkDetail::Gemm {
                batch: 1024,
                layer_dims: vec![(64, 64)],
                macs: 1024 * 64 * 64,
                sfu_ops: 0,
                tiles: 1,
            },
        },
    };
    let graph = PipelineGraph {
        kind: PipelineKind::Mlp,
        nodes: vec![node],
        edges: vec![],
    };
    let report = simulate(&graph, &config).unwrap();
    let n = &report.nodes[0];
    assert_eq!(
        n.bound,
        Bound::Memory,
        "reference GEMM must be memory-bound"
    );
    let hand_derived = 4529.0;
    let err = (n.cycles as f64 - hand_derived).abs() / hand_derived;
    assert!(
        err < 0.05,
        "reference GEMM {} cycles vs {hand_derived} ({:.2}% off)",
        n.cycles,
        err * 100.0
    );
    println!(
        "criterion 5 (roofline consistency; reference GEMM {} cycles vs 4529 bound): pass",
        n.cycles
    );
}

#[test]
fn criterion_6_architecture_constants() {
    let geometry = ArrayGeometry::default();
    assert_eq!(peak_macs_per_cycle(&geometry, 4), 1024);

    // FF capacity pivots exactly at 4096 bytes per PE.
    assert_eq!(ff_capacity_check(4096, 4095), FfFit::Fits);
    assert_eq!(ff_capacity_check(4096, 4096), FfFit::Fits);
    assert_eq!(ff_capacity_check(4096, 4097), FfFit::Tiles(2));
    assert_eq!(ff_capacity_check(4096, 0), FfFit::Fits);
    assert_eq!(ff_capacity_check(4096, 10_000), FfFit::Tiles(3));
    println!("criterion 6 (1024 MACs/cycle peak; FF pivot at 4096 B): pass");
}

fn run_nrsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nrsim"))
        .args(args)
        .output()
        .expect("nrsim runs")
}

fn dir_digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                entries.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn criterion_7_commands_are_deterministic_across_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let commands: [(&str, Vec<&str>); 3] = [
        (
            "render",
            vec![
                "render",
                "--pipeline",
                "hash-grid",
                "--seed",
                "5",
                "--scale",
                "tiny",
            ],
        ),
        (
            "simulate",
            vec![
                "simulate",
                "--pipeline",
                "gaussian",
                "--seed",
                "2",
                "--scale",
                "tiny",
            ],
        ),
        (
            "sweep",
            vec![
                "sweep",
                "--pipeline",
                "hash-grid",
                "--seed",
                "1",
                "--scale",
                "tiny",
            ],
        ),
    ];
    for (name, args) in &commands {
        let mut digests = Vec::new();
        for rep in 0..3 {
            let out_dir = tmp.path().join(format!("{name}-{rep}"));
            let mut full = args.clone();
            let out_str = out_dir.to_string_lossy().into_owned();
            full.push("--out");
            full.push(&out_str);
            let output = run_nrsim(&full);
            assert!(
                output.status.success(),
                "{name} rep {rep} failed: {:?}",
                output
            );
            digests.push(dir_digest(&out_dir));
        }
        assert_eq!(digests[0], digests[1], "{name}: run 0 vs 1 differ");
        assert_eq!(digests[1], digests[2], "{name}: run 1 vs 2 differ");
    }
    println!("criterion 7 (3x reruns byte-identical for render/simulate/sweep): pass");
}
