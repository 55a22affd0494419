//! `nrsim`: scene generation, pipeline compilation and rendering, and the
//! accelerator cost model, behind one deterministic command-line tool.
//!
//! Exit codes: 0 success, 1 contract violation or runtime failure, 2 usage
//! error (bad flags or subcommand).

mod compare;
mod reports;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nrsim_arch::{estimate_energy, run_sweep, simulate, ArchConfig};
use nrsim_core::ir::{
    compile_pipeline, execute_graph, graph_to_text, validate_graph, PipelineGraph, SamplingConfig,
};
use nrsim_core::scene::{
    default_camera, generate_synthetic_scene, load_scene, save_scene, validate_scene, Camera,
    PipelineKind, ScaleClass, SceneAssets, Violation,
};

use run::{RunDir, RunMeta};

fn parse_pipeline(s: &str) -> Result<PipelineKind, String> {
    let canonical = if s == "hybrid" { "hybrid-mesh-hash" } else { s };
    PipelineKind::from_name(canonical).ok_or_else(|| {
        format!("unknown pipeline `{s}` (expected mesh|mlp|low-rank|hash-grid|gaussian|hybrid)")
    })
}

fn parse_scale(s: &str) -> Result<ScaleClass, String> {
    ScaleClass::from_name(s)
        .ok_or_else(|| format!("unknown scale `{s}` (expected tiny|small|medium)"))
}

fn parse_scale_factor(s: &str) -> Result<u32, String> {
    match s {
        "1" => Ok(1),
        "2" => Ok(2),
        "4" => Ok(4),
        other => Err(format!("scale factor must be 1, 2, or 4, got `{other}`")),
    }
}

#[derive(Args)]
struct SceneArgs {
    /// Rendering pipeline: mesh|mlp|low-rank|hash-grid|gaussian|hybrid.
    #[arg(long, value_parser = parse_pipeline)]
    pipeline: PipelineKind,
    /// Seed for the synthetic scene generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Workload size: tiny|small|medium.
    #[arg(long, value_parser = parse_scale, default_value = "tiny")]
    scale: ScaleClass,
}

impl SceneArgs {
    fn build(&self) -> (SceneAssets, Camera, SamplingConfig) {
        let assets = generate_synthetic_scene(self.pipeline, self.seed, self.scale);
        let camera = default_camera(self.pipeline, self.scale);
        let sampling = SamplingConfig::for_scale(self.scale);
        (assets, camera, sampling)
    }

    fn meta(&self, command: &str) -> RunMeta {
        RunMeta {
            command: command.to_string(),
            pipeline: Some(self.pipeline.name().to_string()),
            scale: Some(self.scale.name().to_string()),
            seed: Some(self.seed),
            ..RunMeta::default()
        }
    }

    fn run_name(&self, command: &str) -> String {
        format!(
            "{command}-{}-{}-seed{}",
            self.pipeline.name(),
            self.scale.name(),
            self.seed
        )
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML file overriding architecture defaults (partial files merge).
    #[arg(long)]
    config: Option<PathBuf>,
    /// PE-array scale factor: 1|2|4 (flags win over the config file).
    #[arg(long, default_value_t = 1, value_parser = parse_scale_factor)]
    pe_scale: u32,
    /// Global-SRAM scale factor: 1|2|4.
    #[arg(long, default_value_t = 1, value_parser = parse_scale_factor)]
    sram_scale: u32,
}

impl ConfigArgs {
    fn base(&self) -> Result<ArchConfig> {
        match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Ok(ArchConfig::from_toml_str(&text)?)
            }
            None => Ok(ArchConfig::default()),
        }
    }

    /// Config file merged under the scaling flags.
    fn effective(&self) -> Result<ArchConfig> {
        Ok(self.base()?.scaled(self.pe_scale, self.sram_scale)?)
    }

    fn annotate(&self, meta: &mut RunMeta) {
        meta.pe_scale = Some(self.pe_scale);
        meta.sram_scale = Some(self.sram_scale);
        meta.config_file = self
            .config
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned());
    }
}

#[derive(Parser)]
#[command(
    name = "nrsim",
    version,
    about = "Neural-rendering pipelines lowered to micro-operator graphs, \
             rendered functionally and costed on a reconfigurable PE-array model"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic scene and save its assets.
    GenScene {
        #[command(flatten)]
        scene: SceneArgs,
        /// Exact run directory (default: <root>/<derived name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a pipeline to a micro-operator graph and execute it into an
    /// image (PPM preview plus lossless raw floats).
    Render {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost one pipeline on the configured array: per-node CSV plus a
    /// structured-text report with energy estimates.
    Simulate {
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep PE-array and SRAM scales {1,2,4} and report relative speeds.
    Sweep {
        /// Rendering pipeline: mesh|mlp|low-rank|hash-grid|gaussian|hybrid.
        #[arg(long, value_parser = parse_pipeline)]
        pipeline: PipelineKind,
        /// Seed for the synthetic scene generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Workload size; sweeps default to the desk-scale scene.
        #[arg(long, value_parser = parse_scale, default_value = "medium")]
        scale: ScaleClass,
        /// TOML file overriding architecture defaults for the base point.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the merged effective architecture configuration as TOML.
    PrintConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Validate scene assets and the compiled graph; exit 1 on violations.
    Validate {
        #[command(flatten)]
        scene: SceneArgs,
        /// Validate a saved scene directory instead of a generated scene.
        #[arg(long)]
        scene_dir: Option<PathBuf>,
    },
    /// Compare two images (PPM or raw float); pass iff max-abs diff is
    /// within tolerance.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Per-channel tolerance on the images' own value scale.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::GenScene { scene, out } => gen_scene(&scene, out.as_deref()),
        Cmd::Render { scene, config, out } => render(&scene, &config, out.as_deref()),
        Cmd::Simulate { scene, config, out } => simulate_cmd(&scene, &config, out.as_deref()),
        Cmd::Sweep {
            pipeline,
            seed,
            scale,
            config,
            out,
        } => sweep_cmd(pipeline, seed, scale, config.as_deref(), out.as_deref()),
        Cmd::PrintConfig { config } => {
            print!("{}", config.effective()?.to_toml_string());
            Ok(())
        }
        Cmd::Validate { scene, scene_dir } => validate_cmd(&scene, scene_dir.as_deref()),
        Cmd::Compare { a, b, tolerance } => compare_cmd(&a, &b, tolerance),
    }
}

fn bail_on_violations(what: &str, violations: &[Violation]) -> Result<()> {
    if violations.is_empty() {
        return Ok(());
    }
    for v in violations {
        eprintln!("violation in {what} at {}: {}", v.path, v.message);
    }
    bail!("{} {what} contract violation(s)", violations.len());
}

fn compile_checked(
    kind: PipelineKind,
    assets: &SceneAssets,
    camera: &Camera,
    sampling: &SamplingConfig,
) -> Result<PipelineGraph> {
    let graph = compile_pipeline(kind, assets, camera, sampling)?;
    bail_on_violations("graph", &validate_graph(&graph))?;
    Ok(graph)
}

fn gen_scene(scene: &SceneArgs, out: Option<&std::path::Path>) -> Result<()> {
    let (assets, _, _) = scene.build();
    bail_on_violations("scene", &validate_scene(&assets))?;
    let mut run = RunDir::create(out, &scene.run_name("gen-scene"))?;
    let files = save_scene(&run.dir().join("scene"), &assets)?;
    for file in &files {
        run.track(file)?;
    }
    let dir = run.dir().to_path_buf();
    run.finish(&scene.meta("gen-scene"))?;
    println!("scene written to {}", dir.display());
    Ok(())
}

fn render(scene: &SceneArgs, config: &ConfigArgs, out: Option<&std::path::Path>) -> Result<()> {
    let effective = config.effective()?;
    let (assets, camera, sampling) = scene.build();
    bail_on_violations("scene", &validate_scene(&assets))?;
    let graph = compile_checked(scene.pipeline, &assets, &camera, &sampling)?;
    let image = execute_graph(&graph, &assets, &camera, &sampling)?;

    let mut run = RunDir::create(out, &scene.run_name("render"))?;
    run.emit("graph.txt", graph_to_text(&graph).as_bytes())?;
    run.emit("image.ppm", &image.to_ppm())?;
    run.emit("image.raw", &image.to_raw())?;
    run.emit(
        "effective-config.toml",
        effective.to_toml_string().as_bytes(),
    )?;
    let dir = run.dir().to_path_buf();
    let mut meta = scene.meta("render");
    config.annotate(&mut meta);
    run.finish(&meta)?;
    println!(
        "rendered {}x{}x{} image ({} nodes) into {}",
        image.width,
        image.height,
        image.channels,
        graph.nodes.len(),
        dir.display()
    );
    Ok(())
}

fn simulate_cmd(
    scene: &SceneArgs,
    config: &ConfigArgs,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let effective = config.effective()?;
    let (assets, camera, sampling) = scene.build();
    let graph = compile_checked(scene.pipeline, &assets, &camera, &sampling)?;
    let report = simulate(&graph, &effective)?;
    let energy = estimate_energy(&report.tallies, &effective.energy)?;

    let mut run = RunDir::create(
        out,
        &format!(
            "{}-pe{}-sram{}",
            scene.run_name("simulate"),
            config.pe_scale,
            config.sram_scale
        ),
    )?;
    run.emit("cost.csv", reports::cost_csv(&report).as_bytes())?;
    run.emit(
        "report.txt",
        reports::cost_text(&graph, &report, &energy, &effective).as_bytes(),
    )?;
    run.emit(
        "effective-config.toml",
        effective.to_toml_string().as_bytes(),
    )?;
    let dir = run.dir().to_path_buf();
    let mut meta = scene.meta("simulate");
    config.annotate(&mut meta);
    run.finish(&meta)?;

    match report.fps {
        Some(fps) => println!(
            "{}: {} cycles/frame -> {:.3} fps; report in {}",
            graph.kind.name(),
            report.total_cycles,
            fps,
            dir.display()
        ),
        None => println!(
            "{}: graph does no work; report in {}",
            graph.kind.name(),
            dir.display()
        ),
    }
    Ok(())
}

fn sweep_cmd(
    pipeline: PipelineKind,
    seed: u64,
    scale: ScaleClass,
    config: Option<&std::path::Path>,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let base = match config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ArchConfig::from_toml_str(&text)?
        }
        None => ArchConfig::default(),
    };
    let assets = generate_synthetic_scene(pipeline, seed, scale);
    let camera = default_camera(pipeline, scale);
    let sampling = SamplingConfig::for_scale(scale);
    let graph = compile_checked(pipeline, &assets, &camera, &sampling)?;
    let table = run_sweep(&graph, &base)?;

    let mut run = RunDir::create(
        out,
        &format!("sweep-{}-{}-seed{}", pipeline.name(), scale.name(), seed),
    )?;
    run.emit("sweep.csv", reports::sweep_csv(&table).as_bytes())?;
    run.emit("effective-config.toml", base.to_toml_string().as_bytes())?;
    let dir = run.dir().to_path_buf();
    let meta = RunMeta {
        command: "sweep".to_string(),
        pipeline: Some(pipeline.name().to_string()),
        scale: Some(scale.name().to_string()),
        seed: Some(seed),
        config_file: config.map(|p| p.to_string_lossy().into_owned()),
        ..RunMeta::default()
    };
    run.finish(&meta)?;

    println!(
        "sweep of {} ({} scale), baseline {} cycles:",
        pipeline.name(),
        scale.name(),
        table.baseline_cycles
    );
    for cell in &table.cells {
        println!(
            "  pe x{} sram x{}: {:>12} cycles, speed {:.3}",
            cell.pe_scale, cell.sram_scale, cell.total_cycles, cell.relative_speed
        );
    }
    println!("table in {}", dir.display());
    Ok(())
}

fn validate_cmd(scene: &SceneArgs, scene_dir: Option<&std::path::Path>) -> Result<()> {
    let (assets, camera, sampling) = match scene_dir {
        Some(dir) => {
            let assets = load_scene(dir)?;
            let camera = default_camera(scene.pipeline, scene.scale);
            (assets, camera, SamplingConfig::for_scale(scene.scale))
        }
        None => scene.build(),
    };
    bail_on_violations("scene", &validate_scene(&assets))?;
    let graph = compile_checked(scene.pipeline, &assets, &camera, &sampling)?;
    println!(
        "ok: scene and {}-node {} graph satisfy all contracts",
        graph.nodes.len(),
        graph.kind.name()
    );
    Ok(())
}

fn compare_cmd(a: &std::path::Path, b: &std::path::Path, tolerance: f64) -> Result<()> {
    let diff = compare::compare_images(a, b)?;
    if diff <= tolerance {
        println!("pass: max-abs diff {diff:.6e} <= tolerance {tolerance:.6e}");
        Ok(())
    } else {
        println!("fail: max-abs diff {diff:.6e} > tolerance {tolerance:.6e}");
        bail!("images differ beyond tolerance")
    }
}
