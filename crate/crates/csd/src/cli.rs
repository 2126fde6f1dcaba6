//! Command-line definitions and dispatch.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use csd_core::{AxisKind, HausdorffMetric};

use crate::config::{resolve_threads, RunConfig};
use crate::formats::WriteOptions;
use crate::run::{self, DecomposeOutputs, RunError, SkeletonOutputs};

#[derive(Debug, Parser)]
#[command(name = "csd", version, about = "Cylindrical shape decomposition of voxel tubular objects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize a fixture with ground truth.
    Synth(SynthArgs),
    /// Extract the curve skeleton.
    Skeletonize(SkeletonizeArgs),
    /// Decompose one object, or every object in a directory.
    Decompose(DecomposeArgs),
    /// Compare two label volumes.
    Evaluate(EvaluateArgs),
    /// Export an iso-surface as OBJ or STL.
    Mesh(MeshArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Hausdorff,
    Modified,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Linear,
    Spline,
    Sine,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum FormatArg {
    /// NRRD with attached header.
    #[default]
    Nrrd,
    /// NRRD with a detached header.
    Nhdr,
    /// Raw buffer with a JSON sidecar.
    Raw,
}

impl FormatArg {
    fn ext(self) -> &'static str {
        match self {
            FormatArg::Nrrd => "nrrd",
            FormatArg::Nhdr => "nhdr",
            FormatArg::Raw => "json",
        }
    }
}

/// Pipeline settings. Flags override `--config`, which overrides defaults.
#[derive(Debug, Clone, Args, Default)]
pub struct PipelineArgs {
    /// JSON config, or a provenance file to rerun.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Sweep reach past a junction, in units of the local radius.
    #[arg(long)]
    pub alpha_s: Option<f64>,
    /// Sweep start offset from a junction, in units of the local radius.
    #[arg(long)]
    pub alpha_e: Option<f64>,
    /// Normalized Hausdorff threshold in (0, 1).
    #[arg(long)]
    pub theta_h: Option<f64>,
    /// Path-merging angle in degrees (181 keeps every branch separate).
    #[arg(long)]
    pub theta_c: Option<f64>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Sub-skeleton sampling factor.
    #[arg(long)]
    pub sf: Option<usize>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    #[arg(long)]
    pub min_branch_length: Option<f64>,
    #[arg(long)]
    pub max_branches: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Worker threads (falls back to CSD_THREADS, then the core count).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl PipelineArgs {
    pub fn config(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { c.$f = v; })*};
        }
        set!(alpha_s, alpha_e, theta_h, theta_c, sf, max_branches, n_samples, seed);
        if let Some(m) = self.metric {
            c.metric = match m {
                MetricArg::Hausdorff => HausdorffMetric::Hausdorff,
                MetricArg::Modified => HausdorffMetric::Modified,
            };
        }
        if let Some(a) = self.axis {
            c.axis = match a {
                AxisArg::Linear => AxisKind::Linear,
                AxisArg::Spline => AxisKind::Spline,
                AxisArg::Sine => AxisKind::Sine,
            };
        }
        if self.min_branch_length.is_some() {
            c.min_branch_length = self.min_branch_length;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in fixture name or scene JSON file.
    pub scene: String,
    #[arg(short, long, value_name = "DIR")]
    pub output: PathBuf,
    /// Impulse-noise density in [0, 1].
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    #[arg(long)]
    pub gzip: bool,
}

#[derive(Debug, Args)]
pub struct SkeletonizeArgs {
    pub input: PathBuf,
    /// Skeleton JSON.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write the path partition JSON.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Also write the surface with the skeleton as OBJ polylines.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Volume file, or a directory for batch mode.
    pub input: PathBuf,
    #[arg(short, long, value_name = "DIR")]
    pub output: PathBuf,
    /// Write per-interval H_rho traces as CSV.
    #[arg(long)]
    pub trace: bool,
    /// Write one OBJ mesh per label.
    #[arg(long)]
    pub meshes: bool,
    /// Ground-truth labels to score against (single object only).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    #[arg(long)]
    pub gzip: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub pred: PathBuf,
    pub truth: PathBuf,
    /// Print a CSV header and row instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    pub input: PathBuf,
    /// `.obj` or `.stl`.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub label: u32,
    #[arg(long, default_value_t = 0.5)]
    pub iso: f64,
}

/// Exit status of a finished command.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure {
            code: e.exit_code(),
            error: e.into(),
        }
    }
}

fn input_failure(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error,
    }
}

fn threads(c: &RunConfig) -> Result<usize, Failure> {
    resolve_threads(c.threads).map_err(|m| input_failure(anyhow::anyhow!(m)))
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Skeletonize(a) => skeletonize(a),
        Command::Decompose(a) => decompose(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Mesh(a) => mesh(a),
    }
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let scene = run::resolve_scene(&a.scene)?;
    let r = run::synth_scene(&scene, &a.output, a.noise, a.seed, a.format.ext(), WriteOptions { gzip: a.gzip })?;
    println!(
        "{}: {} foreground voxels, {} labels",
        a.output.display(),
        r.foreground,
        r.labels
    );
    Ok(())
}

fn skeletonize(a: SkeletonizeArgs) -> Result<(), Failure> {
    let c = a.pipeline.config().map_err(input_failure)?;
    let outs = SkeletonOutputs {
        partition: a.partition,
        overlay: a.overlay,
    };
    let n = run::skeletonize_file(&a.input, &a.output, &c, &outs)?;
    println!("{}: {n} branches", a.output.display());
    Ok(())
}

fn labels_name(f: FormatArg) -> String {
    format!("labels.{}", f.ext())
}

fn decompose(a: DecomposeArgs) -> Result<(), Failure> {
    let c = a.pipeline.config().map_err(input_failure)?;
    let threads = threads(&c)?;
    let mut outs = DecomposeOutputs {
        labels_name: labels_name(a.format),
        write: WriteOptions { gzip: a.gzip },
        trace: a.trace,
        meshes: a.meshes,
        truth: a.truth,
    };
    if a.input.is_dir() {
        if outs.truth.take().is_some() {
            return Err(input_failure(anyhow::anyhow!("--truth applies to a single object, not a directory")));
        }
        let summary = run::run_batch(&a.input, &a.output, &c, threads, &outs)?;
        for e in &summary.entries {
            match &e.outcome {
                Ok(o) => println!("{}: ok, {} components", e.name, o.components),
                Err(m) => println!("{}: failed: {m}", e.name),
            }
        }
        println!("{}", summary.line());
        return Ok(());
    }
    let s = run::decompose_file(&a.input, &a.output, &c, threads, &outs)?;
    println!(
        "{}: {} components from {} parts and {} intersections",
        run::object_name(&a.input),
        s.components,
        s.parts,
        s.intersections
    );
    if let Some(m) = &s.metrics {
        println!("{}", crate::export::metric_json(m));
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let r = run::evaluate_files(&a.pred, &a.truth)?;
    if a.csv {
        println!("{}", csd_core::eval::MetricReport::CSV_HEADER);
        println!("{}", r.csv_row());
    } else {
        println!("{}", crate::export::metric_json(&r));
    }
    Ok(())
}

fn mesh(a: MeshArgs) -> Result<(), Failure> {
    let n = run::mesh_file(&a.input, &a.output, a.label, a.iso)?;
    println!("{}: {n} triangles", a.output.display());
    Ok(())
}

/// Parses `args`, runs the command and reports errors on standard error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}
