//! File-level operations behind the subcommands, with batch mode.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use csd_core::eval::{evaluate, MetricReport};
use csd_core::skeleton::{extract_skeleton_with, SkeletonOptions};
use csd_core::skelgraph::{build_graph, partition_paths};
use csd_core::volume::{distance_field, marching_cubes};
use csd_core::synth::{self, Scene};
use csd_core::volume::add_impulse_noise;
use csd_core::{BinaryVolume, DecompositionResult};

use crate::atomic::write_atomic;
use crate::config::RunConfig;
use crate::driver;
use crate::error::FormatError;
use crate::export::{trace_file_name, write_metrics_csv, write_metrics_json, write_trace, PartitionDoc, Provenance, SkeletonDoc};
use crate::formats::{self, mesh, WriteOptions};

/// How a run failed; decides the exit status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Unreadable or malformed input, or a bad setting.
    #[error("{0}")]
    Input(String),
    /// The pipeline rejected the object or an output could not be written.
    #[error("{0}")]
    Pipeline(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Pipeline(_) => 3,
        }
    }

    fn input(e: impl std::fmt::Display) -> Self {
        RunError::Input(e.to_string())
    }

    fn pipeline(e: impl std::fmt::Display) -> Self {
        RunError::Pipeline(e.to_string())
    }
}

pub type RunResult<T> = Result<T, RunError>;

pub fn load_volume(path: &Path) -> RunResult<BinaryVolume> {
    formats::load_binary(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
}

fn output(e: FormatError) -> RunError {
    RunError::pipeline(e)
}

/// Outputs requested from a decomposition.
#[derive(Debug, Clone, Default)]
pub struct DecomposeOutputs {
    /// Label volume file name inside the output directory.
    pub labels_name: String,
    pub write: WriteOptions,
    /// Per-interval trace CSVs under `trace/`.
    pub trace: bool,
    /// Per-label OBJ meshes under `meshes/`.
    pub meshes: bool,
    /// Ground truth to score the labels against.
    pub truth: Option<PathBuf>,
}

impl DecomposeOutputs {
    pub fn new() -> Self {
        DecomposeOutputs {
            labels_name: "labels.nrrd".into(),
            ..Default::default()
        }
    }
}

/// What a finished decomposition reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSummary {
    pub components: usize,
    pub parts: usize,
    pub intersections: usize,
    pub metrics: Option<MetricReport>,
}

pub fn object_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Decomposes one object file into `out_dir`.
pub fn decompose_file(
    input: &Path,
    out_dir: &Path,
    config: &RunConfig,
    threads: usize,
    outs: &DecomposeOutputs,
) -> RunResult<ObjectSummary> {
    config.validate().map_err(RunError::input)?;
    let vol = load_volume(input)?;
    let truth = match &outs.truth {
        Some(p) => Some(formats::load_labels(p).map_err(|e| RunError::Input(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let res = driver::decompose(&vol, &config.params(), threads).map_err(RunError::pipeline)?;
    let metrics = match &truth {
        Some(t) => Some(evaluate(&res.labels, t).map_err(RunError::input)?),
        None => None,
    };
    write_decomposition(&object_name(input), &vol, config, &res, out_dir, outs, metrics.as_ref())?;
    Ok(ObjectSummary {
        components: res.component_count(),
        parts: res.part_count(),
        intersections: res.intersection_count(),
        metrics,
    })
}

pub fn write_decomposition(
    name: &str,
    vol: &BinaryVolume,
    config: &RunConfig,
    res: &DecompositionResult,
    out_dir: &Path,
    outs: &DecomposeOutputs,
    metrics: Option<&MetricReport>,
) -> RunResult<()> {
    formats::save_labels(&out_dir.join(&outs.labels_name), &res.labels, outs.write).map_err(output)?;
    Provenance::new(name, vol, config, res)
        .save(&out_dir.join("provenance.json"))
        .map_err(output)?;
    if outs.trace {
        for (k, (iv, s)) in res.intervals.iter().zip(&res.sweeps).enumerate() {
            write_trace(&out_dir.join("trace").join(trace_file_name(k, iv)), &s.trace).map_err(output)?;
        }
    }
    if outs.meshes {
        for label in 1..=res.labels.max_label() {
            let m = marching_cubes(&res.labels, label, 0.5).map_err(RunError::pipeline)?;
            mesh::write_obj(&out_dir.join("meshes").join(format!("label_{label:03}.obj")), &m, &[])
                .map_err(output)?;
        }
    }
    if let Some(m) = metrics {
        write_metrics_json(&out_dir.join("metrics.json"), m).map_err(output)?;
        write_metrics_csv(&out_dir.join("metrics.csv"), m).map_err(output)?;
    }
    Ok(())
}

/// Extra skeleton outputs.
#[derive(Debug, Clone, Default)]
pub struct SkeletonOutputs {
    pub partition: Option<PathBuf>,
    /// Surface mesh with the branches as OBJ polylines.
    pub overlay: Option<PathBuf>,
}

/// Returns the branch count.
pub fn skeletonize_file(input: &Path, output_path: &Path, config: &RunConfig, outs: &SkeletonOutputs) -> RunResult<usize> {
    config.validate().map_err(RunError::input)?;
    let vol = load_volume(input)?;
    let p = config.params();
    let dfield = distance_field(&vol).map_err(RunError::pipeline)?;
    let opts = SkeletonOptions {
        min_branch_length: p.min_branch_length,
        max_branches: p.max_branches,
        step: p.step,
    };
    let skel = extract_skeleton_with(&vol, &dfield, &opts).map_err(RunError::pipeline)?;
    SkeletonDoc::new(&skel).save(output_path).map_err(output)?;
    if let Some(path) = &outs.partition {
        let g = build_graph(&skel).map_err(RunError::pipeline)?;
        let part = partition_paths(&g, p.theta_c);
        crate::atomic::write_json(path, &PartitionDoc::new(&part, config.theta_c)).map_err(output)?;
    }
    if let Some(path) = &outs.overlay {
        let m = marching_cubes(&vol, 1, 0.5).map_err(RunError::pipeline)?;
        let lines: Vec<_> = skel.branches.iter().map(|b| b.polyline.points().to_vec()).collect();
        mesh::write_obj(path, &m, &lines).map_err(output)?;
    }
    Ok(skel.branches.len())
}

pub fn evaluate_files(pred: &Path, truth: &Path) -> RunResult<MetricReport> {
    let load = |p: &Path| formats::load_labels(p).map_err(|e| RunError::Input(format!("{}: {e}", p.display())));
    let (a, b) = (load(pred)?, load(truth)?);
    evaluate(&a, &b).map_err(RunError::input)
}

/// Iso-surface of `label` (1 = foreground of a binary volume).
pub fn mesh_file(input: &Path, output_path: &Path, label: u32, iso: f64) -> RunResult<usize> {
    let labels = formats::load_labels(input).map_err(|e| RunError::Input(format!("{}: {e}", input.display())))?;
    let m = marching_cubes(&labels, label, iso).map_err(RunError::input)?;
    mesh::write_mesh(output_path, &m).map_err(|e| match e {
        FormatError::UnknownExtension(_) => RunError::input(e),
        e => output(e),
    })?;
    Ok(m.triangles.len())
}

/// Object files of a batch directory: NRRD files and raw+json sidecars
/// with their data file present, sorted by file name.
pub fn batch_inputs(dir: &Path) -> RunResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| RunError::Input(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| RunError::Input(format!("{}: {e}", dir.display())))?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let keep = match ext.as_deref() {
            Some("nrrd") | Some("nhdr") => true,
            Some("json") => path.with_extension("raw").is_file(),
            _ => false,
        };
        if keep {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchEntry {
    pub name: String,
    pub outcome: Result<ObjectSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchSummary {
    /// Sorted by name.
    pub entries: Vec<BatchEntry>,
}

impl BatchSummary {
    pub fn ok(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.is_ok()).count()
    }

    pub fn failed(&self) -> usize {
        self.entries.len() - self.ok()
    }

    pub fn line(&self) -> String {
        format!("{} ok / {} failed", self.ok(), self.failed())
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("name,status,components,parts,intersections,message\n");
        for e in &self.entries {
            match &e.outcome {
                Ok(o) => s.push_str(&format!("{},ok,{},{},{},\n", e.name, o.components, o.parts, o.intersections)),
                Err(m) => s.push_str(&format!("{},failed,,,,\"{}\"\n", e.name, m.replace('"', "\"\""))),
            }
        }
        s
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".into()
    }
}

/// Decomposes every object in `dir` on a pool of `threads` workers, each
/// object into `out_dir/<name>/`. Failures are recorded per object and never
/// stop the batch. `summary.csv` is written into `out_dir`.
pub fn run_batch(
    dir: &Path,
    out_dir: &Path,
    config: &RunConfig,
    threads: usize,
    outs: &DecomposeOutputs,
) -> RunResult<BatchSummary> {
    config.validate().map_err(RunError::input)?;
    let inputs = batch_inputs(dir)?;
    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    for p in &inputs {
        *names.entry(object_name(p)).or_default() += 1;
    }
    let results = driver::parallel_map(inputs.len(), threads, |k| {
        let input = &inputs[k];
        let name = object_name(input);
        if names[&name] > 1 {
            return Err(format!("{name}: several input files share this name"));
        }
        let target = out_dir.join(&name);
        let run = catch_unwind(AssertUnwindSafe(|| decompose_file(input, &target, config, 1, outs)));
        match run {
            Ok(Ok(s)) => Ok(s),
            Ok(Err(e)) => Err(e.to_string()),
            Err(p) => Err(format!("internal error: {}", panic_message(p))),
        }
    });
    let mut entries: Vec<BatchEntry> = inputs
        .iter()
        .zip(results)
        .map(|(p, outcome)| BatchEntry {
            name: object_name(p),
            outcome,
        })
        .collect();
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    let summary = BatchSummary { entries };
    let csv = summary.csv();
    write_atomic(&out_dir.join("summary.csv"), |w| w.write_all(csv.as_bytes())).map_err(output)?;
    Ok(summary)
}

/// Built-in fixture names accepted by [`builtin_scene`].
pub const BUILTIN_SCENES: &[&str] = &[
    "straight", "tapering", "l-tube", "x-crossing", "y-shape", "five-branch", "four-leg", "weave",
];

pub fn builtin_scene(name: &str) -> Option<Scene> {
    Some(match name {
        "straight" => synth::straight_tube(100.0, 5.0),
        "tapering" => synth::tapering_tube(100.0, 8.0, 4.0),
        "l-tube" => synth::l_tube(40.0, 5.0),
        "x-crossing" => synth::x_crossing(6.0),
        "y-shape" => synth::y_shape(5.0),
        "five-branch" => synth::five_branch(),
        "four-leg" => synth::four_leg(),
        "weave" => synth::weave(),
        _ => return None,
    })
}

/// A built-in name or a scene JSON file.
pub fn resolve_scene(spec: &str) -> RunResult<Scene> {
    if let Some(s) = builtin_scene(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(RunError::Input(format!(
            "`{spec}` is neither a scene file nor one of: {}",
            BUILTIN_SCENES.join(", ")
        )));
    }
    crate::atomic::read_json(path).map_err(RunError::input)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SynthReport {
    pub foreground: usize,
    pub labels: usize,
    /// Present when noise was applied.
    pub noise: Option<f64>,
    pub seed: u64,
}

/// Writes `volume.<ext>`, `truth.<ext>`, `axes.json` and `scene.json`.
/// With noise the volume is perturbed; the truth keeps the clean labels
/// restricted to the noisy foreground.
pub fn synth_scene(
    scene: &Scene,
    out_dir: &Path,
    noise: Option<f64>,
    seed: u64,
    ext: &str,
    write: WriteOptions,
) -> RunResult<SynthReport> {
    let ras = scene.rasterize().map_err(RunError::input)?;
    let mut vol = ras.volume;
    let mut truth = ras.truth;
    if let Some(d) = noise {
        vol = add_impulse_noise(&vol, d, seed).map_err(RunError::input)?;
        for (i, &f) in vol.data().iter().enumerate() {
            if !f {
                truth.set(i, 0);
            }
        }
        // Grown voxels take the label of the nearest tube.
        let grown: Vec<usize> = vol.foreground().filter(|&i| truth.get(i) == 0).collect();
        for i in grown {
            let p = csd_core::volume::Grid::world(&vol, i);
            let best = ras
                .axes
                .iter()
                .enumerate()
                .map(|(k, a)| (a.project(p).distance, k))
                .fold((f64::INFINITY, 0), |m, x| if x.0 < m.0 { x } else { m });
            truth.set(i, scene.tubes[best.1].label);
        }
    }
    formats::save_binary(&out_dir.join(format!("volume.{ext}")), &vol, write).map_err(output)?;
    formats::save_labels(&out_dir.join(format!("truth.{ext}")), &truth, write).map_err(output)?;
    let axes: Vec<Vec<[f64; 3]>> =
        ras.axes.iter().map(|a| a.points().iter().map(|p| p.to_array()).collect()).collect();
    crate::atomic::write_json(&out_dir.join("axes.json"), &axes).map_err(output)?;
    crate::atomic::write_json(&out_dir.join("scene.json"), scene).map_err(output)?;
    Ok(SynthReport {
        foreground: vol.count(),
        labels: truth.label_count(),
        noise,
        seed,
    })
}
