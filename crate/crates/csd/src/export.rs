//! JSON and CSV documents written next to results.

use std::io::Write;
use std::path::Path;

use csd_core::eval::MetricReport;
use csd_core::reconstruct::{ComponentInfo, CylinderInfo};
use csd_core::skeleton::{Branch, CurveSkeleton, NodeKind, Polyline};
use csd_core::skelgraph::{JunctionParam, PathPartition};
use csd_core::sweep::{DecompositionInterval, Side, TraceRow};
use csd_core::volume::Grid;
use csd_core::{BinaryVolume, DecompositionResult, Vec3};
use serde::{Deserialize, Serialize};

use crate::atomic::{read_json, write_atomic, write_json};
use crate::config::RunConfig;
use crate::error::{FormatError, Result};

pub const PROVENANCE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: usize,
    pub position: [f64; 3],
    pub kind: NodeKind,
    /// Incident branch ids, ascending.
    pub branches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDoc {
    pub id: usize,
    pub nodes: [usize; 2],
    pub length: f64,
    pub points: Vec<[f64; 3]>,
}

/// Skeleton file: nodes and branches in id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonDoc {
    pub x_star: [f64; 3],
    pub d_star: f64,
    pub nodes: Vec<NodeDoc>,
    pub branches: Vec<BranchDoc>,
}

impl SkeletonDoc {
    pub fn new(s: &CurveSkeleton) -> Self {
        SkeletonDoc {
            x_star: s.x_star.to_array(),
            d_star: s.d_star,
            nodes: s
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeDoc {
                    id,
                    position: n.position.to_array(),
                    kind: n.kind(),
                    branches: n.branches.clone(),
                })
                .collect(),
            branches: s
                .branches
                .iter()
                .enumerate()
                .map(|(id, b)| BranchDoc {
                    id,
                    nodes: b.nodes,
                    length: b.polyline.length(),
                    points: b.polyline.points().iter().map(|p| p.to_array()).collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds the skeleton; ids must be `0..n` in order.
    pub fn to_skeleton(&self) -> Result<CurveSkeleton> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(FormatError::header("nodes", format!("id {} at position {i}", n.id)));
            }
        }
        for (i, b) in self.branches.iter().enumerate() {
            if b.id != i {
                return Err(FormatError::header("branches", format!("id {} at position {i}", b.id)));
            }
        }
        let branches = self
            .branches
            .iter()
            .map(|b| Branch {
                polyline: Polyline::new(b.points.iter().map(|&p| Vec3::from_array(p))),
                nodes: b.nodes,
            })
            .collect();
        let positions = self.nodes.iter().map(|n| Vec3::from_array(n.position)).collect();
        let mut s = CurveSkeleton::from_parts(branches, positions)?;
        for (n, doc) in s.nodes.iter().zip(&self.nodes) {
            if n.branches != doc.branches {
                return Err(FormatError::header(
                    "nodes",
                    format!("node {} lists branches {:?}, branches say {:?}", doc.id, doc.branches, n.branches),
                ));
            }
        }
        s.x_star = Vec3::from_array(self.x_star);
        s.d_star = self.d_star;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDoc {
    pub id: usize,
    /// Edge (branch) ids in walking order.
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

/// Partition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub theta_c: f64,
    pub paths: Vec<PathDoc>,
}

impl PartitionDoc {
    pub fn new(p: &PathPartition, theta_c_deg: f64) -> Self {
        PartitionDoc {
            theta_c: theta_c_deg,
            paths: p
                .paths
                .iter()
                .enumerate()
                .map(|(id, p)| PathDoc {
                    id,
                    edges: p.edges.clone(),
                    vertices: p.vertices.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub name: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub foreground: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSummary {
    pub branches: usize,
    pub junctions: usize,
    pub end_points: usize,
    pub x_star: [f64; 3],
    pub d_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSkeletonInfo {
    pub path: usize,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    pub length: f64,
    pub junctions: Vec<JunctionParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalInfo {
    pub id: usize,
    pub subskeleton: usize,
    pub junction: usize,
    pub side: Side,
    pub t_c: f64,
    pub h_rho: f64,
    pub fallback: bool,
    pub cut_t: f64,
    pub center: [f64; 3],
    pub inquiry_points: usize,
    pub missed_rays: usize,
    /// Dropped as a duplicate of a nearby cut.
    pub merged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    #[serde(flatten)]
    pub info: ComponentInfo,
    pub voxels: usize,
}

/// Everything needed to explain, and rerun, one decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: u32,
    pub tool: String,
    pub input: InputInfo,
    pub config: RunConfig,
    pub skeleton: SkeletonSummary,
    pub partition: PartitionDoc,
    pub subskeletons: Vec<SubSkeletonInfo>,
    pub intervals: Vec<DecompositionInterval>,
    pub critical_points: Vec<CriticalInfo>,
    pub parts: Vec<u32>,
    pub intersections: Vec<u32>,
    pub unseparated: Vec<usize>,
    /// Parts labeled by distance because no sub-skeleton ran through them.
    pub labeled_by_distance: Vec<u32>,
    pub components: Vec<ComponentDoc>,
    pub cylinders: Vec<CylinderInfo>,
    pub overlap_voxels: usize,
}

impl Provenance {
    pub fn new(name: &str, vol: &BinaryVolume, config: &RunConfig, res: &DecompositionResult) -> Self {
        let config = config.for_provenance();
        let hist = res.labels.histogram();
        Provenance {
            version: PROVENANCE_VERSION,
            tool: format!("csd {}", env!("CARGO_PKG_VERSION")),
            input: InputInfo {
                name: name.to_string(),
                dims: vol.dims().to_array(),
                spacing: vol.spacing().to_array(),
                foreground: vol.count(),
            },
            skeleton: SkeletonSummary {
                branches: res.skeleton.branches.len(),
                junctions: res.skeleton.junctions().len(),
                end_points: res.skeleton.end_points().len(),
                x_star: res.skeleton.x_star.to_array(),
                d_star: res.skeleton.d_star,
            },
            partition: PartitionDoc::new(&res.partition, config.theta_c),
            config,
            subskeletons: res
                .subskeletons
                .iter()
                .map(|s| SubSkeletonInfo {
                    path: s.path,
                    edges: s.edges.clone(),
                    vertices: s.vertices.clone(),
                    length: s.length(),
                    junctions: s.junctions.clone(),
                })
                .collect(),
            intervals: res.intervals.clone(),
            critical_points: res
                .sweeps
                .iter()
                .enumerate()
                .map(|(id, s)| {
                    let c = &s.critical;
                    CriticalInfo {
                        id,
                        subskeleton: c.subskeleton,
                        junction: c.junction,
                        side: c.side,
                        t_c: c.t_c,
                        h_rho: c.h_rho,
                        fallback: c.fallback,
                        cut_t: c.cut_t,
                        center: c.cut.origin.to_array(),
                        inquiry_points: s.trace.len(),
                        missed_rays: s.missed_rays,
                        merged: res.merged_cuts.contains(&id),
                    }
                })
                .collect(),
            parts: res.cut.parts.clone(),
            intersections: res.cut.intersections.clone(),
            unseparated: res.cut.unseparated.clone(),
            labeled_by_distance: res.by_distance.clone(),
            components: res
                .components
                .iter()
                .map(|c| ComponentDoc {
                    info: c.clone(),
                    voxels: hist.get(c.label as usize).copied().unwrap_or(0),
                })
                .collect(),
            cylinders: res.cylinders.clone(),
            overlap_voxels: res.overlap_voxels,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub const TRACE_HEADER: &str = "t,h_rho,triggered";

pub fn write_trace_to(w: &mut dyn Write, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.t, r.h_rho, r.triggered as u8)?;
    }
    Ok(())
}

/// One CSV per interval.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_atomic(path, |w| write_trace_to(w, rows))
}

/// Trace file name of interval `k`.
pub fn trace_file_name(k: usize, iv: &DecompositionInterval) -> String {
    let side = match iv.side {
        Side::Plus => "plus",
        Side::Minus => "minus",
    };
    format!("interval_{k:03}_s{}_j{}_{side}.csv", iv.subskeleton, iv.junction)
}

/// Pretty JSON of a metric report.
pub fn metric_json(report: &MetricReport) -> String {
    serde_json::to_string_pretty(report).expect("metric reports always serialize")
}

pub fn write_metrics_json(path: &Path, report: &MetricReport) -> Result<()> {
    write_json(path, report)
}

pub fn write_metrics_csv(path: &Path, report: &MetricReport) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{}", MetricReport::CSV_HEADER)?;
        writeln!(w, "{}", report.csv_row())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use csd_core::skeleton::extract_skeleton;
    use csd_core::synth;

    #[test]
    fn skeleton_doc_round_trip() {
        let ras = synth::y_shape(4.0).rasterize().unwrap();
        let s = extract_skeleton(&ras.volume, None, 64).unwrap();
        let doc = SkeletonDoc::new(&s);
        let text = serde_json::to_string(&doc).unwrap();
        let back: SkeletonDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        let s2 = back.to_skeleton().unwrap();
        assert_eq!(s2.branches, s.branches);
        assert_eq!(s2.nodes, s.nodes);
        assert_eq!(SkeletonDoc::new(&s2), doc);
    }

    #[test]
    fn inconsistent_incidence_is_rejected() {
        let ras = synth::y_shape(4.0).rasterize().unwrap();
        let s = extract_skeleton(&ras.volume, None, 64).unwrap();
        let mut doc = SkeletonDoc::new(&s);
        doc.nodes[0].branches.push(99);
        assert!(doc.to_skeleton().is_err());
    }

    #[test]
    fn trace_csv_rows() {
        let rows = [
            TraceRow {
                t: 0.25,
                h_rho: 0.5,
                triggered: false,
            },
            TraceRow {
                t: 0.5,
                h_rho: 0.875,
                triggered: true,
            },
        ];
        let mut buf = Vec::new();
        write_trace_to(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,h_rho,triggered\n0.25,0.5,0\n0.5,0.875,1\n");
    }
}
