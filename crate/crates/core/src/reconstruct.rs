//! Cutting at critical points, semantic relabeling and reconstruction of
//! the discarded intersections with generalized cylinders.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result, Stage, StageExt};
use crate::frame::{normal_jump, rotation_minimizing, Frame};
use crate::geom::{distance_to_polygon, point_in_polygon, Vec2, Vec3};
use crate::math;
use crate::params::{AxisKind, DecomposeParams};
use crate::skeleton::{extract_skeleton_with, CurveSkeleton, SkeletonOptions};
use crate::skelgraph::{
    build_graph, partition_paths, paths_to_subskeletons, PathPartition, SkeletonGraph, SubSkeleton,
};
use crate::sweep::{
    decomposition_intervals, sweep_interval, Contour, CriticalPoint, DecompositionInterval, SweepOptions,
    SweepOutcome,
};
use crate::volume::{
    distance_field, label_mask, BinaryVolume, Connectivity, Grid, LabelVolume, ScalarField, Spacing,
};

/// Thickness of a naive digital plane with unit normal `n`: thin enough to
/// be one voxel, thick enough that no 6-path steps over it.
fn plane_thickness(n: Vec3, s: Spacing) -> f64 {
    (n.x.abs() * s.sx).max(n.y.abs() * s.sy).max(n.z.abs() * s.sz)
}

/// Inclusive voxel index box around world points, padded by `pad`.
fn voxel_box<G: Grid>(grid: &G, pts: &[Vec3], pad: f64) -> Option<([usize; 3], [usize; 3])> {
    let n = grid.dims().to_array();
    let s = grid.spacing().to_array();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for k in 0..3 {
        let (mn, mx) = pts
            .iter()
            .map(|p| p.to_array()[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let a = math::floor((mn - pad) / s[k]);
        let b = math::ceil((mx + pad) / s[k]);
        if b < 0.0 || a > (n[k] - 1) as f64 {
            return None;
        }
        lo[k] = a.max(0.0) as usize;
        hi[k] = (b as usize).min(n[k] - 1);
    }
    Some((lo, hi))
}

fn for_box(dims: crate::volume::Dims, lo: [usize; 3], hi: [usize; 3], mut f: impl FnMut(usize)) {
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                f(dims.index(x, y, z));
            }
        }
    }
}

/// Foreground voxels of the digital plane through a cut contour, limited
/// to the contour grown by one voxel.
pub fn cut_disc(vol: &BinaryVolume, cut: &Contour) -> Vec<usize> {
    let h = vol.spacing().min();
    let f = cut.frame;
    let w = plane_thickness(f.tangent, vol.spacing());
    let Some((lo, hi)) = voxel_box(vol, &cut.world_points(), h + w) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for_box(vol.dims(), lo, hi, |i| {
        if !vol.get(i) {
            return;
        }
        let p = vol.world(i) - cut.origin;
        let d = p.dot(f.tangent);
        if d < -0.5 * w || d >= 0.5 * w {
            return;
        }
        let q = Vec2::new(p.dot(f.normal), p.dot(f.binormal));
        if point_in_polygon(q, &cut.points) || distance_to_polygon(q, &cut.points) <= h {
            out.push(i);
        }
    });
    out
}

/// The object minus all cut discs, split into 6-connected pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    /// Piece labels `1..=K`; cut discs and background are 0.
    pub pieces: LabelVolume,
    pub parts: Vec<u32>,
    /// Pieces containing a junction.
    pub intersections: Vec<u32>,
    /// Cuts whose two sides stayed in one piece.
    pub unseparated: Vec<usize>,
}

impl CutResult {
    pub fn is_part(&self, label: u32) -> bool {
        label != 0 && self.parts.binary_search(&label).is_ok()
    }
}

/// Removes the discs and labels what is left.
pub fn cut_object(vol: &BinaryVolume, discs: &[Vec<usize>], cuts: &[Contour], junctions: &[Vec3]) -> Result<CutResult> {
    let mut mask = vol.data().to_vec();
    for d in discs {
        for &i in d {
            mask[i] = false;
        }
    }
    let (labels, count) = label_mask(vol.dims(), &mask, Connectivity::Six);
    let pieces = LabelVolume::new(vol.dims(), vol.spacing(), labels)?;
    let mut intersections: Vec<u32> = junctions
        .iter()
        .filter_map(|&p| pieces.nearest_voxel(p))
        .map(|i| pieces.get(i))
        .filter(|&l| l != 0)
        .collect();
    intersections.sort_unstable();
    intersections.dedup();
    let parts = (1..=count).filter(|l| intersections.binary_search(l).is_err()).collect();
    let h = vol.spacing().min();
    let unseparated = cuts
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let off = c.frame.tangent * (plane_thickness(c.frame.tangent, vol.spacing()) + h);
            let side = |p: Vec3| pieces.nearest_voxel(p).map(|i| pieces.get(i)).unwrap_or(0);
            let (a, b) = (side(c.origin - off), side(c.origin + off));
            a != 0 && a == b
        })
        .map(|(k, _)| k)
        .collect();
    Ok(CutResult {
        pieces,
        parts,
        intersections,
        unseparated,
    })
}

/// Parts relabeled by owning sub-skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticLabels {
    /// Sub-skeleton index + 1 on part voxels; 0 elsewhere.
    pub labels: LabelVolume,
    /// Owning sub-skeleton per piece label (`None` for intersections).
    pub owner: Vec<Option<usize>>,
    /// Parts no sub-skeleton passes through, assigned to the nearest one.
    pub by_distance: Vec<u32>,
}

/// Gives each part the label of the sub-skeleton with the most arc length
/// inside it.
pub fn label_semantic(cut: &CutResult, subskels: &[SubSkeleton]) -> SemanticLabels {
    let pieces = &cut.pieces;
    let k = pieces.max_label() as usize;
    let m = subskels.len();
    let h = pieces.spacing().min();
    let mut acc = vec![vec![0.0; m]; k + 1];
    for (si, psi) in subskels.iter().enumerate() {
        let pts = psi.polyline.points();
        for w in pts.windows(2) {
            let len = w[0].dist(w[1]);
            let n = (math::ceil(len / (0.25 * h)) as usize).max(1);
            for j in 0..n {
                let mid = w[0].lerp(w[1], (j as f64 + 0.5) / n as f64);
                if let Some(v) = pieces.nearest_voxel(mid) {
                    let l = pieces.get(v);
                    if cut.is_part(l) {
                        acc[l as usize][si] += len / n as f64;
                    }
                }
            }
        }
    }
    let mut owner = vec![None; k + 1];
    let mut orphans = Vec::new();
    for &l in &cut.parts {
        let row = &acc[l as usize];
        let mut best: Option<usize> = None;
        for si in 0..m {
            if row[si] > 0.0 && best.is_none_or(|b| row[si] > row[b]) {
                best = Some(si);
            }
        }
        match best {
            Some(b) => owner[l as usize] = Some(b),
            None => orphans.push(l),
        }
    }
    if !orphans.is_empty() && m > 0 {
        let mut voxels: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
        for (i, &l) in pieces.data().iter().enumerate() {
            if orphans.binary_search(&l).is_ok() {
                voxels[l as usize].push(i);
            }
        }
        for &l in &orphans {
            let mut best = (f64::INFINITY, 0usize);
            for (si, psi) in subskels.iter().enumerate() {
                for &p in psi.polyline.points() {
                    for &v in &voxels[l as usize] {
                        let d = pieces.world(v).dist(p);
                        if d < best.0 {
                            best = (d, si);
                        }
                    }
                }
            }
            owner[l as usize] = Some(best.1);
        }
    }
    let data = pieces
        .data()
        .iter()
        .map(|&l| owner[l as usize].map_or(0, |s| s as u32 + 1))
        .collect();
    SemanticLabels {
        labels: LabelVolume::new(pieces.dims(), pieces.spacing(), data).expect("same grid"),
        owner,
        by_distance: orphans,
    }
}

/// Index correspondence found by [`best_alignment`]: point `i` of the first
/// contour pairs with point `(shift ± i) mod n` of the second (minus when
/// `reversed`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub shift: usize,
    pub reversed: bool,
    /// Sum of squared distances.
    pub residual: f64,
}

impl Alignment {
    pub fn index(&self, i: usize, n: usize) -> usize {
        if self.reversed {
            (self.shift + n - i % n) % n
        } else {
            (self.shift + i) % n
        }
    }

    pub fn apply<T: Copy>(&self, pts: &[T]) -> Vec<T> {
        let n = pts.len();
        (0..n).map(|i| pts[self.index(i, n)]).collect()
    }
}

/// Exhaustive search over cyclic shifts and both orientations; the first
/// minimum (by shift, forward before reversed) wins.
pub fn best_alignment(c1: &[Vec2], c2: &[Vec2]) -> Alignment {
    let n = c1.len();
    let mut best = Alignment {
        shift: 0,
        reversed: false,
        residual: f64::INFINITY,
    };
    for reversed in [false, true] {
        for shift in 0..n {
            let a = Alignment {
                shift,
                reversed,
                residual: 0.0,
            };
            let mut r = 0.0;
            for (i, p) in c1.iter().enumerate() {
                r += p.dist_sq(c2[a.index(i, n)]);
                if r >= best.residual {
                    break;
                }
            }
            if r < best.residual {
                best = Alignment { residual: r, ..a };
            }
        }
    }
    best
}

/// `c2` re-indexed to match `c1` point for point.
pub fn align_contours(c1: &Contour, c2: &Contour) -> Result<(Contour, Contour)> {
    if c1.len() != c2.len() {
        return Err(Error::ContourLength(c1.len(), c2.len()));
    }
    let a = best_alignment(&c1.points, &c2.points);
    Ok((
        c1.clone(),
        Contour {
            points: a.apply(&c2.points),
            ..c2.clone()
        },
    ))
}

/// `(1 - u) c1 + u c2`, exactly `c1` at 0 and `c2` at 1.
pub fn linear_homotopy(c1: &Contour, c2: &Contour, u: f64) -> Result<Contour> {
    if c1.len() != c2.len() {
        return Err(Error::ContourLength(c1.len(), c2.len()));
    }
    if u == 0.0 {
        return Ok(c1.clone());
    }
    if u == 1.0 {
        return Ok(c2.clone());
    }
    let points = c1.points.iter().zip(&c2.points).map(|(a, b)| a.lerp(*b, u)).collect();
    Ok(Contour {
        points,
        origin: c1.origin.lerp(c2.origin, u),
        frame: if u < 0.5 { c1.frame } else { c2.frame },
    })
}

/// Axis `ζ(u)` of a generalized cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisCurve {
    pub kind: AxisKind,
    pub p1: Vec3,
    pub p2: Vec3,
    m1: Vec3,
    m2: Vec3,
    offset: Vec3,
}

/// Sine offset amplitude as a fraction of the chord.
const SINE_AMPLITUDE: f64 = 0.1;

pub fn axis_curve(p1: Vec3, tan1: Vec3, p2: Vec3, tan2: Vec3, kind: AxisKind) -> Result<AxisCurve> {
    let chord = p2 - p1;
    let len = chord.norm();
    if len < 1e-12 {
        return Err(Error::DegenerateAxis);
    }
    let t1 = tan1.try_normalize(1e-12).unwrap_or(chord / len);
    let t2 = tan2.try_normalize(1e-12).unwrap_or(chord / len);
    if kind == AxisKind::Spline && len < 1.0 && t1.dot(t2) < -1.0 + 1e-9 {
        return Err(Error::DegenerateAxis);
    }
    let dir = chord / len;
    let side = (t1 - dir * t1.dot(dir)).try_normalize(1e-6).unwrap_or_else(|| dir.any_orthogonal());
    Ok(AxisCurve {
        kind,
        p1,
        p2,
        m1: t1 * len,
        m2: t2 * len,
        offset: side * (SINE_AMPLITUDE * len),
    })
}

impl AxisCurve {
    pub fn at(&self, u: f64) -> Vec3 {
        let chord = self.p2 - self.p1;
        match self.kind {
            AxisKind::Linear => self.p1 + chord * u,
            AxisKind::Spline => {
                let (u2, u3) = (u * u, u * u * u);
                self.p1 * (2.0 * u3 - 3.0 * u2 + 1.0)
                    + self.m1 * (u3 - 2.0 * u2 + u)
                    + self.p2 * (-2.0 * u3 + 3.0 * u2)
                    + self.m2 * (u3 - u2)
            }
            AxisKind::Sine => {
                let s = math::sin(core::f64::consts::PI * u);
                self.p1 + chord * u + self.offset * (s * s)
            }
        }
    }

    pub fn derivative(&self, u: f64) -> Vec3 {
        let chord = self.p2 - self.p1;
        match self.kind {
            AxisKind::Linear => chord,
            AxisKind::Spline => {
                let u2 = u * u;
                self.p1 * (6.0 * u2 - 6.0 * u)
                    + self.m1 * (3.0 * u2 - 4.0 * u + 1.0)
                    + self.p2 * (-6.0 * u2 + 6.0 * u)
                    + self.m2 * (3.0 * u2 - 2.0 * u)
            }
            AxisKind::Sine => {
                let pi = core::f64::consts::PI;
                chord + self.offset * (pi * math::sin(2.0 * pi * u))
            }
        }
    }

    /// Arc length from a dense polyline.
    pub fn length(&self) -> f64 {
        let n = 256;
        (0..n)
            .map(|k| self.at(k as f64 / n as f64).dist(self.at((k + 1) as f64 / n as f64)))
            .sum()
    }
}

/// Largest angle between consecutive transported frames.
pub const MAX_FRAME_JUMP_DEG: f64 = 45.0;

/// Swept solid between two contours.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedCylinder {
    pub axis: AxisCurve,
    /// Sample parameters, `0` to `1`.
    pub u: Vec<f64>,
    pub centers: Vec<Vec3>,
    pub frames: Vec<Frame>,
    /// Aligned local `(normal, binormal, tangent)` coordinates of the end
    /// contours in the first and last frame.
    start: Vec<[f64; 3]>,
    end: Vec<[f64; 3]>,
    /// Voxels inside any slice, ascending.
    pub voxels: Vec<usize>,
}

impl GeneralizedCylinder {
    fn local(&self, k: usize) -> Vec<[f64; 3]> {
        let last = self.u.len() - 1;
        if k == 0 {
            return self.start.clone();
        }
        if k == last {
            return self.end.clone();
        }
        let u = self.u[k];
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| [0, 1, 2].map(|j| (1.0 - u) * a[j] + u * b[j]))
            .collect()
    }

    /// World points of slice `k`.
    pub fn slice(&self, k: usize) -> Vec<Vec3> {
        let (c, f) = (self.centers[k], self.frames[k]);
        self.local(k)
            .iter()
            .map(|x| c + f.normal * x[0] + f.binormal * x[1] + f.tangent * x[2])
            .collect()
    }

    /// In-plane coordinates of slice `k`.
    pub fn slice_2d(&self, k: usize) -> Vec<Vec2> {
        self.local(k).iter().map(|x| Vec2::new(x[0], x[1])).collect()
    }
}

/// Sweeps the linear homotopy from `c1` to `c2` along `axis` in
/// rotation-minimizing frames, sampled at most `du` apart, and voxelizes
/// every slice as a filled polygon in a one-voxel digital plane.
pub fn generalized_cylinder<G: Grid>(
    grid: &G,
    c1: &Contour,
    c2: &Contour,
    axis: &AxisCurve,
    du: f64,
) -> Result<GeneralizedCylinder> {
    if c1.len() != c2.len() {
        return Err(Error::ContourLength(c1.len(), c2.len()));
    }
    if !(du > 0.0) {
        return Err(Error::InvalidParameter { name: "du", value: du });
    }
    let n = (math::ceil(axis.length() / du) as usize).max(1);
    let u: Vec<f64> = (0..=n).map(|k| if k == n { 1.0 } else { k as f64 / n as f64 }).collect();
    let centers: Vec<Vec3> = u.iter().map(|&x| axis.at(x)).collect();
    let chord = (axis.p2 - axis.p1).normalize();
    let tangents: Vec<Vec3> = u
        .iter()
        .map(|&x| axis.derivative(x).try_normalize(1e-12).unwrap_or(chord))
        .collect();
    let frames = rotation_minimizing(&centers, &tangents, c1.frame.normal);
    for w in frames.windows(2) {
        let deg = normal_jump(&w[0], &w[1]).to_degrees();
        if deg > MAX_FRAME_JUMP_DEG {
            return Err(Error::FrameDiscontinuity { degrees: deg });
        }
    }
    let to_local = |pts: Vec<Vec3>, c: Vec3, f: &Frame| -> Vec<[f64; 3]> {
        pts.into_iter()
            .map(|p| {
                let d = p - c;
                [d.dot(f.normal), d.dot(f.binormal), d.dot(f.tangent)]
            })
            .collect()
    };
    let start = to_local(c1.world_points(), centers[0], &frames[0]);
    let end_raw = to_local(c2.world_points(), centers[n], &frames[n]);
    let flat = |v: &[[f64; 3]]| v.iter().map(|x| Vec2::new(x[0], x[1])).collect::<Vec<_>>();
    let end = best_alignment(&flat(&start), &flat(&end_raw)).apply(&end_raw);
    let mut gc = GeneralizedCylinder {
        axis: *axis,
        u,
        centers,
        frames,
        start,
        end,
        voxels: Vec::new(),
    };
    let mut voxels = Vec::new();
    for k in 0..gc.u.len() {
        let (c, f) = (gc.centers[k], gc.frames[k]);
        let poly = gc.slice_2d(k);
        let w = plane_thickness(f.tangent, grid.spacing());
        let world: Vec<Vec3> = poly.iter().map(|p| f.to_world(c, p.x, p.y)).collect();
        let Some((lo, hi)) = voxel_box(grid, &world, w) else { continue };
        for_box(grid.dims(), lo, hi, |i| {
            let p = grid.world(i) - c;
            let d = p.dot(f.tangent);
            if d < -0.5 * w || d >= 0.5 * w {
                return;
            }
            if point_in_polygon(Vec2::new(p.dot(f.normal), p.dot(f.binormal)), &poly) {
                voxels.push(i);
            }
        });
    }
    voxels.sort_unstable();
    voxels.dedup();
    gc.voxels = voxels;
    Ok(gc)
}

/// Everything computed before the sweeps.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dfield: ScalarField,
    pub skeleton: CurveSkeleton,
    pub graph: SkeletonGraph,
    pub partition: PathPartition,
    pub subskeletons: Vec<SubSkeleton>,
    /// In sub-skeleton order, then junction order, plus side first.
    pub intervals: Vec<DecompositionInterval>,
}

/// Distance field, skeleton, partition and sweep intervals.
pub fn prepare(vol: &BinaryVolume, params: &DecomposeParams) -> Result<Prepared> {
    params.validate()?;
    let dfield = distance_field(vol).stage(Stage::Distance)?;
    let skeleton = extract_skeleton_with(
        vol,
        &dfield,
        &SkeletonOptions {
            min_branch_length: params.min_branch_length,
            max_branches: params.max_branches,
            step: params.step,
        },
    )
    .stage(Stage::Skeleton)?;
    let graph = build_graph(&skeleton).stage(Stage::Graph)?;
    let partition = partition_paths(&graph, params.theta_c);
    let subskeletons =
        paths_to_subskeletons(&partition, &graph, &skeleton, vol.spacing().min()).stage(Stage::Partition)?;
    let mut intervals = Vec::new();
    for (i, psi) in subskeletons.iter().enumerate() {
        intervals.extend(
            decomposition_intervals(psi, i, &dfield, params.alpha_s, params.alpha_e).stage(Stage::Intervals)?,
        );
    }
    Ok(Prepared {
        dfield,
        skeleton,
        graph,
        partition,
        subskeletons,
        intervals,
    })
}

pub fn sweep_options(params: &DecomposeParams) -> SweepOptions {
    SweepOptions {
        theta_h: params.theta_h,
        sf: params.sf,
        metric: params.metric,
        contour_radius: params.contour_radius,
        n_samples: params.n_samples,
    }
}

/// Runs the sweep of interval `k`.
pub fn sweep_one(vol: &BinaryVolume, prep: &Prepared, k: usize, params: &DecomposeParams) -> Result<SweepOutcome> {
    let iv = &prep.intervals[k];
    sweep_interval(vol, &prep.subskeletons[iv.subskeleton], iv, &sweep_options(params)).stage(Stage::Sweep)
}

/// All sweeps, in interval order.
pub fn run_sweeps(vol: &BinaryVolume, prep: &Prepared, params: &DecomposeParams) -> Result<Vec<SweepOutcome>> {
    (0..prep.intervals.len()).map(|k| sweep_one(vol, prep, k, params)).collect()
}

/// A reconstructing cylinder in the result.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CylinderInfo {
    pub subskeleton: usize,
    /// Indices of the bracketing critical points.
    pub from: usize,
    pub to: usize,
    pub t0: f64,
    pub t1: f64,
    pub axis: AxisKind,
    /// Voxels inside the swept solid.
    pub voxels: usize,
    /// Voxels it labeled.
    pub claimed: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentInfo {
    pub label: u32,
    pub subskeleton: usize,
    /// Piece labels of its parts.
    pub parts: Vec<u32>,
    /// Indices into [`DecompositionResult::cylinders`].
    pub cylinders: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// Semantic components `1..=m` over the input foreground.
    pub labels: LabelVolume,
    pub skeleton: CurveSkeleton,
    pub graph: SkeletonGraph,
    pub partition: PathPartition,
    pub subskeletons: Vec<SubSkeleton>,
    pub intervals: Vec<DecompositionInterval>,
    /// One per interval.
    pub sweeps: Vec<SweepOutcome>,
    pub cut: CutResult,
    /// Critical points dropped as duplicates of a nearby cut.
    pub merged_cuts: Vec<usize>,
    pub by_distance: Vec<u32>,
    pub cylinders: Vec<CylinderInfo>,
    pub components: Vec<ComponentInfo>,
    /// Voxels claimed by cylinders of different components.
    pub overlap_voxels: usize,
}

impl DecompositionResult {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn part_count(&self) -> usize {
        self.cut.parts.len()
    }

    pub fn intersection_count(&self) -> usize {
        self.cut.intersections.len()
    }

    pub fn critical_points(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.sweeps.iter().map(|s| &s.critical)
    }
}

fn inner_radius(c: &Contour) -> f64 {
    c.points.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min)
}

/// Cut, relabel and reconstruct from finished sweeps.
pub fn assemble(
    vol: &BinaryVolume,
    prep: Prepared,
    sweeps: Vec<SweepOutcome>,
    params: &DecomposeParams,
) -> Result<DecompositionResult> {
    if sweeps.len() != prep.intervals.len() {
        return Err(Error::Other(alloc::format!(
            "{} sweeps for {} intervals",
            sweeps.len(),
            prep.intervals.len()
        )));
    }
    // Cuts on one sub-skeleton closer than their radius, with no junction
    // between them, would only slice off a thin slab; keep the first.
    let mut merged = Vec::new();
    let mut order: Vec<Vec<usize>> = vec![Vec::new(); prep.subskeletons.len()];
    for (si, psi) in prep.subskeletons.iter().enumerate() {
        let mut own: Vec<usize> = (0..sweeps.len())
            .filter(|&k| sweeps[k].critical.subskeleton == si)
            .collect();
        own.sort_by(|&a, &b| sweeps[a].critical.cut_t.total_cmp(&sweeps[b].critical.cut_t).then(a.cmp(&b)));
        let mut kept: Vec<usize> = Vec::new();
        for k in own {
            if let Some(&prev) = kept.last() {
                let (a, b) = (&sweeps[prev].critical, &sweeps[k].critical);
                let gap = (b.cut_t - a.cut_t) * psi.length();
                let between = psi.junctions.iter().any(|j| a.cut_t < j.t && j.t < b.cut_t);
                if !between && gap < inner_radius(&a.cut).min(inner_radius(&b.cut)) {
                    let drop = prev.max(k);
                    *kept.last_mut().unwrap() = prev.min(k);
                    merged.push(drop);
                    continue;
                }
            }
            kept.push(k);
        }
        order[si] = kept;
    }
    merged.sort_unstable();
    let active: Vec<usize> = (0..sweeps.len()).filter(|k| merged.binary_search(k).is_err()).collect();
    let cuts: Vec<Contour> = active.iter().map(|&k| sweeps[k].critical.cut.clone()).collect();
    let discs: Vec<Vec<usize>> = cuts.iter().map(|c| cut_disc(vol, c)).collect();
    let junctions: Vec<Vec3> = (0..prep.graph.vertex_count())
        .filter(|&v| prep.graph.degree(v) >= 3)
        .map(|v| prep.graph.positions[v])
        .collect();
    let mut cut = cut_object(vol, &discs, &cuts, &junctions).stage(Stage::Cut)?;
    for u in cut.unseparated.iter_mut() {
        *u = active[*u];
    }
    let semantic = label_semantic(&cut, &prep.subskeletons);
    let mut labels = semantic.labels.data().to_vec();

    // Cylinders between consecutive cuts that bracket a junction. Where
    // cylinders of two components overlap the voxel goes to the nearer
    // axis, the smaller label on ties.
    let h = vol.spacing().min();
    let mut cylinders = Vec::new();
    let mut claims: Vec<(f64, u32)> = vec![(f64::INFINITY, 0); labels.len()];
    let mut overlap = vec![false; labels.len()];
    let mut gc_voxels = Vec::new();
    for (si, psi) in prep.subskeletons.iter().enumerate() {
        let label = si as u32 + 1;
        for w in order[si].windows(2) {
            let (a, b) = (&sweeps[w[0]].critical, &sweeps[w[1]].critical);
            if !psi.junctions.iter().any(|j| a.cut_t < j.t && j.t < b.cut_t) {
                continue;
            }
            let axis = axis_curve(
                a.cut.origin,
                a.cut.frame.tangent,
                b.cut.origin,
                b.cut.frame.tangent,
                params.axis,
            )
            .stage(Stage::Reconstruct)?;
            let gc = generalized_cylinder(vol, &a.cut, &b.cut, &axis, 0.5 * h).stage(Stage::Reconstruct)?;
            let mut mine = Vec::new();
            for &v in &gc.voxels {
                if !vol.get(v) || labels[v] != 0 {
                    continue;
                }
                let p = vol.world(v);
                let d = gc.centers.iter().map(|c| c.dist(p)).fold(f64::INFINITY, f64::min);
                let cur = claims[v];
                if cur.1 != 0 && cur.1 != label {
                    overlap[v] = true;
                }
                if d < cur.0 || (d == cur.0 && label < cur.1) {
                    claims[v] = (d, label);
                }
                mine.push(v);
            }
            cylinders.push(CylinderInfo {
                subskeleton: si,
                from: w[0],
                to: w[1],
                t0: a.cut_t,
                t1: b.cut_t,
                axis: params.axis,
                voxels: gc.voxels.len(),
                claimed: 0,
            });
            gc_voxels.push(mine);
        }
    }
    for (c, mine) in cylinders.iter_mut().zip(&gc_voxels) {
        let l = c.subskeleton as u32 + 1;
        c.claimed = mine.iter().filter(|&&v| claims[v].1 == l).count();
    }
    for (v, &(_, l)) in claims.iter().enumerate() {
        if l != 0 {
            labels[v] = l;
        }
    }
    let overlap_voxels = overlap.iter().filter(|&&o| o).count();

    // Whatever foreground is left takes the label of the nearest labeled
    // voxel (breadth-first, raster-ordered seeds).
    let dims = vol.dims();
    let mut queue: VecDeque<usize> = (0..labels.len()).filter(|&i| labels[i] != 0).collect();
    while let Some(i) = queue.pop_front() {
        for j in dims.neighbors6(i) {
            if vol.get(j) && labels[j] == 0 {
                labels[j] = labels[i];
                queue.push_back(j);
            }
        }
    }
    if vol.data().iter().zip(&labels).any(|(&f, &l)| f && l == 0) {
        return Err(Error::Other("foreground left unlabeled".into()).at(Stage::Reconstruct));
    }

    // Compact in sub-skeleton order.
    let m = prep.subskeletons.len();
    let mut used = vec![false; m + 1];
    for &l in &labels {
        used[l as usize] = true;
    }
    let mut map = vec![0u32; m + 1];
    let mut next = 0;
    for l in 1..=m {
        if used[l] {
            next += 1;
            map[l] = next;
        }
    }
    for l in labels.iter_mut() {
        *l = map[*l as usize];
    }
    let mut components = Vec::new();
    for si in 0..m {
        let label = map[si + 1];
        if label == 0 {
            continue;
        }
        let parts = cut
            .parts
            .iter()
            .copied()
            .filter(|&p| semantic.owner[p as usize] == Some(si))
            .collect();
        let cyl = (0..cylinders.len()).filter(|&c| cylinders[c].subskeleton == si).collect();
        components.push(ComponentInfo {
            label,
            subskeleton: si,
            parts,
            cylinders: cyl,
        });
    }
    Ok(DecompositionResult {
        labels: LabelVolume::new(dims, vol.spacing(), labels)?,
        skeleton: prep.skeleton,
        graph: prep.graph,
        partition: prep.partition,
        subskeletons: prep.subskeletons,
        intervals: prep.intervals,
        sweeps,
        cut,
        merged_cuts: merged,
        by_distance: semantic.by_distance,
        cylinders,
        components,
        overlap_voxels,
    })
}

/// The whole pipeline on one connected object.
pub fn decompose(vol: &BinaryVolume, params: &DecomposeParams) -> Result<DecompositionResult> {
    let prep = prepare(vol, params)?;
    let sweeps = run_sweeps(vol, &prep, params)?;
    assemble(vol, prep, sweeps, params)
}
