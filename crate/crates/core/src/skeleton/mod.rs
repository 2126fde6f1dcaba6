//! Sub-voxel curve skeletons.
//!
//! The distance field `D` gives a centeredness cost `F = 1 - (D / D*)^2`
//! that vanishes at the deepest voxel `x*`. Branches are added one at a
//! time: the voxel geodesically furthest from the current skeleton is
//! traced back down the arrival time of a fast-marching front started from
//! the skeleton with slowness `F`, and the trace joins the skeleton where it
//! lands.

mod fmm;
mod polyline;
mod trace;

use alloc::vec;
use alloc::vec::Vec;

pub use polyline::{Polyline, Projection};
pub use trace::backtrack;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::volume::{
    connected_components, distance_field, BinaryVolume, Connectivity, Grid, ScalarField,
};

/// Floor on the marching slowness so the front crosses `F = 0`.
pub const MIN_SLOWNESS: f64 = 1e-6;

/// Centeredness cost with its anchor.
#[derive(Debug, Clone)]
pub struct CostField {
    /// `F` per voxel; 1 on the background.
    pub cost: ScalarField,
    /// Foreground mask; the front never enters other voxels.
    pub passable: Vec<bool>,
    /// Deepest voxel, lowest raster index on ties.
    pub x_star: usize,
    /// `D(x*)`.
    pub d_star: f64,
}

/// `F = 1 - (D / D(x*))^2` over the foreground.
pub fn speed_cost(dfield: &ScalarField) -> Result<CostField> {
    let (x_star, d_star) = dfield
        .argmax()
        .filter(|&(_, d)| d > 0.0)
        .ok_or(Error::EmptyForeground)?;
    let passable: Vec<bool> = dfield.data().iter().map(|&d| d > 0.0).collect();
    let data = dfield
        .data()
        .iter()
        .map(|&d| {
            if d > 0.0 {
                let r = d / d_star;
                1.0 - r * r
            } else {
                1.0
            }
        })
        .collect();
    Ok(CostField {
        cost: ScalarField::new(dfield.dims(), dfield.spacing(), data)?,
        passable,
        x_star,
        d_star,
    })
}

/// Fast-marching arrival time with `|∇U| = max(F, MIN_SLOWNESS)` from the
/// seed voxels; unreachable voxels are `INFINITY`.
pub fn solve_eikonal(cost: &CostField, seeds: &[usize]) -> Result<ScalarField> {
    if seeds.is_empty() {
        return Err(Error::Other("no seeds".into()));
    }
    if let Some(&s) = seeds.iter().find(|&&s| !cost.passable[s]) {
        return Err(Error::SeedOffForeground(s));
    }
    let f = cost.cost.data();
    let u = fmm::march(
        cost.cost.dims(),
        cost.cost.spacing(),
        &cost.passable,
        |i| f[i].max(MIN_SLOWNESS),
        seeds,
    );
    ScalarField::new(cost.cost.dims(), cost.cost.spacing(), u)
}

/// Geodesic (uniform-speed) distance inside the foreground from the seeds.
pub fn geodesic_distance(cost: &CostField, seeds: &[usize]) -> Result<ScalarField> {
    if let Some(&s) = seeds.iter().find(|&&s| !cost.passable[s]) {
        return Err(Error::SeedOffForeground(s));
    }
    let u = fmm::march(
        cost.cost.dims(),
        cost.cost.spacing(),
        &cost.passable,
        |_| 1.0,
        seeds,
    );
    ScalarField::new(cost.cost.dims(), cost.cost.spacing(), u)
}

/// Point type by incidence degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NodeKind {
    End,
    /// Degree two; only present in hand-built skeletons.
    Joint,
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub position: Vec3,
    /// Incident branch ids, ascending.
    pub branches: Vec<usize>,
}

impl Node {
    pub fn degree(&self) -> usize {
        self.branches.len()
    }

    pub fn kind(&self) -> NodeKind {
        match self.degree() {
            0 | 1 => NodeKind::End,
            2 => NodeKind::Joint,
            _ => NodeKind::Junction,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub polyline: Polyline,
    /// Nodes at the first and last polyline point.
    pub nodes: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSkeleton {
    pub branches: Vec<Branch>,
    pub nodes: Vec<Node>,
    /// Raw back-tracked traces in extraction order, before trimming and
    /// splitting.
    pub traces: Vec<Polyline>,
    pub x_star: Vec3,
    pub d_star: f64,
}

impl CurveSkeleton {
    /// Builds a skeleton from branches and node positions, deriving the
    /// incidence lists.
    pub fn from_parts(branches: Vec<Branch>, positions: Vec<Vec3>) -> Result<Self> {
        let mut nodes: Vec<Node> = positions
            .into_iter()
            .map(|position| Node {
                position,
                branches: Vec::new(),
            })
            .collect();
        for (b, br) in branches.iter().enumerate() {
            if br.polyline.len() < 2 {
                return Err(Error::Other(alloc::format!("branch {b} has fewer than two points")));
            }
            for &n in &br.nodes {
                let node = nodes
                    .get_mut(n)
                    .ok_or_else(|| Error::Other(alloc::format!("branch {b} references missing node {n}")))?;
                node.branches.push(b);
            }
        }
        let (x_star, d_star) = (nodes.first().map(|n| n.position).unwrap_or_default(), 0.0);
        Ok(CurveSkeleton {
            branches,
            nodes,
            traces: Vec::new(),
            x_star,
            d_star,
        })
    }

    pub fn junctions(&self) -> Vec<usize> {
        classify_points(self).0
    }

    pub fn end_points(&self) -> Vec<usize> {
        classify_points(self).1
    }

    /// All polyline points of all branches.
    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.branches.iter().flat_map(|b| b.polyline.points().iter().copied())
    }

    /// Nearest point on any branch, lowest branch id on ties.
    pub fn project(&self, p: Vec3) -> Option<(usize, Projection)> {
        let mut best: Option<(usize, Projection)> = None;
        for (b, br) in self.branches.iter().enumerate() {
            let pr = br.polyline.project(p);
            if best.is_none_or(|(_, q)| pr.distance < q.distance) {
                best = Some((b, pr));
            }
        }
        best
    }
}

/// Junction node ids (degree ≥ 3) and end-point ids (degree 1).
pub fn classify_points(skel: &CurveSkeleton) -> (Vec<usize>, Vec<usize>) {
    let mut j = Vec::new();
    let mut o = Vec::new();
    for (i, n) in skel.nodes.iter().enumerate() {
        match n.kind() {
            NodeKind::Junction => j.push(i),
            NodeKind::End => o.push(i),
            NodeKind::Joint => {}
        }
    }
    (j, o)
}

/// Extraction controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonOptions {
    /// Traces shorter than this end the extraction; `None` = `2 D(x*)`.
    pub min_branch_length: Option<f64>,
    /// Maximum number of traces.
    pub max_branches: usize,
    /// Euler step in voxels.
    pub step: f64,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        Self {
            min_branch_length: None,
            max_branches: 64,
            step: 0.25,
        }
    }
}

/// Skeleton of a single connected object.
pub fn extract_skeleton(
    vol: &BinaryVolume,
    min_branch_length: Option<f64>,
    max_branches: usize,
) -> Result<CurveSkeleton> {
    let dfield = distance_field(vol)?;
    extract_skeleton_with(
        vol,
        &dfield,
        &SkeletonOptions {
            min_branch_length,
            max_branches,
            ..SkeletonOptions::default()
        },
    )
}

/// As [`extract_skeleton`], reusing a precomputed distance field.
pub fn extract_skeleton_with(
    vol: &BinaryVolume,
    dfield: &ScalarField,
    opts: &SkeletonOptions,
) -> Result<CurveSkeleton> {
    if opts.max_branches == 0 {
        return Err(Error::InvalidParameter {
            name: "max_branches",
            value: 0.0,
        });
    }
    let comps = connected_components(vol, Connectivity::Six).max_label() as usize;
    match comps {
        0 => return Err(Error::EmptyForeground),
        1 => {}
        n => return Err(Error::DisconnectedForeground(n)),
    }
    let cost = speed_cost(dfield)?;
    let h = vol.spacing().min();
    let min_len = opts.min_branch_length.unwrap_or(2.0 * cost.d_star);
    let x_star = vol.world(cost.x_star);
    let mut work = Work::new(h);
    let mut traces = Vec::new();
    let mut seeds = vec![cost.x_star];
    loop {
        let geo = geodesic_distance(&cost, &seeds)?;
        let Some((x_s, _)) = geo.argmax() else { break };
        let u = solve_eikonal(&cost, &seeds)?;
        let (mut pts, seed) = trace::descend(&u, vol.world(x_s), opts.step)?;
        let landing = if traces.is_empty() {
            None
        } else {
            work.project(pts.last().copied().unwrap_or(vol.world(seed)))
        };
        let end = match landing {
            Some((_, pr)) => pr.point,
            None => vol.world(seed),
        };
        pts.push(end);
        let raw = Polyline::new(pts);
        if !traces.is_empty() && raw.length() < min_len {
            break;
        }
        traces.push(raw.clone());
        let trimmed = trim_free_end(&raw, dfield, h);
        match landing {
            None => work.first(trimmed),
            Some((b, pr)) => work.attach(trimmed, b, pr),
        }
        if traces.len() >= opts.max_branches {
            break;
        }
        seeds = work.seed_voxels(vol);
    }
    work.tidy(dfield, min_len, x_star);
    let mut skel = work.finish()?;
    skel.traces = traces;
    skel.x_star = x_star;
    skel.d_star = cost.d_star;
    Ok(skel)
}

/// Drops leading points whose inscribed ball lies (up to 0.75 voxel) inside
/// the clearly larger ball of a later point: the start of a trace climbs
/// from the surface through the end cap, which is not medial. The margin
/// keeps plateaus of equal depth from being eaten one step at a time.
fn trim_free_end(line: &Polyline, dfield: &ScalarField, h: f64) -> Polyline {
    let pts = line.points();
    let d: Vec<f64> = pts.iter().map(|&p| dfield.sample(p).unwrap_or(0.0)).collect();
    let (tol, margin) = (0.75 * h, 0.3 * h);
    let mut k = 0;
    while k + 2 < pts.len() {
        let contained = (k + 1..pts.len()).any(|j| {
            d[j] >= d[k] + margin && pts[k].dist(pts[j]) + d[k] <= d[j] + tol
        });
        if !contained {
            break;
        }
        k += 1;
    }
    line.skip(k)
}

/// Mutable skeleton graph used during extraction.
struct Work {
    h: f64,
    nodes: Vec<Vec3>,
    node_alive: Vec<bool>,
    branches: Vec<Option<Branch>>,
}

impl Work {
    fn new(h: f64) -> Self {
        Self {
            h,
            nodes: Vec::new(),
            node_alive: Vec::new(),
            branches: Vec::new(),
        }
    }

    fn add_node(&mut self, p: Vec3) -> usize {
        self.nodes.push(p);
        self.node_alive.push(true);
        self.nodes.len() - 1
    }

    fn live(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.as_ref().map(|b| (i, b)))
    }

    fn degree(&self, n: usize) -> usize {
        self.live()
            .map(|(_, b)| b.nodes.iter().filter(|&&m| m == n).count())
            .sum()
    }

    fn incident(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, b) in self.live() {
            for &m in &b.nodes {
                if m == n {
                    out.push(i);
                }
            }
        }
        out
    }

    fn first(&mut self, line: Polyline) {
        let a = self.add_node(line.first());
        let b = self.add_node(line.last());
        self.branches.push(Some(Branch {
            polyline: line,
            nodes: [a, b],
        }));
    }

    fn project(&self, p: Vec3) -> Option<(usize, Projection)> {
        let mut best: Option<(usize, Projection)> = None;
        for (i, b) in self.live() {
            let pr = b.polyline.project(p);
            if best.is_none_or(|(_, q)| pr.distance < q.distance) {
                best = Some((i, pr));
            }
        }
        best
    }

    /// Joins a new trace whose last point lands on branch `b`.
    fn attach(&mut self, line: Polyline, b: usize, pr: Projection) {
        let near = (0..self.nodes.len())
            .filter(|&n| self.node_alive[n])
            .map(|n| (n, self.nodes[n].dist(pr.point)))
            .filter(|&(_, d)| d <= self.h)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        let land = match near {
            Some((n, _)) => n,
            None => self.split(b, pr.arc, pr.point),
        };
        let line = line.with_last(self.nodes[land]);
        let start = self.add_node(line.first());
        self.branches.push(Some(Branch {
            polyline: line,
            nodes: [start, land],
        }));
    }

    fn split(&mut self, b: usize, arc: f64, at: Vec3) -> usize {
        let br = self.branches[b].take().expect("live branch");
        let n = self.add_node(at);
        let (first, second) = br.polyline.split_at_arc(arc);
        self.branches[b] = Some(Branch {
            polyline: first,
            nodes: [br.nodes[0], n],
        });
        self.branches.push(Some(Branch {
            polyline: second,
            nodes: [n, br.nodes[1]],
        }));
        n
    }

    fn seed_voxels(&self, vol: &BinaryVolume) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .live()
            .flat_map(|(_, b)| b.polyline.points().iter().copied())
            .filter_map(|p| vol.nearest_voxel(p))
            .filter(|&i| vol.get(i))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Removes the stub left at `x*`, contracts junction pairs joined by a
    /// branch shorter than their radii and merges degree-two nodes.
    fn tidy(&mut self, dfield: &ScalarField, min_len: f64, x_star: Vec3) {
        if self.live().count() > 1 {
            let stub = (0..self.nodes.len())
                .find(|&n| self.node_alive[n] && self.nodes[n] == x_star && self.degree(n) == 1);
            if let Some(n) = stub {
                let b = self.incident(n)[0];
                let br = self.branches[b].as_ref().expect("live");
                let other = if br.nodes[0] == n { br.nodes[1] } else { br.nodes[0] };
                if br.polyline.length() < min_len && self.degree(other) >= 3 {
                    self.branches[b] = None;
                    self.node_alive[n] = false;
                }
            }
        }
        loop {
            self.merge_joints();
            if !self.contract_one(dfield) {
                break;
            }
        }
        self.merge_joints();
    }

    fn contract_one(&mut self, dfield: &ScalarField) -> bool {
        let radius = |p: Vec3| dfield.sample(p).unwrap_or(0.0);
        let found = self.live().find_map(|(i, b)| {
            let [a, c] = b.nodes;
            (a != c
                && self.degree(a) >= 3
                && self.degree(c) >= 3
                && b.polyline.length() < radius(self.nodes[a]).min(radius(self.nodes[c])))
            .then_some((i, a, c))
        });
        let Some((b, keep, gone)) = found else { return false };
        let (keep, gone) = (keep.min(gone), keep.max(gone));
        self.branches[b] = None;
        let target = self.nodes[keep];
        for slot in self.branches.iter_mut() {
            let Some(br) = slot.as_mut() else { continue };
            if br.nodes[0] == gone {
                br.nodes[0] = keep;
                br.polyline = Polyline::new(
                    core::iter::once(target).chain(br.polyline.points().iter().copied()),
                );
            }
            if br.nodes[1] == gone {
                br.nodes[1] = keep;
                let mut p = br.polyline.clone();
                p.push(target);
                br.polyline = p;
            }
        }
        self.node_alive[gone] = false;
        true
    }

    fn merge_joints(&mut self) {
        loop {
            let joint = (0..self.nodes.len()).find(|&n| {
                if !self.node_alive[n] || self.degree(n) != 2 {
                    return false;
                }
                let inc = self.incident(n);
                inc[0] != inc[1]
            });
            let Some(n) = joint else { return };
            let inc = self.incident(n);
            let (a, b) = (inc[0], inc[1]);
            let ba = self.branches[a].take().expect("live");
            let bb = self.branches[b].take().expect("live");
            // Orient `a` to end at n and `b` to start at n.
            let (pa, sa) = if ba.nodes[1] == n {
                (ba.polyline, ba.nodes[0])
            } else {
                (ba.polyline.reversed(), ba.nodes[1])
            };
            let (pb, eb) = if bb.nodes[0] == n {
                (bb.polyline, bb.nodes[1])
            } else {
                (bb.polyline.reversed(), bb.nodes[0])
            };
            self.branches[a] = Some(Branch {
                polyline: pa.join(&pb),
                nodes: [sa, eb],
            });
            self.node_alive[n] = false;
        }
    }

    fn finish(self) -> Result<CurveSkeleton> {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut positions = Vec::new();
        for (i, &p) in self.nodes.iter().enumerate() {
            if self.node_alive[i] {
                remap[i] = positions.len();
                positions.push(p);
            }
        }
        let branches = self
            .branches
            .into_iter()
            .flatten()
            .map(|b| Branch {
                nodes: b.nodes.map(|n| remap[n]),
                polyline: b.polyline,
            })
            .collect();
        CurveSkeleton::from_parts(branches, positions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};

    fn tube(len: usize, r: f64) -> BinaryVolume {
        let n = (2.0 * r) as usize + 6;
        let d = Dims::new(len, n, n);
        let c = (n as f64 - 1.0) / 2.0;
        let data = (0..d.len())
            .map(|i| {
                let [x, y, z] = d.coords(i);
                let (dy, dz) = (y as f64 - c, z as f64 - c);
                x >= 3 && x + 3 < len && dy * dy + dz * dz <= r * r
            })
            .collect();
        BinaryVolume::new(d, Spacing::UNIT, data).unwrap()
    }

    #[test]
    fn cost_is_zero_at_anchor() {
        let v = tube(30, 4.0);
        let d = distance_field(&v).unwrap();
        let c = speed_cost(&d).unwrap();
        assert_eq!(c.cost.get(c.x_star), 0.0);
        for i in 0..d.data().len() {
            if d.get(i) > 0.0 && (d.get(i) - c.d_star / 2.0).abs() < 1e-12 {
                assert!((c.cost.get(i) - 0.75).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seeds_everywhere_give_zero_arrival() {
        let v = tube(20, 3.0);
        let c = speed_cost(&distance_field(&v).unwrap()).unwrap();
        let seeds: Vec<usize> = v.foreground().collect();
        let u = solve_eikonal(&c, &seeds).unwrap();
        assert!(seeds.iter().all(|&s| u.get(s) == 0.0));
    }

    #[test]
    fn off_foreground_seed_rejected() {
        let v = tube(20, 3.0);
        let c = speed_cost(&distance_field(&v).unwrap()).unwrap();
        assert!(matches!(solve_eikonal(&c, &[0]), Err(Error::SeedOffForeground(0))));
    }

    #[test]
    fn straight_tube_has_one_branch() {
        let v = tube(60, 4.0);
        let s = extract_skeleton(&v, None, 16).unwrap();
        assert_eq!(s.branches.len(), 1);
        let (j, o) = classify_points(&s);
        assert_eq!((j.len(), o.len()), (0, 2));
    }

    #[test]
    fn disconnected_rejected() {
        let mut v = tube(30, 3.0);
        v.set(0, true);
        assert!(matches!(
            extract_skeleton(&v, None, 8),
            Err(Error::DisconnectedForeground(2))
        ));
    }
}
