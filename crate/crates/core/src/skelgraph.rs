//! Skeleton graph and its greedy partition into paths.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{rotation_minimizing, Frame};
use crate::geom::Vec3;
use crate::math;
use crate::skeleton::{CurveSkeleton, Polyline};

/// One edge per skeleton branch; `id` is the branch index.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub id: usize,
    pub ends: [usize; 2],
    pub length: f64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.ends[0] == v {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }
}

/// Tree over skeleton nodes; vertex `i` is node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    pub positions: Vec<Vec3>,
    pub edges: Vec<Edge>,
    /// Incident edge ids per vertex, ascending.
    pub adjacency: Vec<Vec<usize>>,
}

impl SkeletonGraph {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Shared vertex of two distinct edges.
    pub fn shared_vertex(&self, e1: usize, e2: usize) -> Result<usize> {
        let (a, b) = (&self.edges[e1], &self.edges[e2]);
        let shared: Vec<usize> = a.ends.iter().copied().filter(|v| b.ends.contains(v)).collect();
        match shared.as_slice() {
            [v] if e1 != e2 => Ok(*v),
            _ => Err(Error::EdgesNotAdjacent(e1, e2)),
        }
    }
}

/// Graph of a skeleton, rejecting anything that is not a tree.
pub fn build_graph(skel: &CurveSkeleton) -> Result<SkeletonGraph> {
    let n = skel.nodes.len();
    let mut adjacency = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(skel.branches.len());
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (id, b) in skel.branches.iter().enumerate() {
        let [a, c] = b.nodes;
        let length = b.polyline.length();
        if !(length > 0.0) {
            return Err(Error::Other(alloc::format!("branch {id} has zero length")));
        }
        let (ra, rc) = (find(&mut parent, a), find(&mut parent, c));
        if ra == rc {
            let partial = SkeletonGraph {
                positions: Vec::new(),
                edges: edges.clone(),
                adjacency: adjacency.clone(),
            };
            return Err(Error::CyclicSkeleton(tree_path(&partial, n, c, a)));
        }
        parent[ra] = rc;
        adjacency[a].push(id);
        adjacency[c].push(id);
        edges.push(Edge {
            id,
            ends: [a, c],
            length,
        });
    }
    if n > 0 && edges.len() + 1 != n {
        return Err(Error::Other(alloc::format!(
            "skeleton graph is disconnected ({} vertices, {} edges)",
            n,
            edges.len()
        )));
    }
    Ok(SkeletonGraph {
        positions: skel.nodes.iter().map(|nd| nd.position).collect(),
        edges,
        adjacency,
    })
}

/// Vertex sequence from `from` to `to` in a forest (closing a cycle).
fn tree_path(g: &SkeletonGraph, n: usize, from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            break;
        }
        for &e in &g.adjacency[v] {
            let w = g.edges[e].other(v);
            if !seen[w] {
                seen[w] = true;
                prev[w] = v;
                stack.push(w);
            }
        }
    }
    let mut out = vec![to];
    let mut v = to;
    while v != from && prev[v] != usize::MAX {
        v = prev[v];
        out.push(v);
    }
    out
}

/// Angle in `[0, π]` between the chords of two adjacent edges, both pointing
/// away from the shared vertex: straight continuation gives π, folding back
/// gives 0.
pub fn edge_angle(g: &SkeletonGraph, e1: usize, e2: usize) -> Result<f64> {
    let v = g.shared_vertex(e1, e2)?;
    let p = g.positions[v];
    let a = g.positions[g.edges[e1].other(v)] - p;
    let b = g.positions[g.edges[e2].other(v)] - p;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(math::acos(a.dot(b) / (na * nb)))
}

/// One path of the partition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Path {
    /// Edge ids in walking order.
    pub edges: Vec<usize>,
    /// Vertices in walking order (`edges.len() + 1`).
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathPartition {
    pub paths: Vec<Path>,
}

impl PathPartition {
    /// Path index of every edge.
    pub fn edge_owner(&self, edge_count: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; edge_count];
        for (i, p) in self.paths.iter().enumerate() {
            for &e in &p.edges {
                out[e] = i;
            }
        }
        out
    }
}

/// Greedy path cover: seed each path with the longest unassigned edge and
/// extend both ends through the straightest unassigned edge while its angle
/// exceeds `theta_c`. Ties go to the lowest edge id.
pub fn partition_paths(g: &SkeletonGraph, theta_c: f64) -> PathPartition {
    let mut assigned = vec![false; g.edges.len()];
    let mut paths = Vec::new();
    loop {
        let mut seed: Option<usize> = None;
        for e in 0..g.edges.len() {
            if !assigned[e] && seed.is_none_or(|s| g.edges[e].length > g.edges[s].length) {
                seed = Some(e);
            }
        }
        let Some(seed) = seed else { break };
        assigned[seed] = true;
        let [a, b] = g.edges[seed].ends;
        let (fwd_e, fwd_v) = extend(g, &mut assigned, seed, b, theta_c);
        let (back_e, back_v) = extend(g, &mut assigned, seed, a, theta_c);
        let mut edges: Vec<usize> = back_e.into_iter().rev().collect();
        edges.push(seed);
        edges.extend(fwd_e);
        let mut vertices: Vec<usize> = back_v.into_iter().rev().collect();
        vertices.push(a);
        vertices.push(b);
        vertices.extend(fwd_v);
        paths.push(Path { edges, vertices });
    }
    PathPartition { paths }
}

/// Walks away from `start_edge` through vertex `v`; returns the added edges
/// and the vertices reached after each.
fn extend(
    g: &SkeletonGraph,
    assigned: &mut [bool],
    start_edge: usize,
    mut v: usize,
    theta_c: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut e_ref = start_edge;
    let (mut edges, mut verts) = (Vec::new(), Vec::new());
    loop {
        let mut best: Option<(usize, f64)> = None;
        for &e in &g.adjacency[v] {
            if assigned[e] {
                continue;
            }
            let Ok(angle) = edge_angle(g, e_ref, e) else { continue };
            if best.is_none_or(|(_, b)| angle > b) {
                best = Some((e, angle));
            }
        }
        match best {
            Some((e, angle)) if angle > theta_c => {
                assigned[e] = true;
                v = g.edges[e].other(v);
                edges.push(e);
                verts.push(v);
                e_ref = e;
            }
            _ => return (edges, verts),
        }
    }
}

/// A junction on a sub-skeleton.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JunctionParam {
    /// Graph vertex (skeleton node) id.
    pub vertex: usize,
    /// Normalized arc position.
    pub t: f64,
}

/// Path polyline `ψ(t)`, `t ∈ [0, 1]` by normalized arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSkeleton {
    pub path: usize,
    pub polyline: Polyline,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    /// Junctions (graph degree ≥ 3) along the path, by increasing `t`.
    pub junctions: Vec<JunctionParam>,
    /// Rotation-minimizing frames at the polyline points.
    pub frames: Vec<Frame>,
}

/// Half-width, in voxels, of the chord used for cross-section normals.
/// Wide enough to average out the voxel staircase of back-tracked paths.
pub const TANGENT_WINDOW: f64 = 3.0;

impl SubSkeleton {
    pub fn length(&self) -> f64 {
        self.polyline.length()
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.polyline.at(t)
    }

    /// Unit tangent at `t` from the chord between arc positions `±window`
    /// around it (clamped at the ends).
    pub fn tangent(&self, t: f64, window: f64) -> Vec3 {
        let s = t * self.length();
        let a = self.polyline.at_arc(s - window);
        let b = self.polyline.at_arc(s + window);
        (b - a)
            .try_normalize(1e-12)
            .unwrap_or_else(|| (self.polyline.last() - self.polyline.first()).normalize())
    }

    /// Cross-section frame at `t`: tangent from [`Self::tangent`], normal
    /// carried over from the transported frame of the preceding point.
    pub fn frame(&self, t: f64, window: f64) -> Frame {
        let s = (t * self.length()).clamp(0.0, self.length());
        let arc = self.polyline.arc();
        let i = arc.partition_point(|&a| a <= s).saturating_sub(1).min(self.frames.len() - 1);
        Frame::from_tangent(self.tangent(t, window), self.frames[i].normal)
    }
}

/// Concatenates the branches of every path.
pub fn paths_to_subskeletons(
    partition: &PathPartition,
    g: &SkeletonGraph,
    skel: &CurveSkeleton,
    snap_tolerance: f64,
) -> Result<Vec<SubSkeleton>> {
    partition
        .paths
        .iter()
        .enumerate()
        .map(|(pi, p)| subskeleton(pi, p, g, skel, snap_tolerance))
        .collect()
}

fn subskeleton(
    pi: usize,
    p: &Path,
    g: &SkeletonGraph,
    skel: &CurveSkeleton,
    tol: f64,
) -> Result<SubSkeleton> {
    let mut pts: Vec<Vec3> = Vec::new();
    let mut vertex_arc = Vec::with_capacity(p.vertices.len());
    let mut acc = 0.0;
    vertex_arc.push(0.0);
    for (k, &e) in p.edges.iter().enumerate() {
        let br = &skel.branches[e].polyline;
        let line = if skel.branches[e].nodes[0] == p.vertices[k] {
            br.clone()
        } else {
            br.reversed()
        };
        if let Some(&last) = pts.last() {
            let gap = last.dist(line.first());
            if gap > tol {
                return Err(Error::Discontinuous { edge: e, gap });
            }
            pts.extend(line.points()[1..].iter().copied());
        } else {
            pts.extend(line.points().iter().copied());
        }
        acc += line.length();
        vertex_arc.push(acc);
    }
    let polyline = Polyline::new(pts);
    let mut junctions = Vec::new();
    for (k, &v) in p.vertices.iter().enumerate() {
        if g.degree(v) >= 3 {
            junctions.push(JunctionParam {
                vertex: v,
                t: (vertex_arc[k] / acc).clamp(0.0, 1.0),
            });
        }
    }
    let tangents = crate::frame::polyline_tangents(polyline.points());
    let start = tangents[0];
    let hint = if start.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let frames = rotation_minimizing(polyline.points(), &tangents, hint);
    Ok(SubSkeleton {
        path: pi,
        polyline,
        edges: p.edges.clone(),
        vertices: p.vertices.clone(),
        junctions,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::Branch;
    use core::f64::consts::PI;

    fn skel(points: &[Vec3], edges: &[(usize, usize)]) -> CurveSkeleton {
        let branches = edges
            .iter()
            .map(|&(a, b)| Branch {
                polyline: Polyline::new([points[a], points[b]]),
                nodes: [a, b],
            })
            .collect();
        CurveSkeleton::from_parts(branches, points.to_vec()).unwrap()
    }

    fn v(x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, 0.0)
    }

    #[test]
    fn single_branch_is_k2() {
        let g = build_graph(&skel(&[v(0.0, 0.0), v(1.0, 0.0)], &[(0, 1)])).unwrap();
        assert_eq!((g.vertex_count(), g.edges.len()), (2, 1));
    }

    #[test]
    fn cycle_rejected() {
        let s = skel(&[v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)], &[(0, 1), (1, 2), (2, 0)]);
        match build_graph(&s) {
            Err(Error::CyclicSkeleton(c)) => assert_eq!(c.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn angles() {
        let s = skel(
            &[v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(1.0, 1.0), v(2.0, 1.0)],
            &[(0, 1), (1, 2), (1, 3), (1, 4)],
        );
        let g = build_graph(&s).unwrap();
        assert!((edge_angle(&g, 0, 1).unwrap() - PI).abs() < 1e-12);
        assert!((edge_angle(&g, 0, 2).unwrap() - PI / 2.0).abs() < 1e-12);
        // Walking in along (1,0,0) and out along (1,1,0).
        assert!((edge_angle(&g, 0, 3).unwrap() - 3.0 * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn non_adjacent_edges_rejected() {
        let s = skel(&[v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(3.0, 0.0)], &[(0, 1), (1, 2), (2, 3)]);
        let g = build_graph(&s).unwrap();
        assert!(matches!(edge_angle(&g, 0, 2), Err(Error::EdgesNotAdjacent(0, 2))));
    }

    #[test]
    fn collinear_chain_is_one_path() {
        let s = skel(&[v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(3.0, 0.0)], &[(0, 1), (1, 2), (2, 3)]);
        let g = build_graph(&s).unwrap();
        let p = partition_paths(&g, 0.0);
        assert_eq!(p.paths.len(), 1);
        assert_eq!(p.paths[0].edges, vec![0, 1, 2]);
        assert_eq!(p.paths[0].vertices, vec![0, 1, 2, 3]);
        assert_eq!(partition_paths(&g, crate::params::THETA_C_MAX).paths.len(), 3);
    }

    #[test]
    fn two_branch_junction_parameter() {
        // T: long bar 0-1-2 with a stem at 1.
        let s = skel(&[v(0.0, 0.0), v(3.0, 0.0), v(10.0, 0.0), v(3.0, 4.0)], &[(0, 1), (1, 2), (1, 3)]);
        let g = build_graph(&s).unwrap();
        let p = partition_paths(&g, 0.0);
        let subs = paths_to_subskeletons(&p, &g, &s, 1.0).unwrap();
        assert_eq!(subs.len(), 2);
        let bar = &subs[0];
        assert_eq!(bar.junctions.len(), 1);
        let t = bar.junctions[0].t;
        let expect = if bar.vertices[0] == 0 { 0.3 } else { 0.7 };
        assert!((t - expect).abs() < 1e-6);
        let stem = &subs[1];
        assert_eq!(stem.junctions.len(), 1);
        assert!(stem.junctions[0].t == 0.0 || stem.junctions[0].t == 1.0);
    }
}
