//! Iso-surface extraction for visualisation.
//!
//! Each grid cell is split into six tetrahedra sharing the main diagonal
//! (Kuhn triangulation), which is consistent across neighbouring cells, so
//! the surface is closed and manifold without the ambiguity tables of the
//! classic cube algorithm. The grid is padded by one layer of background.
//!
//! A binary indicator puts every vertex at the same fraction of its lattice
//! edge, which leaves a staircase whose area overshoots the smooth surface
//! by a quarter or more. Vertices are therefore relaxed towards the mean of
//! their neighbours while sliding only along their own lattice edge, which
//! keeps each triangle inside its tetrahedron and so preserves topology.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{BinaryVolume, Dims, Grid, LabelVolume, Spacing};
use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| self.triangle_normal(t).norm() * 0.5)
            .sum()
    }

    /// `V - E + F` over the vertices actually referenced by triangles.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = BTreeSet::new();
        let mut used = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
                used.insert(a);
            }
        }
        used.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        let mut count: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    /// Signed enclosed volume (positive for outward-facing triangles).
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i as usize]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    fn triangle_normal(&self, t: &[u32; 3]) -> Vec3 {
        let [a, b, c] = t.map(|i| self.vertices[i as usize]);
        (b - a).cross(c - a)
    }
}

/// Volumes a surface can be extracted from.
pub trait MeshSource: Grid {
    /// Whether voxel `idx` carries `label`.
    fn has_label(&self, idx: usize, label: u32) -> bool;
}

impl MeshSource for BinaryVolume {
    /// Label `1` is the foreground, `0` the background.
    fn has_label(&self, idx: usize, label: u32) -> bool {
        self.get(idx) == (label != 0)
    }
}

impl MeshSource for LabelVolume {
    fn has_label(&self, idx: usize, label: u32) -> bool {
        self.get(idx) == label
    }
}

// Cube corners by bitmask: bit 0 = +x, bit 1 = +y, bit 2 = +z.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 3, 2, 7],
    [0, 2, 6, 7],
    [0, 6, 4, 7],
    [0, 4, 5, 7],
    [0, 5, 1, 7],
];

/// Triangulated iso-surface of the indicator of `label` at level `iso`
/// (inside means indicator > `iso`), in world coordinates.
pub fn marching_cubes<V: MeshSource>(vol: &V, label: u32, iso: f64) -> Result<TriangleMesh> {
    if !(iso > 0.0 && iso < 1.0) {
        return Err(Error::InvalidParameter { name: "iso", value: iso });
    }
    let dims = vol.dims();
    if !(0..dims.len()).any(|i| vol.has_label(i, label)) {
        return Err(Error::AbsentLabel(label));
    }
    let padded = Dims::new(dims.nx + 2, dims.ny + 2, dims.nz + 2);
    let inside: Vec<bool> = (0..padded.len())
        .map(|p| {
            let [x, y, z] = padded.coords(p);
            dims.checked_index(x as i64 - 1, y as i64 - 1, z as i64 - 1)
                .is_some_and(|i| vol.has_label(i, label))
        })
        .collect();
    let mut b = Builder {
        padded,
        spacing: vol.spacing(),
        iso,
        inside: &inside,
        keys: BTreeMap::new(),
        rails: Vec::new(),
        mesh: TriangleMesh::default(),
    };
    for z in 0..padded.nz - 1 {
        for y in 0..padded.ny - 1 {
            for x in 0..padded.nx - 1 {
                let base = padded.index(x, y, z);
                let corner = |m: usize| {
                    base + (m & 1) + ((m >> 1) & 1) * padded.nx + ((m >> 2) & 1) * padded.nx * padded.ny
                };
                let first = inside[corner(0)];
                if (1..8).all(|m| inside[corner(m)] == first) {
                    continue;
                }
                for tet in TETS {
                    b.tetrahedron(tet.map(corner), tet);
                }
            }
        }
    }
    let Builder { rails, mut mesh, .. } = b;
    relax(&mut mesh, &rails, SMOOTHING_ROUNDS);
    Ok(mesh)
}

const SMOOTHING_ROUNDS: usize = 12;
const RAIL_MARGIN: f64 = 0.05;

/// Jacobi rounds of umbrella smoothing with every vertex confined to the
/// segment `rails[v]` (shrunk by a small margin at both ends).
fn relax(mesh: &mut TriangleMesh, rails: &[(Vec3, Vec3)], rounds: usize) {
    let n = mesh.vertices.len();
    let mut adj: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    for _ in 0..rounds {
        let next: Vec<Vec3> = (0..n)
            .map(|v| {
                if adj[v].is_empty() {
                    return mesh.vertices[v];
                }
                let m = adj[v]
                    .iter()
                    .fold(Vec3::ZERO, |a, &u| a + mesh.vertices[u as usize])
                    / adj[v].len() as f64;
                let (a, b) = rails[v];
                let ab = b - a;
                let t = ((m - a).dot(ab) / ab.norm_sq()).clamp(RAIL_MARGIN, 1.0 - RAIL_MARGIN);
                a + ab * t
            })
            .collect();
        mesh.vertices = next;
    }
}

struct Builder<'a> {
    padded: Dims,
    spacing: Spacing,
    iso: f64,
    inside: &'a [bool],
    keys: BTreeMap<(usize, usize), u32>,
    rails: Vec<(Vec3, Vec3)>,
    mesh: TriangleMesh,
}

impl Builder<'_> {
    fn position(&self, p: usize) -> Vec3 {
        let [x, y, z] = self.padded.coords(p);
        Vec3::new(
            (x as f64 - 1.0) * self.spacing.sx,
            (y as f64 - 1.0) * self.spacing.sy,
            (z as f64 - 1.0) * self.spacing.sz,
        )
    }

    /// Vertex on the lattice edge between two tet corners. Every tet edge
    /// joins a corner `lo` to `lo + d` for some bitmask `d`, which gives a
    /// key shared by all tets around that edge.
    fn edge_vertex(&mut self, (pa, ma): (usize, usize), (pb, mb): (usize, usize)) -> u32 {
        let (lo, d) = if ma & mb == ma { (pa, mb & !ma) } else { (pb, ma & !mb) };
        if let Some(&v) = self.keys.get(&(lo, d)) {
            return v;
        }
        let (fa, fb) = (self.inside[pa] as u8 as f64, self.inside[pb] as u8 as f64);
        let t = (self.iso - fa) / (fb - fa);
        let p = self.position(pa).lerp(self.position(pb), t);
        let id = self.mesh.vertices.len() as u32;
        self.mesh.vertices.push(p);
        self.rails.push((self.position(pa), self.position(pb)));
        self.keys.insert((lo, d), id);
        id
    }

    fn tetrahedron(&mut self, pts: [usize; 4], masks: [usize; 4]) {
        let ins: Vec<usize> = (0..4).filter(|&k| self.inside[pts[k]]).collect();
        let outs: Vec<usize> = (0..4).filter(|&k| !self.inside[pts[k]]).collect();
        if ins.is_empty() || outs.is_empty() {
            return;
        }
        let mean = |ks: &[usize], s: &Self| {
            ks.iter().fold(Vec3::ZERO, |a, &k| a + s.position(pts[k])) / ks.len() as f64
        };
        let outward = mean(&outs, self) - mean(&ins, self);
        let v = |s: &mut Self, a: usize, b: usize| s.edge_vertex((pts[a], masks[a]), (pts[b], masks[b]));
        match (ins.len(), outs.len()) {
            (1, 3) => {
                let a = ins[0];
                let t = [v(self, a, outs[0]), v(self, a, outs[1]), v(self, a, outs[2])];
                self.emit(t, outward);
            }
            (3, 1) => {
                let a = outs[0];
                let t = [v(self, ins[0], a), v(self, ins[1], a), v(self, ins[2], a)];
                self.emit(t, outward);
            }
            _ => {
                // Quad with corners in cyclic order around the two crossing pairs.
                let (i0, i1, o0, o1) = (ins[0], ins[1], outs[0], outs[1]);
                let q = [v(self, i0, o0), v(self, i0, o1), v(self, i1, o1), v(self, i1, o0)];
                self.emit([q[0], q[1], q[2]], outward);
                self.emit([q[0], q[2], q[3]], outward);
            }
        }
    }

    fn emit(&mut self, mut t: [u32; 3], outward: Vec3) {
        let n = self.mesh.triangle_normal(&t);
        if n.norm() < 1e-12 {
            return;
        }
        if n.dot(outward) < 0.0 {
            t.swap(1, 2);
        }
        self.mesh.triangles.push(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing;
    use core::f64::consts::PI;

    fn ball(n: usize, r: f64) -> BinaryVolume {
        let d = Dims::new(n, n, n);
        let c = (n as f64 - 1.0) / 2.0;
        let data = (0..d.len())
            .map(|i| {
                let [x, y, z] = d.coords(i);
                let p = Vec3::new(x as f64 - c, y as f64 - c, z as f64 - c);
                p.norm() <= r
            })
            .collect();
        BinaryVolume::new(d, Spacing::UNIT, data).unwrap()
    }

    #[test]
    fn cube_is_closed_sphere() {
        let d = Dims::new(12, 12, 12);
        let data = (0..d.len())
            .map(|i| d.coords(i).iter().all(|&c| (1..11).contains(&c)))
            .collect();
        let v = BinaryVolume::new(d, Spacing::UNIT, data).unwrap();
        let m = marching_cubes(&v, 1, 0.5).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_closed());
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn single_voxel_is_closed() {
        let mut v = BinaryVolume::empty(Dims::new(1, 1, 1), Spacing::UNIT).unwrap();
        v.set(0, true);
        let m = marching_cubes(&v, 1, 0.5).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_closed());
    }

    #[test]
    fn absent_label_is_an_error() {
        let v = LabelVolume::zeros(Dims::new(3, 3, 3), Spacing::UNIT);
        assert!(matches!(marching_cubes(&v, 4, 0.5), Err(Error::AbsentLabel(4))));
    }

    #[test]
    fn ball_area_close_to_analytic() {
        let r = 15.0;
        let m = marching_cubes(&ball(36, r), 1, 0.5).unwrap();
        let rel = (m.area() - 4.0 * PI * r * r).abs() / (4.0 * PI * r * r);
        assert!(rel < 0.10, "relative area error {rel}");
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn spacing_scales_vertices() {
        let mut v = BinaryVolume::empty(Dims::new(1, 1, 1), Spacing::new(2.0, 1.0, 1.0)).unwrap();
        v.set(0, true);
        let m = marching_cubes(&v, 1, 0.5).unwrap();
        let xmax = m.vertices.iter().map(|p| p.x).fold(f64::MIN, f64::max);
        let ymax = m.vertices.iter().map(|p| p.y).fold(f64::MIN, f64::max);
        // Vertices stay on their lattice edges, which span one voxel.
        assert!(xmax > 0.0 && xmax <= 2.0);
        assert!(ymax > 0.0 && ymax <= 1.0);
        assert!(xmax > ymax);
    }
}
