//! Voxel grids: binary objects, scalar fields and label volumes.
//!
//! Voxel `(i, j, k)` has its centre at world position
//! `(i * sx, j * sy, k * sz)`; linear indices run x-fastest.

mod components;
mod edt;
mod mesh;
mod noise;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::math;

pub use components::{connected_components, Connectivity};
pub(crate) use components::label_mask;
pub use edt::{distance_field, squared_distance_to_sites};
pub use mesh::{marching_cubes, TriangleMesh};
pub use noise::{add_impulse_noise, add_impulse_noise_with_report, NoiseReport};

/// Grid extent in voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self { nx, ny, nz }
    }

    pub fn to_array(self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn len(self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(self, idx: usize) -> [usize; 3] {
        let x = idx % self.nx;
        let yz = idx / self.nx;
        [x, yz % self.ny, yz / self.ny]
    }

    /// Index of signed coordinates, or `None` outside the grid.
    #[inline]
    pub fn checked_index(self, x: i64, y: i64, z: i64) -> Option<usize> {
        if x < 0 || y < 0 || z < 0 {
            return None;
        }
        let (x, y, z) = (x as usize, y as usize, z as usize);
        (x < self.nx && y < self.ny && z < self.nz).then(|| self.index(x, y, z))
    }

    /// Face neighbours of `idx` inside the grid.
    pub fn neighbors6(self, idx: usize) -> impl Iterator<Item = usize> {
        let [x, y, z] = self.coords(idx);
        let (x, y, z) = (x as i64, y as i64, z as i64);
        OFFSETS6
            .into_iter()
            .filter_map(move |[dx, dy, dz]| self.checked_index(x + dx, y + dy, z + dz))
    }

    fn validate(self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::InvalidDims(self.to_array()));
        }
        Ok(())
    }
}

pub(crate) const OFFSETS6: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// World units per voxel along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spacing {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl Default for Spacing {
    fn default() -> Self {
        Self::UNIT
    }
}

impl Spacing {
    pub const UNIT: Spacing = Spacing::new(1.0, 1.0, 1.0);

    pub const fn new(sx: f64, sy: f64, sz: f64) -> Self {
        Self { sx, sy, sz }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.sx, self.sy, self.sz]
    }

    pub fn to_vec3(self) -> Vec3 {
        Vec3::new(self.sx, self.sy, self.sz)
    }

    pub fn min(self) -> f64 {
        self.sx.min(self.sy).min(self.sz)
    }

    fn validate(self) -> Result<()> {
        let ok = self
            .to_array()
            .iter()
            .all(|s| s.is_finite() && *s > 0.0);
        if !ok {
            return Err(Error::InvalidSpacing(self.to_array()));
        }
        Ok(())
    }
}

/// Shared geometry of all voxel grids.
pub trait Grid {
    fn dims(&self) -> Dims;
    fn spacing(&self) -> Spacing;

    /// World position of the centre of voxel `idx`.
    fn world(&self, idx: usize) -> Vec3 {
        let [x, y, z] = self.dims().coords(idx);
        let s = self.spacing();
        Vec3::new(x as f64 * s.sx, y as f64 * s.sy, z as f64 * s.sz)
    }

    /// Continuous voxel coordinates of a world position.
    fn to_voxel(&self, p: Vec3) -> Vec3 {
        p.component_div(self.spacing().to_vec3())
    }

    /// Index of the voxel whose centre is nearest to `p`, if inside the grid.
    fn nearest_voxel(&self, p: Vec3) -> Option<usize> {
        let v = self.to_voxel(p);
        self.dims().checked_index(
            math::round(v.x) as i64,
            math::round(v.y) as i64,
            math::round(v.z) as i64,
        )
    }
}

/// Binary occupancy grid: the discrete object.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryVolume {
    dims: Dims,
    spacing: Spacing,
    data: Vec<bool>,
}

impl BinaryVolume {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<bool>) -> Result<Self> {
        dims.validate()?;
        spacing.validate()?;
        if data.len() != dims.len() {
            return Err(Error::SizeMismatch {
                expected: dims.len(),
                actual: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            data,
        })
    }

    pub fn empty(dims: Dims, spacing: Spacing) -> Result<Self> {
        Self::new(dims, spacing, vec![false; dims.len()])
    }

    /// Builds a volume from any nonzero-is-foreground byte buffer.
    pub fn from_bytes(dims: Dims, spacing: Spacing, bytes: &[u8]) -> Result<Self> {
        Self::new(dims, spacing, bytes.iter().map(|&b| b != 0).collect())
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.data[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: bool) {
        self.data[idx] = v;
    }

    pub fn at(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.dims.index(x, y, z)]
    }

    /// Occupancy at signed voxel coordinates; outside the grid is background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64, z: i64) -> bool {
        self.dims
            .checked_index(x, y, z)
            .is_some_and(|i| self.data[i])
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn foreground(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Foreground voxel with at least one in-grid background face neighbour,
    /// or lying on the grid border.
    pub fn is_surface(&self, idx: usize) -> bool {
        if !self.data[idx] {
            return false;
        }
        let [x, y, z] = self.dims.coords(idx);
        let (x, y, z) = (x as i64, y as i64, z as i64);
        OFFSETS6
            .iter()
            .any(|[dx, dy, dz]| !self.get_signed(x + dx, y + dy, z + dz))
    }

    /// Trilinearly interpolated occupancy in `[0, 1]` at world point `p`.
    pub fn occupancy(&self, p: Vec3) -> f64 {
        let v = self.to_voxel(p);
        let (fx, fy, fz) = (math::floor(v.x), math::floor(v.y), math::floor(v.z));
        let (tx, ty, tz) = (v.x - fx, v.y - fy, v.z - fz);
        let (x0, y0, z0) = (fx as i64, fy as i64, fz as i64);
        let mut acc = 0.0;
        for dz in 0..2 {
            let wz = if dz == 0 { 1.0 - tz } else { tz };
            for dy in 0..2 {
                let wy = if dy == 0 { 1.0 - ty } else { ty };
                for dx in 0..2 {
                    let wx = if dx == 0 { 1.0 - tx } else { tx };
                    if self.get_signed(x0 + dx, y0 + dy, z0 + dz) {
                        acc += wx * wy * wz;
                    }
                }
            }
        }
        acc
    }

    /// Volume of a single voxel in world units.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing.sx * self.spacing.sy * self.spacing.sz
    }
}

impl Grid for BinaryVolume {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn spacing(&self) -> Spacing {
        self.spacing
    }
}

/// Per-voxel real values on a grid; `f64::INFINITY` marks unreachable voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: Dims,
    spacing: Spacing,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        spacing.validate()?;
        if data.len() != dims.len() {
            return Err(Error::SizeMismatch {
                expected: dims.len(),
                actual: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            data,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: f64) -> Self {
        Self {
            dims,
            spacing,
            data: vec![value; dims.len()],
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.data[idx]
    }

    /// Value at signed voxel coordinates; `INFINITY` outside the grid.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64, z: i64) -> f64 {
        match self.dims.checked_index(x, y, z) {
            Some(i) => self.data[i],
            None => f64::INFINITY,
        }
    }

    /// Index and value of the largest finite entry, lowest index on ties.
    pub fn argmax(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.data.iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best
    }

    /// Trilinear interpolation over the finite corners around `p`, with the
    /// weights renormalised. `None` when no corner is finite.
    pub fn sample(&self, p: Vec3) -> Option<f64> {
        let v = self.to_voxel(p);
        let (fx, fy, fz) = (math::floor(v.x), math::floor(v.y), math::floor(v.z));
        let (tx, ty, tz) = (v.x - fx, v.y - fy, v.z - fz);
        let (x0, y0, z0) = (fx as i64, fy as i64, fz as i64);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for dz in 0..2 {
            let wz = if dz == 0 { 1.0 - tz } else { tz };
            for dy in 0..2 {
                let wy = if dy == 0 { 1.0 - ty } else { ty };
                for dx in 0..2 {
                    let wx = if dx == 0 { 1.0 - tx } else { tx };
                    let val = self.get_signed(x0 + dx, y0 + dy, z0 + dz);
                    let w = wx * wy * wz;
                    if val.is_finite() && w > 0.0 {
                        acc += w * val;
                        wsum += w;
                    }
                }
            }
        }
        (wsum > 0.0).then(|| acc / wsum)
    }
}

impl Grid for ScalarField {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn spacing(&self) -> Spacing {
        self.spacing
    }
}

/// Per-voxel integer labels, `0` = background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: Dims,
    spacing: Spacing,
    data: Vec<u32>,
}

impl LabelVolume {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<u32>) -> Result<Self> {
        dims.validate()?;
        spacing.validate()?;
        if data.len() != dims.len() {
            return Err(Error::SizeMismatch {
                expected: dims.len(),
                actual: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            data,
        })
    }

    pub fn zeros(dims: Dims, spacing: Spacing) -> Self {
        Self {
            dims,
            spacing,
            data: vec![0; dims.len()],
        }
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, idx: usize) -> u32 {
        self.data[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: u32) {
        self.data[idx] = v;
    }

    pub fn max_label(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Number of distinct nonzero labels.
    pub fn label_count(&self) -> usize {
        let mut seen = vec![false; self.max_label() as usize + 1];
        for &l in &self.data {
            seen[l as usize] = true;
        }
        seen.iter().skip(1).filter(|&&s| s).count()
    }

    /// Voxel count per label, indexed by label.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.max_label() as usize + 1];
        for &l in &self.data {
            h[l as usize] += 1;
        }
        h
    }

    pub fn mask(&self, label: u32) -> BinaryVolume {
        BinaryVolume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|&l| l == label).collect(),
        }
    }

    /// Nonzero support as a binary volume.
    pub fn support(&self) -> BinaryVolume {
        BinaryVolume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|&l| l != 0).collect(),
        }
    }

    /// Renumbers nonzero labels to `1..=K` in order of first appearance.
    pub fn compact(&mut self) -> Vec<u32> {
        let mut map = vec![0u32; self.max_label() as usize + 1];
        let mut old = Vec::new();
        for l in self.data.iter_mut() {
            if *l == 0 {
                continue;
            }
            if map[*l as usize] == 0 {
                old.push(*l);
                map[*l as usize] = old.len() as u32;
            }
            *l = map[*l as usize];
        }
        old
    }

    /// Checks the label set is `{0..K}` with every nonzero label used.
    pub fn is_contiguous(&self) -> bool {
        self.histogram().iter().skip(1).all(|&c| c > 0)
    }
}

impl Grid for LabelVolume {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn spacing(&self) -> Spacing {
        self.spacing
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        let d = Dims::new(2, 2, 2);
        assert!(matches!(
            BinaryVolume::new(d, Spacing::UNIT, vec![false; 7]),
            Err(Error::SizeMismatch { expected: 8, actual: 7 })
        ));
        assert!(BinaryVolume::new(Dims::new(0, 1, 1), Spacing::UNIT, vec![]).is_err());
        assert!(BinaryVolume::new(d, Spacing::new(1.0, 0.0, 1.0), vec![false; 8]).is_err());
    }

    #[test]
    fn bytes_map_to_foreground() {
        let v = BinaryVolume::from_bytes(Dims::new(2, 2, 2), Spacing::UNIT, &[1, 0, 0, 0, 0, 0, 0, 0])
            .unwrap();
        assert_eq!(v.count(), 1);
        assert!(v.at(0, 0, 0));
    }

    #[test]
    fn index_roundtrip() {
        let d = Dims::new(3, 4, 5);
        for i in 0..d.len() {
            let [x, y, z] = d.coords(i);
            assert_eq!(d.index(x, y, z), i);
        }
    }

    #[test]
    fn sample_skips_infinite_corners() {
        let d = Dims::new(2, 1, 1);
        let f = ScalarField::new(d, Spacing::UNIT, vec![2.0, f64::INFINITY]).unwrap();
        assert_eq!(f.sample(Vec3::new(0.5, 0.0, 0.0)), Some(2.0));
        assert_eq!(f.sample(Vec3::new(5.0, 0.0, 0.0)), None);
    }

    #[test]
    fn compact_relabels_in_order() {
        let mut l = LabelVolume::new(Dims::new(4, 1, 1), Spacing::UNIT, vec![7, 0, 3, 7]).unwrap();
        assert_eq!(l.compact(), vec![7, 3]);
        assert_eq!(l.data(), &[1, 0, 2, 1]);
        assert!(l.is_contiguous());
    }
}
