use alloc::vec;
use alloc::vec::Vec;

use super::{BinaryVolume, Dims, Grid, LabelVolume};

/// Voxel adjacency used for connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Connectivity {
    /// Face neighbours.
    #[default]
    Six,
    /// Face, edge and corner neighbours.
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Connectivity::Six),
            26 => Some(Connectivity::TwentySix),
            _ => None,
        }
    }

    fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let n = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => n == 1,
                        Connectivity::TwentySix => n > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Labels connected foreground components `1..=K`, numbered by the raster
/// position of each component's first voxel.
pub fn connected_components(vol: &BinaryVolume, connectivity: Connectivity) -> LabelVolume {
    let (labels, _) = label_mask(vol.dims(), vol.data(), connectivity);
    LabelVolume::new(vol.dims(), vol.spacing(), labels).expect("dims already validated")
}

/// Component labelling over an arbitrary mask; returns labels and count.
pub(crate) fn label_mask(dims: Dims, mask: &[bool], connectivity: Connectivity) -> (Vec<u32>, u32) {
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; dims.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for seed in 0..dims.len() {
        if !mask[seed] || labels[seed] != 0 {
            continue;
        }
        next += 1;
        labels[seed] = next;
        stack.push(seed);
        while let Some(i) = stack.pop() {
            let [x, y, z] = dims.coords(i);
            for &[dx, dy, dz] in &offsets {
                if let Some(j) = dims.checked_index(x as i64 + dx, y as i64 + dy, z as i64 + dz) {
                    if mask[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Keeps only the largest component (ties: lowest label) of `vol`.
pub(crate) fn keep_largest(vol: &mut BinaryVolume, connectivity: Connectivity) {
    let (labels, count) = label_mask(vol.dims(), vol.data(), connectivity);
    if count <= 1 {
        return;
    }
    let mut sizes = vec![0usize; count as usize + 1];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    let mut best = 1;
    for l in 2..=count as usize {
        if sizes[l] > sizes[best] {
            best = l;
        }
    }
    for (v, &l) in vol.data_mut().iter_mut().zip(&labels) {
        *v = l as usize == best;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing;

    fn vol_with(dims: Dims, on: &[[usize; 3]]) -> BinaryVolume {
        let mut v = BinaryVolume::empty(dims, Spacing::UNIT).unwrap();
        for &[x, y, z] in on {
            v.set(dims.index(x, y, z), true);
        }
        v
    }

    #[test]
    fn disjoint_voxels_get_two_labels() {
        let v = vol_with(Dims::new(5, 1, 1), &[[0, 0, 0], [3, 0, 0]]);
        let l = connected_components(&v, Connectivity::Six);
        assert_eq!(l.label_count(), 2);
        assert_eq!(l.get(0), 1);
        assert_eq!(l.get(3), 2);
    }

    #[test]
    fn diagonal_contact_depends_on_connectivity() {
        let v = vol_with(Dims::new(2, 2, 2), &[[0, 0, 0], [1, 1, 1]]);
        assert_eq!(connected_components(&v, Connectivity::Six).label_count(), 2);
        assert_eq!(connected_components(&v, Connectivity::TwentySix).label_count(), 1);
    }

    #[test]
    fn keep_largest_drops_specks() {
        let mut v = vol_with(Dims::new(6, 1, 1), &[[0, 0, 0], [2, 0, 0], [3, 0, 0]]);
        keep_largest(&mut v, Connectivity::Six);
        assert_eq!(v.count(), 2);
        assert!(!v.get(0));
    }
}
