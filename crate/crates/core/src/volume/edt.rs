//! Exact Euclidean distance transform by separable lower envelopes of
//! parabolas, one pass per axis, with per-axis spacing weights.

use alloc::vec;
use alloc::vec::Vec;

use super::{BinaryVolume, Dims, Grid, ScalarField, Spacing};
use crate::error::{Error, Result};
use crate::math;

/// Distance from each foreground voxel centre to the nearest background
/// voxel centre in world units; zero on background.
pub fn distance_field(vol: &BinaryVolume) -> Result<ScalarField> {
    let fg = vol.count();
    if fg == 0 {
        return Err(Error::EmptyForeground);
    }
    if fg == vol.dims().len() {
        return Err(Error::NoBoundary);
    }
    let sites: Vec<bool> = vol.data().iter().map(|&b| !b).collect();
    let mut d = squared_distance_to_sites(vol.dims(), vol.spacing(), &sites);
    for v in d.iter_mut() {
        *v = math::sqrt(*v);
    }
    ScalarField::new(vol.dims(), vol.spacing(), d)
}

/// Squared world distance from every voxel centre to the nearest voxel with
/// `sites[i] == true`. `INFINITY` everywhere when there are no sites.
pub fn squared_distance_to_sites(dims: Dims, spacing: Spacing, sites: &[bool]) -> Vec<f64> {
    let mut f: Vec<f64> = sites
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let n = dims.nx.max(dims.ny).max(dims.nz);
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut scratch = Envelope::with_capacity(n);

    let axes = [
        (dims.nx, 1usize, spacing.sx),
        (dims.ny, dims.nx, spacing.sy),
        (dims.nz, dims.nx * dims.ny, spacing.sz),
    ];
    for (axis, &(len, stride, s)) in axes.iter().enumerate() {
        let w = s * s;
        // Start index of every line along this axis.
        let starts = (0..dims.len()).filter(|&i| {
            let c = dims.coords(i);
            c[axis] == 0
        });
        for start in starts {
            for k in 0..len {
                line[k] = f[start + k * stride];
            }
            scratch.transform(&line[..len], &mut out[..len], w);
            for k in 0..len {
                f[start + k * stride] = out[k];
            }
        }
    }
    f
}

struct Envelope {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            v: vec![0; n],
            z: vec![0.0; n + 1],
        }
    }

    /// 1D transform `out[q] = min_p w (q - p)^2 + f[p]` over finite `f[p]`.
    fn transform(&mut self, f: &[f64], out: &mut [f64], w: f64) {
        let n = f.len();
        let mut k: isize = -1;
        for q in 0..n {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + w * (q * q) as f64;
            loop {
                if k < 0 {
                    k = 0;
                    self.v[0] = q;
                    self.z[0] = f64::NEG_INFINITY;
                    self.z[1] = f64::INFINITY;
                    break;
                }
                let p = self.v[k as usize];
                let fp = f[p] + w * (p * p) as f64;
                let s = (fq - fp) / (2.0 * w * (q - p) as f64);
                if s <= self.z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                self.v[k as usize] = q;
                self.z[k as usize] = s;
                self.z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            out.fill(f64::INFINITY);
            return;
        }
        let mut j = 0usize;
        for (q, o) in out.iter_mut().enumerate() {
            while self.z[j + 1] < q as f64 {
                j += 1;
            }
            let p = self.v[j];
            let d = q as f64 - p as f64;
            *o = w * d * d + f[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Dims;

    fn brute(vol: &BinaryVolume) -> Vec<f64> {
        let bg: Vec<usize> = (0..vol.dims().len()).filter(|&i| !vol.get(i)).collect();
        (0..vol.dims().len())
            .map(|i| {
                if !vol.get(i) {
                    return 0.0;
                }
                let p = vol.world(i);
                bg.iter()
                    .map(|&j| vol.world(j).dist(p))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_voxel_has_unit_distance() {
        let mut v = BinaryVolume::empty(Dims::new(3, 3, 3), Spacing::UNIT).unwrap();
        v.set(13, true);
        let d = distance_field(&v).unwrap();
        assert_eq!(d.get(13), 1.0);
        assert_eq!(d.get(0), 0.0);
    }

    #[test]
    fn anisotropic_slab_uses_world_units() {
        // Two voxels thick along x with spacing 2: each is one voxel (2 units)
        // from the background.
        let mut v = BinaryVolume::empty(Dims::new(4, 3, 3), Spacing::new(2.0, 1.0, 1.0)).unwrap();
        for y in 0..3 {
            for z in 0..3 {
                v.set(v.dims().index(1, y, z), true);
                v.set(v.dims().index(2, y, z), true);
            }
        }
        let d = distance_field(&v).unwrap();
        let expect = brute(&v);
        for i in 0..expect.len() {
            assert!((d.get(i) - expect[i]).abs() < 1e-12);
        }
        let max = d.data().iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 2.0);
    }

    #[test]
    fn slab_interior_max_is_two_world_units() {
        // Slab of two voxels along x in a grid that is background-free along
        // y and z: only x distances count.
        let mut v = BinaryVolume::empty(Dims::new(4, 1, 1), Spacing::new(2.0, 1.0, 1.0)).unwrap();
        v.set(1, true);
        v.set(2, true);
        let d = distance_field(&v).unwrap();
        assert_eq!(d.argmax().unwrap().1, 2.0);
        assert_eq!(brute(&v), d.data());
    }

    #[test]
    fn rejects_degenerate_volumes() {
        let v = BinaryVolume::empty(Dims::new(2, 2, 2), Spacing::UNIT).unwrap();
        assert!(matches!(distance_field(&v), Err(Error::EmptyForeground)));
        let full = BinaryVolume::new(Dims::new(2, 2, 2), Spacing::UNIT, vec![true; 8]).unwrap();
        assert!(matches!(distance_field(&full), Err(Error::NoBoundary)));
    }
}
