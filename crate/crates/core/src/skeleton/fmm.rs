//! First-order fast marching on the 6-neighbour voxel grid.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::math;
use crate::volume::{Dims, Spacing};

#[derive(Clone, Copy)]
struct Entry {
    u: f64,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    // Reversed so the max-heap pops the smallest arrival, then lowest index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.u.total_cmp(&self.u).then_with(|| o.idx.cmp(&self.idx))
    }
}

/// Arrival times of a front started at `seeds` with `|∇U| = slowness`,
/// restricted to `passable` voxels. Unreached voxels stay `INFINITY`.
pub(crate) fn march(
    dims: Dims,
    spacing: Spacing,
    passable: &[bool],
    slowness: impl Fn(usize) -> f64,
    seeds: &[usize],
) -> Vec<f64> {
    let mut u = vec![f64::INFINITY; dims.len()];
    let mut done = vec![false; dims.len()];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        if u[s] != 0.0 {
            u[s] = 0.0;
            heap.push(Entry { u: 0.0, idx: s });
        }
    }
    let h = spacing.to_array();
    let strides = [1i64, dims.nx as i64, (dims.nx * dims.ny) as i64];
    let extent = dims.to_array();
    while let Some(Entry { u: val, idx }) = heap.pop() {
        if done[idx] || val > u[idx] {
            continue;
        }
        done[idx] = true;
        let c = dims.coords(idx);
        for axis in 0..3 {
            for dir in [-1i64, 1] {
                let nc = c[axis] as i64 + dir;
                if nc < 0 || nc >= extent[axis] as i64 {
                    continue;
                }
                let j = (idx as i64 + dir * strides[axis]) as usize;
                if done[j] || !passable[j] {
                    continue;
                }
                let cand = update(j, dims, &u, &done, &h, &strides, slowness(j));
                if cand < u[j] {
                    u[j] = cand;
                    heap.push(Entry { u: cand, idx: j });
                }
            }
        }
    }
    u
}

/// Upwind quadratic update from accepted neighbours along each axis.
fn update(
    idx: usize,
    dims: Dims,
    u: &[f64],
    done: &[bool],
    h: &[f64; 3],
    strides: &[i64; 3],
    f: f64,
) -> f64 {
    let c = dims.coords(idx);
    let extent = dims.to_array();
    let mut terms: [(f64, f64); 3] = [(f64::INFINITY, 1.0); 3];
    for axis in 0..3 {
        let mut best = f64::INFINITY;
        for dir in [-1i64, 1] {
            let nc = c[axis] as i64 + dir;
            if nc < 0 || nc >= extent[axis] as i64 {
                continue;
            }
            let j = (idx as i64 + dir * strides[axis]) as usize;
            if done[j] && u[j] < best {
                best = u[j];
            }
        }
        terms[axis] = (best, h[axis]);
    }
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Add axes in increasing order while the solution exceeds the next value.
    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, -f * f);
    let mut sol = f64::INFINITY;
    for &(a, hk) in &terms {
        if !a.is_finite() || a >= sol {
            break;
        }
        let w = 1.0 / (hk * hk);
        alpha += w;
        beta += a * w;
        gamma += a * a * w;
        let disc = beta * beta - alpha * gamma;
        sol = if disc >= 0.0 {
            (beta + math::sqrt(disc)) / alpha
        } else {
            a + f * hk
        };
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_distance_is_exact() {
        let d = Dims::new(20, 1, 1);
        let u = march(d, Spacing::UNIT, &[true; 20], |_| 1.0, &[0]);
        for (i, &v) in u.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_front_is_sqrt2_ish() {
        let d = Dims::new(11, 11, 1);
        let u = march(d, Spacing::UNIT, &vec![true; d.len()], |_| 1.0, &[0]);
        let v = u[d.index(10, 10, 0)];
        assert!(v > 14.0 && v < 17.0, "{v}");
    }

    #[test]
    fn impassable_voxels_stay_infinite() {
        let d = Dims::new(5, 1, 1);
        let pass = [true, true, false, true, true];
        let u = march(d, Spacing::UNIT, &pass, |_| 1.0, &[0]);
        assert!(u[3].is_infinite() && u[2].is_infinite());
    }

    #[test]
    fn spacing_scales_distances() {
        let d = Dims::new(5, 1, 1);
        let u = march(d, Spacing::new(2.0, 1.0, 1.0), &[true; 5], |_| 1.0, &[0]);
        assert_eq!(u[4], 8.0);
    }
}
