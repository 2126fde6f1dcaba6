//! Back-tracking along the negative arrival-time gradient.

use alloc::vec::Vec;

use super::Polyline;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::math;
use crate::volume::{Grid, ScalarField};

/// Consecutive non-decreasing steps tolerated before giving up.
const MAX_STAGNATION: usize = 20;

/// Traces from `start` down the arrival-time field until it comes within
/// half a voxel of a zero-arrival voxel, whose centre ends the polyline.
/// `step` is in voxels (of the finest spacing).
pub fn backtrack(arrival: &ScalarField, start: Vec3, step: f64) -> Result<Polyline> {
    let (mut pts, seed) = descend(arrival, start, step)?;
    pts.push(arrival.world(seed));
    Ok(Polyline::new(pts))
}

/// The descent itself: recorded points (arrival strictly decreasing) and
/// the zero-arrival voxel that stopped it.
pub(crate) fn descend(u: &ScalarField, start: Vec3, step: f64) -> Result<(Vec<Vec3>, usize)> {
    let h = u.spacing().min();
    let start_voxel = u
        .nearest_voxel(start)
        .filter(|&i| u.get(i).is_finite())
        .ok_or(Error::SeedOffForeground(u.nearest_voxel(start).unwrap_or(usize::MAX)))?;
    let mut p = start;
    let mut last = u.sample(p).unwrap_or(u.get(start_voxel));
    let mut pts = Vec::new();
    pts.push(p);
    let dims = u.dims();
    let max_steps = 64 * (dims.nx + dims.ny + dims.nz) * math::ceil(1.0 / step) as usize;
    let mut stagnant = 0;
    for _ in 0..max_steps {
        if let Some(seed) = terminal(u, p) {
            return Ok((pts, seed));
        }
        let cand = gradient(u, p)
            .and_then(|g| g.try_normalize(1e-15))
            .map(|g| p - g * (step * h));
        if let Some(c) = cand {
            if let Some(uc) = u.sample(c) {
                if uc < last {
                    p = c;
                    last = uc;
                    pts.push(p);
                    stagnant = 0;
                    continue;
                }
            }
        }
        // Discrete fallback: hop to the lowest neighbouring voxel centre.
        if let Some((w, uw)) = lowest_neighbour(u, p) {
            if uw < last {
                p = u.world(w);
                last = uw;
                pts.push(p);
                stagnant = 0;
                continue;
            }
        }
        stagnant += 1;
        if stagnant > MAX_STAGNATION {
            return Err(Error::Stagnation(p));
        }
        match cand {
            Some(c) if u.sample(c).is_some() => p = c,
            _ => return Err(Error::Stagnation(p)),
        }
    }
    Err(Error::Stagnation(p))
}

/// Zero-arrival voxel that ends the trace at `p`, if any: the nearest voxel
/// itself, or a cell corner within half a voxel.
fn terminal(u: &ScalarField, p: Vec3) -> Option<usize> {
    if let Some(v) = u.nearest_voxel(p) {
        if u.get(v) == 0.0 {
            return Some(v);
        }
    }
    let h = u.spacing().min();
    let mut best: Option<(f64, usize)> = None;
    for_corners(u, p, |i, _| {
        if u.get(i) == 0.0 {
            let d = u.world(i).dist(p);
            if d <= 0.5 * h && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
    });
    best.map(|(_, i)| i)
}

fn for_corners(u: &ScalarField, p: Vec3, mut f: impl FnMut(usize, f64)) {
    let v = u.to_voxel(p);
    let (fx, fy, fz) = (math::floor(v.x), math::floor(v.y), math::floor(v.z));
    let t = [v.x - fx, v.y - fy, v.z - fz];
    for m in 0..8 {
        let d = [m & 1, (m >> 1) & 1, (m >> 2) & 1];
        let w: f64 = (0..3)
            .map(|k| if d[k] == 1 { t[k] } else { 1.0 - t[k] })
            .product();
        if let Some(i) = u.dims().checked_index(
            fx as i64 + d[0] as i64,
            fy as i64 + d[1] as i64,
            fz as i64 + d[2] as i64,
        ) {
            f(i, w);
        }
    }
}

/// Per-voxel gradient by central differences, one-sided where a neighbour
/// is unreachable.
fn voxel_gradient(u: &ScalarField, idx: usize) -> Vec3 {
    let [x, y, z] = u.dims().coords(idx);
    let (x, y, z) = (x as i64, y as i64, z as i64);
    let c = u.get(idx);
    let h = u.spacing().to_array();
    let mut g = [0.0; 3];
    for axis in 0..3 {
        let mut o = [0i64; 3];
        o[axis] = 1;
        let plus = u.get_signed(x + o[0], y + o[1], z + o[2]);
        let minus = u.get_signed(x - o[0], y - o[1], z - o[2]);
        g[axis] = match (plus.is_finite(), minus.is_finite()) {
            (true, true) => (plus - minus) / (2.0 * h[axis]),
            (true, false) => (plus - c) / h[axis],
            (false, true) => (c - minus) / h[axis],
            (false, false) => 0.0,
        };
    }
    Vec3::from_array(g)
}

/// Trilinear interpolation of voxel gradients over reachable corners.
fn gradient(u: &ScalarField, p: Vec3) -> Option<Vec3> {
    let mut acc = Vec3::ZERO;
    let mut wsum = 0.0;
    for_corners(u, p, |i, w| {
        if w > 0.0 && u.get(i).is_finite() {
            acc += voxel_gradient(u, i) * w;
            wsum += w;
        }
    });
    (wsum > 0.0).then(|| acc / wsum)
}

fn lowest_neighbour(u: &ScalarField, p: Vec3) -> Option<(usize, f64)> {
    let v = u.nearest_voxel(p)?;
    let [x, y, z] = u.dims().coords(v);
    let mut best: Option<(usize, f64)> = None;
    for dz in -1..=1i64 {
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if let Some(j) = u.dims().checked_index(x as i64 + dx, y as i64 + dy, z as i64 + dz) {
                    let val = u.get(j);
                    if val.is_finite() && best.is_none_or(|(_, b)| val < b) {
                        best = Some((j, val));
                    }
                }
            }
        }
    }
    best
}
