//! Cross-sectional sweeps towards junctions and critical-point detection.
//!
//! Near each junction a sub-skeleton gets up to two sweep intervals. Along an
//! interval the object is sliced orthogonally to the path; each slice's
//! contour is compared with the running mean of the slices seen so far, and
//! the sweep stops where the normalized Hausdorff distance reaches `θ_H`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geom::{distance_to_polygon, point_in_polygon, polygon_area, Vec2, Vec3};
use crate::math;
use crate::params::{ContourRadius, HausdorffMetric};
use crate::skelgraph::{SubSkeleton, TANGENT_WINDOW};
use crate::volume::{BinaryVolume, Grid, ScalarField};

/// Closed cross-sectional contour in the local frame of its plane.
///
/// Points are `(a, b)` offsets from `origin` along `frame.normal` and
/// `frame.binormal`, counterclockwise, uniformly spaced by arc length.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Contour {
    pub points: Vec<Vec2>,
    pub origin: Vec3,
    pub frame: Frame,
}

impl Contour {
    pub fn new(points: Vec<Vec2>, origin: Vec3, frame: Frame) -> Self {
        Self {
            points,
            origin,
            frame,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Signed area (positive when counterclockwise).
    pub fn area(&self) -> f64 {
        polygon_area(&self.points)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|i| self.points[i].dist(self.points[(i + 1) % n])).sum()
    }

    pub fn world_points(&self) -> Vec<Vec3> {
        self.points
            .iter()
            .map(|p| self.frame.to_world(self.origin, p.x, p.y))
            .collect()
    }

    /// `n` points uniformly spaced by arc length, starting at the current
    /// first point.
    pub fn resampled(&self, n: usize) -> Contour {
        Contour {
            points: resample_closed(&self.points, n),
            ..self.clone()
        }
    }
}

fn resample_closed(pts: &[Vec2], n: usize) -> Vec<Vec2> {
    let m = pts.len();
    let mut arc = Vec::with_capacity(m + 1);
    arc.push(0.0);
    for i in 0..m {
        let d = pts[i].dist(pts[(i + 1) % m]);
        arc.push(arc[i] + d);
    }
    let total = arc[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while seg + 1 < m && arc[seg + 1] <= s {
            seg += 1;
        }
        let len = arc[seg + 1] - arc[seg];
        let t = if len > 0.0 { (s - arc[seg]) / len } else { 0.0 };
        out.push(pts[seg].lerp(pts[(seg + 1) % m], t));
    }
    out
}

/// Lazily sampled occupancy on a half-voxel grid in a plane.
struct PlaneGrid<'a> {
    vol: &'a BinaryVolume,
    origin: Vec3,
    frame: Frame,
    step: f64,
    r: i64,
    values: Vec<f64>,
}

impl<'a> PlaneGrid<'a> {
    fn new(vol: &'a BinaryVolume, origin: Vec3, frame: Frame, r: i64) -> Self {
        let side = (2 * r + 1) as usize;
        Self {
            vol,
            origin,
            frame,
            step: 0.5 * vol.spacing().min(),
            r,
            values: vec![f64::NAN; side * side],
        }
    }

    fn slot(&self, i: i64, j: i64) -> usize {
        let side = 2 * self.r + 1;
        ((j + self.r) * side + (i + self.r)) as usize
    }

    fn local(&self, i: i64, j: i64) -> Vec2 {
        Vec2::new(i as f64 * self.step, j as f64 * self.step)
    }

    fn value(&mut self, i: i64, j: i64) -> f64 {
        let k = self.slot(i, j);
        if self.values[k].is_nan() {
            let l = self.local(i, j);
            self.values[k] = self.vol.occupancy(self.frame.to_world(self.origin, l.x, l.y));
        }
        self.values[k]
    }

    /// 4-connected samples with occupancy ≥ 0.5 reachable from the centre;
    /// `None` if the region touches the grid border.
    fn flood(&mut self) -> Option<Vec<bool>> {
        let side = (2 * self.r + 1) as usize;
        let mut region = vec![false; side * side];
        let mut stack = vec![(0i64, 0i64)];
        region[self.slot(0, 0)] = true;
        while let Some((i, j)) = stack.pop() {
            if i.abs() == self.r || j.abs() == self.r {
                return None;
            }
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (a, b) = (i + di, j + dj);
                let k = self.slot(a, b);
                if !region[k] && self.value(a, b) >= 0.5 {
                    region[k] = true;
                    stack.push((a, b));
                }
            }
        }
        Some(region)
    }
}

/// Contour of the object slice through `origin` orthogonal to
/// `frame.tangent`: the iso-0.5 line of trilinear occupancy around the
/// region containing `origin`, resampled to `n_samples` points that start at
/// the largest local `a` and run counterclockwise.
pub fn cross_section(vol: &BinaryVolume, origin: Vec3, frame: Frame, n_samples: usize) -> Result<Contour> {
    if vol.occupancy(origin) < 0.5 {
        return Err(Error::SectionOutside(origin));
    }
    let extent = vol.dims().to_array();
    let sp = vol.spacing().to_array();
    let diag = math::sqrt((0..3).map(|k| extent[k] as f64 * sp[k]).map(|e| e * e).sum::<f64>());
    let max_r = (2.0 * diag / vol.spacing().min()) as i64 + 4;
    let mut r = 32i64;
    let (grid, region) = loop {
        let mut grid = PlaneGrid::new(vol, origin, frame, r);
        if let Some(region) = grid.flood() {
            break (grid, region);
        }
        if r >= max_r {
            return Err(Error::NoContour(origin));
        }
        r = (2 * r).min(max_r);
    };
    let loop_pts = outer_loop(grid, &region).ok_or(Error::NoContour(origin))?;
    if polygon_area(&loop_pts) <= 1e-12 {
        return Err(Error::DegenerateContour);
    }
    let start = (0..loop_pts.len())
        .max_by(|&a, &b| {
            loop_pts[a]
                .x
                .total_cmp(&loop_pts[b].x)
                .then_with(|| loop_pts[b].y.total_cmp(&loop_pts[a].y))
        })
        .unwrap_or(0);
    let rotated: Vec<Vec2> = loop_pts[start..].iter().chain(loop_pts[..start].iter()).copied().collect();
    Ok(Contour::new(resample_closed(&rotated, n_samples), origin, frame))
}

/// Marching squares on the flooded region; returns the counterclockwise
/// boundary loop that encloses the centre.
fn outer_loop(mut grid: PlaneGrid<'_>, region: &[bool]) -> Option<Vec<Vec2>> {
    let r = grid.r;
    let inside = |g: &PlaneGrid<'_>, i: i64, j: i64| region[g.slot(i, j)];
    // Cells (by lower-left corner) touching the region.
    let mut cells = Vec::new();
    for j in -r..=r {
        for i in -r..=r {
            if region[grid.slot(i, j)] {
                for (di, dj) in [(0, 0), (-1, 0), (0, -1), (-1, -1)] {
                    cells.push((j + dj, i + di));
                }
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    // Edge key: (i, j, 0) runs to (i + 1, j); (i, j, 1) runs to (i, j + 1).
    type Key = (i64, i64, u8);
    let mut segs: BTreeMap<Key, (Key, Vec2)> = BTreeMap::new();
    for &(j, i) in &cells {
        let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
        let ins = corners.map(|(a, b)| inside(&grid, a, b));
        let keys: [Key; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
        for k in 0..4 {
            if !(ins[k] && !ins[(k + 1) % 4]) {
                continue;
            }
            let m = (1..4)
                .map(|d| (k + d) % 4)
                .find(|&m| !ins[m] && ins[(m + 1) % 4])
                .expect("every exit has an entry");
            let p = crossing(&mut grid, keys[k]);
            segs.insert(keys[k], (keys[m], p));
        }
    }
    let mut loops = Vec::new();
    let mut used: BTreeMap<Key, ()> = BTreeMap::new();
    for &start in segs.keys() {
        if used.contains_key(&start) {
            continue;
        }
        let mut pts = Vec::new();
        let mut k = start;
        loop {
            used.insert(k, ());
            let (next, p) = segs[&k];
            pts.push(p);
            if next == start || used.contains_key(&next) || !segs.contains_key(&next) {
                break;
            }
            k = next;
        }
        loops.push(pts);
    }
    loops
        .into_iter()
        .filter(|l| l.len() >= 3 && polygon_area(l) > 0.0 && point_in_polygon(Vec2::ZERO, l))
        .max_by(|a, b| polygon_area(a).total_cmp(&polygon_area(b)))
}

/// Iso-0.5 point on a grid edge with exactly one region endpoint.
fn crossing(grid: &mut PlaneGrid<'_>, key: (i64, i64, u8)) -> Vec2 {
    let (i, j, dir) = key;
    let (i2, j2) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
    let (v0, v1) = (grid.value(i, j), grid.value(i2, j2));
    let (v0, v1) = (v0.min(1.0), v1.min(1.0));
    let t = if (v1 - v0).abs() > 1e-15 {
        ((0.5 - v0) / (v1 - v0)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    grid.local(i, j).lerp(grid.local(i2, j2), t)
}

fn directed_max(a: &[Vec2], b: &[Vec2]) -> f64 {
    math::sqrt(
        a.iter()
            .map(|p| b.iter().map(|q| p.dist_sq(*q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max),
    )
}

fn directed_mean(a: &[Vec2], b: &[Vec2]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .map(|p| math::sqrt(b.iter().map(|q| p.dist_sq(*q)).fold(f64::INFINITY, f64::min)))
        .sum();
    sum / a.len() as f64
}

/// Symmetric Hausdorff distance between the sample points.
pub fn hausdorff(c1: &Contour, c2: &Contour) -> f64 {
    directed_max(&c1.points, &c2.points).max(directed_max(&c2.points, &c1.points))
}

/// Larger of the two directed mean nearest-point distances.
pub fn modified_hausdorff(c1: &Contour, c2: &Contour) -> f64 {
    directed_mean(&c1.points, &c2.points).max(directed_mean(&c2.points, &c1.points))
}

pub fn contour_distance(c1: &Contour, c2: &Contour, metric: HausdorffMetric) -> f64 {
    match metric {
        HausdorffMetric::Hausdorff => hausdorff(c1, c2),
        HausdorffMetric::Modified => modified_hausdorff(c1, c2),
    }
}

/// Outward unit normal of a counterclockwise contour at point `i`.
fn outward_normal(pts: &[Vec2], i: usize) -> Vec2 {
    let n = pts.len();
    let t = pts[(i + 1) % n] - pts[(i + n - 1) % n];
    let len = t.norm();
    if len == 0.0 {
        return Vec2::ZERO;
    }
    Vec2::new(t.y / len, -t.x / len)
}

/// Running mean of contours by displacement along the mean's normals.
///
/// `mu` already averages `k` contours. Each mean point moves towards the
/// nearest crossing of its normal line with `c_new` by `1 / (k + 1)` of the
/// way. Points whose normal misses `c_new` move towards the nearest point of
/// `c_new` instead; their count is returned.
pub fn mean_update(mu: &Contour, c_new: &Contour, k: usize) -> Result<(Contour, usize)> {
    if mu.len() != c_new.len() {
        return Err(Error::ContourLength(mu.len(), c_new.len()));
    }
    let w = 1.0 / (k as f64 + 1.0);
    let pts = &mu.points;
    let other = &c_new.points;
    let m = other.len();
    let mut missed = 0;
    let mut out = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let p = pts[i];
        let nrm = outward_normal(pts, i);
        let mut best: Option<f64> = None;
        if nrm != Vec2::ZERO {
            for j in 0..m {
                let (a, b) = (other[j], other[(j + 1) % m]);
                let e = b - a;
                let den = nrm.perp_dot(e);
                if den.abs() < 1e-15 {
                    continue;
                }
                let ap = a - p;
                let s = ap.perp_dot(e) / den;
                let u = ap.perp_dot(nrm) / den;
                if (-1e-12..=1.0 + 1e-12).contains(&u) && best.is_none_or(|b| s.abs() < b.abs()) {
                    best = Some(s);
                }
            }
        }
        match best {
            Some(s) => out.push(p + nrm * (s * w)),
            None => {
                missed += 1;
                let q = other
                    .iter()
                    .copied()
                    .min_by(|a, b| a.dist_sq(p).total_cmp(&b.dist_sq(p)))
                    .unwrap_or(p);
                out.push(p + (q - p) * w);
            }
        }
    }
    Ok((
        Contour {
            points: out,
            ..mu.clone()
        },
        missed,
    ))
}

/// `h / (h + d)`.
pub fn normalize(h: f64, d: f64) -> f64 {
    h / (h + d)
}

/// Size of a contour seen from its centre `kappa` (local coordinates).
pub fn contour_radius(c: &Contour, kappa: Vec2, mode: ContourRadius) -> f64 {
    match mode {
        ContourRadius::Nearest => distance_to_polygon(kappa, &c.points),
        ContourRadius::Farthest => c.points.iter().map(|p| p.dist(kappa)).fold(0.0, f64::max),
    }
}

/// `H_ρ = H / (H + d(κ))` of `c_t` against the mean `mu`, `κ` being the
/// contour origin.
pub fn normalized_hausdorff(
    c_t: &Contour,
    mu: &Contour,
    metric: HausdorffMetric,
    mode: ContourRadius,
) -> Result<f64> {
    let d = contour_radius(c_t, Vec2::ZERO, mode);
    if !(d > 0.0) {
        return Err(Error::DegenerateContour);
    }
    Ok(normalize(contour_distance(c_t, mu, metric), d))
}

/// Which side of the junction an interval lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    /// Below `t_j`, swept with increasing `t`.
    Plus,
    /// Above `t_j`, swept with decreasing `t`.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecompositionInterval {
    pub subskeleton: usize,
    /// Junction vertex id.
    pub junction: usize,
    pub t_j: f64,
    pub side: Side,
    /// Sweep start.
    pub t_s: f64,
    /// Sweep end, between `t_s` and `t_j`.
    pub t_e: f64,
    /// Inscribed radius at the junction.
    pub radius: f64,
}

/// Sweep intervals `[t_j ∓ α_s r, t_j ∓ α_e r]` (clamped to the path) for
/// every junction of `psi`. A side whose clamped interval is empty, as at a
/// path end, is skipped.
pub fn decomposition_intervals(
    psi: &SubSkeleton,
    index: usize,
    dfield: &ScalarField,
    alpha_s: f64,
    alpha_e: f64,
) -> Result<Vec<DecompositionInterval>> {
    let len = psi.length();
    let mut out = Vec::new();
    for jp in &psi.junctions {
        let p = psi.at(jp.t);
        let r = dfield
            .sample(p)
            .filter(|&r| r > 0.0 && r.is_finite())
            .ok_or(Error::UndefinedRadius(p))?;
        let (rs, re) = (alpha_s * r, alpha_e * r);
        let sj = jp.t * len;
        let mut push = |side, s_s: f64, s_e: f64| {
            out.push(DecompositionInterval {
                subskeleton: index,
                junction: jp.vertex,
                t_j: jp.t,
                side,
                t_s: s_s / len,
                t_e: s_e / len,
                radius: r,
            })
        };
        if sj - re > 0.0 {
            push(Side::Plus, (sj - rs).max(0.0), sj - re);
        }
        if sj + re < len {
            push(Side::Minus, (sj + rs).min(len), sj + re);
        }
    }
    Ok(out)
}

/// Sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub theta_h: f64,
    pub sf: usize,
    pub metric: HausdorffMetric,
    pub contour_radius: ContourRadius,
    pub n_samples: usize,
}

/// One inquiry point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub t: f64,
    pub h_rho: f64,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalPoint {
    pub subskeleton: usize,
    pub junction: usize,
    pub side: Side,
    /// Where the sweep stopped.
    pub t_c: f64,
    pub h_rho: f64,
    /// No inquiry point reached `θ_H`.
    pub fallback: bool,
    pub contour: Contour,
    /// Where the object is cut: `t_c` or the inquiry point just before it,
    /// whichever slice is smaller.
    pub cut_t: f64,
    pub cut: Contour,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub critical: CriticalPoint,
    pub trace: Vec<TraceRow>,
    /// Mean-update points whose normal missed the new contour.
    pub missed_rays: usize,
}

struct Inquiry {
    t: f64,
    dist: f64,
    contour: Contour,
    h_rho: f64,
}

/// Runs one interval's sweep from `t_s` towards `t_e`.
pub fn sweep_interval(
    vol: &BinaryVolume,
    psi: &SubSkeleton,
    iv: &DecompositionInterval,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    let h = vol.spacing().min();
    let len = psi.length();
    let (s_s, s_e, s_j) = (iv.t_s * len, iv.t_e * len, iv.t_j * len);
    let dir = if s_e >= s_s { 1.0 } else { -1.0 };
    let steps = math::floor((s_e - s_s).abs() / h + 1e-9) as usize;
    let window = TANGENT_WINDOW * h;
    let mut seen: Vec<Inquiry> = Vec::new();
    let mut trace = Vec::new();
    let mut mu: Option<Contour> = None;
    let mut visits = 0usize;
    let mut missed = 0usize;
    for k in (0..=steps).step_by(opts.sf.max(1)) {
        let s = s_s + dir * k as f64 * h;
        let t = s / len;
        let frame = psi.frame(t, window);
        let Ok(contour) = cross_section(vol, psi.at(t), frame, opts.n_samples) else {
            continue;
        };
        let h_rho = match &mu {
            None => 0.0,
            Some(m) => normalized_hausdorff(&contour, m, opts.metric, opts.contour_radius)?,
        };
        let triggered = mu.is_some() && h_rho >= opts.theta_h;
        trace.push(TraceRow { t, h_rho, triggered });
        let here = Inquiry {
            t,
            dist: (s - s_j).abs(),
            contour,
            h_rho,
        };
        if triggered {
            seen.push(here);
            let k = seen.len() - 1;
            let cut = &seen[cut_site(&seen, k)];
            let here = &seen[k];
            let critical = CriticalPoint {
                subskeleton: iv.subskeleton,
                junction: iv.junction,
                side: iv.side,
                t_c: t,
                h_rho,
                fallback: false,
                contour: here.contour.clone(),
                cut_t: cut.t,
                cut: cut.contour.clone(),
            };
            return Ok(SweepOutcome {
                critical,
                trace,
                missed_rays: missed,
            });
        }
        mu = Some(match mu.take() {
            None => here.contour.clone(),
            Some(m) => {
                let (next, miss) = mean_update(&m, &here.contour, visits)?;
                missed += miss;
                next
            }
        });
        visits += 1;
        seen.push(here);
    }
    if seen.is_empty() {
        return Err(Error::EmptyInterval);
    }
    let admissible: Vec<usize> = (0..seen.len()).filter(|&i| seen[i].dist >= iv.radius - 1e-9).collect();
    let pool: Vec<usize> = if admissible.is_empty() {
        (0..seen.len()).collect()
    } else {
        admissible
    };
    let best_k = pool
        .into_iter()
        .reduce(|a, b| {
            let (qa, qb) = (&seen[a], &seen[b]);
            if qb.h_rho > qa.h_rho || (qb.h_rho == qa.h_rho && qb.dist < qa.dist) {
                b
            } else {
                a
            }
        })
        .expect("nonempty");
    let best = &seen[best_k];
    let cut = &seen[cut_site(&seen, best_k)];
    let critical = CriticalPoint {
        subskeleton: iv.subskeleton,
        junction: iv.junction,
        side: iv.side,
        t_c: best.t,
        h_rho: best.h_rho,
        fallback: true,
        contour: best.contour.clone(),
        cut_t: cut.t,
        cut: cut.contour.clone(),
    };
    Ok(SweepOutcome {
        critical,
        trace,
        missed_rays: missed,
    })
}

/// Sections whose area exceeds the interval's median by more than this
/// fraction are taken to be merged with a neighbouring branch.
pub const CUT_AREA_SLACK: f64 = 0.1;

/// The inquiry point nearest to `k`, walking back toward the sweep start,
/// whose section is not swollen by a neighbouring branch. A disc cut there
/// stays inside its own tube.
fn cut_site(seen: &[Inquiry], k: usize) -> usize {
    let mut areas: Vec<f64> = seen.iter().map(|q| q.contour.area().abs()).collect();
    areas.sort_by(f64::total_cmp);
    let median = areas[areas.len() / 2];
    (0..=k)
        .rev()
        .find(|&i| seen[i].contour.area().abs() <= (1.0 + CUT_AREA_SLACK) * median)
        .unwrap_or(k)
}

/// Sweeps every interval in order.
pub fn find_critical_points(
    vol: &BinaryVolume,
    psi: &SubSkeleton,
    intervals: &[DecompositionInterval],
    opts: &SweepOptions,
) -> Result<Vec<SweepOutcome>> {
    intervals.iter().map(|iv| sweep_interval(vol, psi, iv, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn circle(r: f64, n: usize, phase: f64) -> Contour {
        let pts = (0..n)
            .map(|i| {
                let a = phase + 2.0 * PI * i as f64 / n as f64;
                Vec2::new(r * math::cos(a), r * math::sin(a))
            })
            .collect();
        Contour::new(pts, Vec3::ZERO, Frame::from_tangent(Vec3::Z, Vec3::X))
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let (a, b) = (circle(1.0, 128, 0.0), circle(2.0, 128, 0.0));
        assert!((hausdorff(&a, &b) - 1.0).abs() < 1e-12);
        assert!((modified_hausdorff(&a, &b) - 1.0).abs() < 1e-12);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }

    #[test]
    fn outlier_hurts_hausdorff_more() {
        let a = circle(5.0, 128, 0.0);
        let mut b = a.clone();
        b.points[10] = b.points[10] * 3.0;
        assert!(modified_hausdorff(&a, &b) < hausdorff(&a, &b));
    }

    #[test]
    fn mean_update_halves_displacement() {
        let (a, b) = (circle(1.0, 128, 0.0), circle(2.0, 128, 0.01));
        let (m, missed) = mean_update(&a, &b, 1).unwrap();
        assert_eq!(missed, 0);
        for p in &m.points {
            assert!((p.norm() - 1.5).abs() < 1e-3);
        }
        let (m3, _) = mean_update(&a, &b, 3).unwrap();
        for p in &m3.points {
            assert!((p.norm() - 1.25).abs() < 1e-3);
        }
        let (same, _) = mean_update(&a, &a, 4).unwrap();
        for (p, q) in same.points.iter().zip(&a.points) {
            assert!(p.dist(*q) < 1e-12);
        }
    }

    #[test]
    fn normalized_value() {
        let (c, mu) = (circle(2.0, 128, 0.0), circle(1.0, 128, 0.0));
        let v = normalized_hausdorff(&c, &mu, HausdorffMetric::Hausdorff, ContourRadius::Farthest).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        let z = normalized_hausdorff(&c, &c, HausdorffMetric::Modified, ContourRadius::Nearest).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn resample_is_uniform() {
        let sq = [Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(4.0, 4.0), Vec2::new(0.0, 4.0)];
        let r = resample_closed(&sq, 8);
        assert_eq!(r[1], Vec2::new(2.0, 0.0));
        assert_eq!(r[2], Vec2::new(4.0, 0.0));
        assert_eq!(r[7], Vec2::new(0.0, 2.0));
    }
}
