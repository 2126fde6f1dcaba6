//! Procedural tube scenes with ground truth.
//!
//! A tube is the set of points within `radius(s)` of a polyline axis,
//! where `s` is the normalized arc position of the nearest axis point, so
//! ends are rounded caps. The ground-truth label of a voxel is that of the
//! nearest axis among the tubes containing it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{closest_on_segment, Vec3};
use crate::math;
use crate::skeleton::Polyline;
use crate::volume::{BinaryVolume, Dims, Grid, LabelVolume, Spacing};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TubeSpec {
    /// Axis control points in world coordinates.
    pub axis: Vec<[f64; 3]>,
    /// Radius at the first control point.
    pub radius: f64,
    /// Radius at the last control point, for a linear taper.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub end_radius: Option<f64>,
    pub label: u32,
}

impl TubeSpec {
    pub fn new(axis: &[Vec3], radius: f64, label: u32) -> Self {
        Self {
            axis: axis.iter().map(|p| p.to_array()).collect(),
            radius,
            end_radius: None,
            label,
        }
    }

    pub fn tapered(axis: &[Vec3], start: f64, end: f64, label: u32) -> Self {
        Self {
            end_radius: Some(end),
            ..Self::new(axis, start, label)
        }
    }

    pub fn polyline(&self) -> Polyline {
        Polyline::new(self.axis.iter().map(|&a| Vec3::from_array(a)))
    }

    /// Radius at normalized arc position `s`.
    pub fn radius_at(&self, s: f64) -> f64 {
        match self.end_radius {
            Some(e) => self.radius + (e - self.radius) * s,
            None => self.radius,
        }
    }

    fn max_radius(&self) -> f64 {
        self.radius.max(self.end_radius.unwrap_or(self.radius))
    }

    fn min_radius(&self) -> f64 {
        self.radius.min(self.end_radius.unwrap_or(self.radius))
    }

    /// Distance to the axis and the radius there.
    fn probe(&self, axis: &Polyline, p: Vec3) -> (f64, f64) {
        let pts = axis.points();
        if pts.len() == 1 {
            return (pts[0].dist(p), self.radius);
        }
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..pts.len() - 1 {
            let (q, t) = closest_on_segment(p, pts[i], pts[i + 1]);
            let d = q.dist(p);
            if d < best.0 {
                let arc = axis.arc()[i] + t * (axis.arc()[i + 1] - axis.arc()[i]);
                best = (d, arc);
            }
        }
        let s = if axis.length() > 0.0 { best.1 / axis.length() } else { 0.0 };
        (best.0, self.radius_at(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scene {
    pub dims: [usize; 3],
    #[cfg_attr(feature = "serde", serde(default = "unit_spacing"))]
    pub spacing: [f64; 3],
    pub tubes: Vec<TubeSpec>,
}

#[cfg(feature = "serde")]
fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

/// Rasterized scene.
#[derive(Debug, Clone)]
pub struct Rasterized {
    pub volume: BinaryVolume,
    pub truth: LabelVolume,
    /// Analytic axes in tube order.
    pub axes: Vec<Polyline>,
}

/// Voxelizes the union of tubes (voxel centre within the radius).
pub fn rasterize_scene(specs: &[TubeSpec], dims: Dims, spacing: Spacing) -> Result<Rasterized> {
    let mut truth = LabelVolume::new(dims, spacing, vec![0; dims.len()])?;
    let mut best = vec![f64::INFINITY; dims.len()];
    let hi = [
        (dims.nx - 1) as f64 * spacing.sx,
        (dims.ny - 1) as f64 * spacing.sy,
        (dims.nz - 1) as f64 * spacing.sz,
    ];
    let mut order: Vec<usize> = (0..specs.len()).collect();
    order.sort_by_key(|&i| specs[i].label);
    for &ti in &order {
        let spec = &specs[ti];
        if spec.min_radius() <= 1.5 * spacing.min() {
            return Err(Error::TubeTooThin {
                label: spec.label,
                radius: spec.min_radius(),
            });
        }
        if spec.axis.is_empty() || spec.label == 0 {
            return Err(Error::Other(alloc::format!("tube {} needs an axis and a nonzero label", spec.label)));
        }
        let r = spec.max_radius();
        let fits = spec
            .axis
            .iter()
            .all(|a| (0..3).all(|k| a[k] - r >= -1e-9 && a[k] + r <= hi[k] + 1e-9));
        if !fits {
            return Err(Error::TubeOutOfBounds { label: spec.label });
        }
        let axis = spec.polyline();
        let (lo, up) = bbox(&axis, r, spacing, dims);
        for z in lo[2]..=up[2] {
            for y in lo[1]..=up[1] {
                for x in lo[0]..=up[0] {
                    let i = dims.index(x, y, z);
                    let p = truth.world(i);
                    let (d, rad) = spec.probe(&axis, p);
                    if d <= rad && d < best[i] {
                        best[i] = d;
                        truth.set(i, spec.label);
                    }
                }
            }
        }
    }
    let volume = truth.support();
    let axes = specs.iter().map(TubeSpec::polyline).collect();
    Ok(Rasterized { volume, truth, axes })
}

fn bbox(axis: &Polyline, r: f64, s: Spacing, dims: Dims) -> ([usize; 3], [usize; 3]) {
    let sp = s.to_array();
    let n = dims.to_array();
    let mut lo = [0usize; 3];
    let mut up = [0usize; 3];
    for k in 0..3 {
        let (mn, mx) = axis
            .points()
            .iter()
            .map(|p| p.to_array()[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        lo[k] = math::floor((mn - r) / sp[k]).max(0.0) as usize;
        up[k] = (math::ceil((mx + r) / sp[k]) as usize).min(n[k] - 1);
    }
    (lo, up)
}

impl Scene {
    pub fn grid(&self) -> (Dims, Spacing) {
        (
            Dims::new(self.dims[0], self.dims[1], self.dims[2]),
            Spacing::new(self.spacing[0], self.spacing[1], self.spacing[2]),
        )
    }

    pub fn rasterize(&self) -> Result<Rasterized> {
        let (d, s) = self.grid();
        rasterize_scene(&self.tubes, d, s)
    }

    fn unit(dims: [usize; 3], tubes: Vec<TubeSpec>) -> Scene {
        Scene {
            dims,
            spacing: [1.0; 3],
            tubes,
        }
    }
}

/// Odd extent so the middle falls on a voxel centre.
fn odd(n: f64) -> usize {
    let n = math::ceil(n) as usize;
    n | 1
}

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// One straight tube along x, centred in the cross-section.
pub fn straight_tube(length: f64, radius: f64) -> Scene {
    let n = odd(2.0 * radius + 6.0);
    let c = (n as f64 - 1.0) / 2.0;
    let nx = odd(length + 2.0 * radius + 6.0);
    let x0 = radius + 3.0;
    Scene::unit(
        [nx, n, n],
        vec![TubeSpec::new(&[v(x0, c, c), v(x0 + length, c, c)], radius, 1)],
    )
}

/// Two perpendicular tubes crossing at their midpoints.
pub fn x_crossing(radius: f64) -> Scene {
    let arm = 8.0 * radius;
    let n = odd(2.0 * arm + 2.0 * radius + 8.0);
    let c = (n as f64 - 1.0) / 2.0;
    let nz = odd(2.0 * radius + 8.0);
    let cz = (nz as f64 - 1.0) / 2.0;
    Scene::unit(
        [n, n, nz],
        vec![
            TubeSpec::new(&[v(c - arm, c, cz), v(c + arm, c, cz)], radius, 1),
            TubeSpec::new(&[v(c, c - arm, cz), v(c, c + arm, cz)], radius, 2),
        ],
    )
}

/// Three tubes meeting at one point, 120 degrees apart.
pub fn y_shape(radius: f64) -> Scene {
    let arm = 8.0 * radius;
    let n = odd(2.0 * arm + 2.0 * radius + 8.0);
    let c = (n as f64 - 1.0) / 2.0;
    let nz = odd(2.0 * radius + 8.0);
    let cz = (nz as f64 - 1.0) / 2.0;
    let tubes = (0..3)
        .map(|k| {
            let a = core::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * core::f64::consts::PI / 3.0;
            let end = v(c + arm * math::cos(a), c + arm * math::sin(a), cz);
            TubeSpec::new(&[v(c, c, cz), end], radius, k + 1)
        })
        .collect();
    Scene::unit([n, n, nz], tubes)
}

/// Straight tube with a linear taper from `r0` to `r1`.
pub fn tapering_tube(length: f64, r0: f64, r1: f64) -> Scene {
    let r = r0.max(r1);
    let n = odd(2.0 * r + 6.0);
    let c = (n as f64 - 1.0) / 2.0;
    let nx = odd(length + 2.0 * r + 6.0);
    let x0 = r + 3.0;
    Scene::unit(
        [nx, n, n],
        vec![TubeSpec::tapered(&[v(x0, c, c), v(x0 + length, c, c)], r0, r1, 1)],
    )
}

/// A tube with a right-angle bend.
pub fn l_tube(leg: f64, radius: f64) -> Scene {
    let m = math::ceil(radius) + 3.0;
    let n = odd(leg + 2.0 * m);
    let nz = odd(2.0 * m);
    let cz = (nz as f64 - 1.0) / 2.0;
    Scene::unit(
        [n, n, nz],
        vec![TubeSpec::new(&[v(m, m, cz), v(m + leg, m, cz), v(m + leg, m + leg, cz)], radius, 1)],
    )
}

/// Three tubes in an 800×400×70 grid: a long straight tube crossed by two
/// mirrored tubes at about 60 degrees, giving two crossings.
pub fn weave() -> Scene {
    let r = 10.0;
    Scene::unit(
        [800, 400, 70],
        vec![
            TubeSpec::new(&[v(40.0, 200.0, 35.0), v(760.0, 200.0, 35.0)], r, 1),
            TubeSpec::new(&[v(180.0, 45.0, 25.0), v(360.0, 355.0, 45.0)], r, 2),
            TubeSpec::new(&[v(620.0, 45.0, 25.0), v(440.0, 355.0, 45.0)], r, 3),
        ],
    )
}

/// Five-branch object in a 128³ grid: a main tube with a perpendicular side
/// tube at one junction and a symmetric ±60° fork at a second junction,
/// the junctions far enough apart to be swept separately.
pub fn five_branch() -> Scene {
    let r = 4.0;
    let j1 = v(34.0, 64.0, 64.0);
    let j2 = v(88.0, 64.0, 64.0);
    let arm = 32.0;
    let (c, s) = (0.5, math::sqrt(3.0) / 2.0);
    Scene::unit(
        [128, 128, 128],
        vec![
            TubeSpec::new(&[v(10.0, 64.0, 64.0), j1, j2], r, 1),
            TubeSpec::new(&[j1, v(34.0, 108.0, 64.0)], r, 2),
            TubeSpec::new(&[j2, j2 + v(arm * c, arm * s, 0.0)], r, 3),
            TubeSpec::new(&[j2, j2 + v(arm * c, -arm * s, 0.0)], r, 4),
        ],
    )
}

/// Body along x crossed by two straight legs 40 voxels apart.
pub fn four_leg() -> Scene {
    let r = 6.0;
    Scene::unit(
        [128, 128, 40],
        vec![
            TubeSpec::new(&[v(14.0, 64.0, 20.0), v(114.0, 64.0, 20.0)], r, 1),
            TubeSpec::new(&[v(44.0, 34.0, 20.0), v(44.0, 94.0, 20.0)], r, 2),
            TubeSpec::new(&[v(84.0, 34.0, 20.0), v(84.0, 94.0, 20.0)], r, 3),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn straight_tube_volume_matches_cylinder() {
        let s = Scene::unit(
            [120, 20, 20],
            vec![TubeSpec::new(&[v(10.0, 9.5, 9.5), v(110.0, 9.5, 9.5)], 5.0, 1)],
        );
        let r = s.rasterize().unwrap();
        // Cylinder plus the two half-ball caps.
        let expect = PI * 25.0 * 100.0 + 4.0 / 3.0 * PI * 125.0;
        let got = r.volume.count() as f64;
        assert!((got - expect).abs() / expect < 0.03, "{got} vs {expect}");
    }

    #[test]
    fn crossing_truth_has_two_labels_covering_foreground() {
        let r = x_crossing(5.0).rasterize().unwrap();
        assert_eq!(r.truth.label_count(), 2);
        assert_eq!(r.truth.support(), r.volume);
    }

    #[test]
    fn out_of_bounds_and_thin_rejected() {
        let t = TubeSpec::new(&[v(2.0, 5.0, 5.0), v(8.0, 5.0, 5.0)], 3.0, 1);
        assert!(matches!(
            rasterize_scene(&[t], Dims::new(20, 20, 20), Spacing::UNIT),
            Err(Error::TubeOutOfBounds { label: 1 })
        ));
        let t = TubeSpec::new(&[v(5.0, 5.0, 5.0), v(8.0, 5.0, 5.0)], 1.0, 1);
        assert!(matches!(
            rasterize_scene(&[t], Dims::new(20, 20, 20), Spacing::UNIT),
            Err(Error::TubeTooThin { .. })
        ));
    }

    #[test]
    fn taper_interpolates_radius() {
        let t = TubeSpec::tapered(&[Vec3::ZERO, Vec3::X], 2.0, 4.0, 1);
        assert_eq!(t.radius_at(0.5), 3.0);
    }
}
