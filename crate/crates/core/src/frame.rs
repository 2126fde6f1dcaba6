//! Rotation-minimizing frames along sampled curves (double reflection).

use alloc::vec::Vec;

use crate::geom::Vec3;
use crate::math;

/// Orthonormal moving frame: `tangent`, `normal`, `binormal = tangent × normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frame {
    pub tangent: Vec3,
    pub normal: Vec3,
    pub binormal: Vec3,
}

impl Frame {
    /// Frame with the given tangent whose normal is `hint` made orthogonal to
    /// it (or an arbitrary perpendicular when `hint` is parallel).
    pub fn from_tangent(tangent: Vec3, hint: Vec3) -> Frame {
        let t = tangent.normalize();
        let n = (hint - t * hint.dot(t))
            .try_normalize(1e-9)
            .unwrap_or_else(|| t.any_orthogonal());
        Frame {
            tangent: t,
            normal: n,
            binormal: t.cross(n),
        }
    }

    /// World point of local in-plane coordinates `(a, b)` around `origin`.
    pub fn to_world(&self, origin: Vec3, a: f64, b: f64) -> Vec3 {
        origin + self.normal * a + self.binormal * b
    }

    /// Largest deviation from orthonormality.
    pub fn orthonormality_error(&self) -> f64 {
        let (t, n, b) = (self.tangent, self.normal, self.binormal);
        [
            (t.dot(t) - 1.0).abs(),
            (n.dot(n) - 1.0).abs(),
            (b.dot(b) - 1.0).abs(),
            t.dot(n).abs(),
            t.dot(b).abs(),
            n.dot(b).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Unit tangents of a polyline by central differences (one-sided at ends).
/// Repeated points reuse the neighbouring tangent.
pub fn polyline_tangents(points: &[Vec3]) -> Vec<Vec3> {
    let n = points.len();
    let mut out: Vec<Option<Vec3>> = (0..n)
        .map(|i| {
            let a = points[i.saturating_sub(1)];
            let b = points[(i + 1).min(n - 1)];
            (b - a).try_normalize(1e-12)
        })
        .collect();
    for i in 1..n {
        if out[i].is_none() {
            out[i] = out[i - 1];
        }
    }
    for i in (0..n.saturating_sub(1)).rev() {
        if out[i].is_none() {
            out[i] = out[i + 1];
        }
    }
    out.into_iter().map(|t| t.unwrap_or(Vec3::X)).collect()
}

/// Transports `initial_normal` along the sampled curve with the double
/// reflection rule, returning one frame per sample.
pub fn rotation_minimizing(points: &[Vec3], tangents: &[Vec3], initial_normal: Vec3) -> Vec<Frame> {
    assert_eq!(points.len(), tangents.len());
    let mut frames = Vec::with_capacity(points.len());
    if points.is_empty() {
        return frames;
    }
    frames.push(Frame::from_tangent(tangents[0], initial_normal));
    for i in 0..points.len() - 1 {
        let prev = frames[i];
        let t1 = tangents[i + 1].normalize();
        let v1 = points[i + 1] - points[i];
        let c1 = v1.norm_sq();
        let (r_l, t_l) = if c1 > 1e-24 {
            (
                prev.normal - v1 * (2.0 / c1 * v1.dot(prev.normal)),
                prev.tangent - v1 * (2.0 / c1 * v1.dot(prev.tangent)),
            )
        } else {
            (prev.normal, prev.tangent)
        };
        let v2 = t1 - t_l;
        let c2 = v2.norm_sq();
        let r = if c2 > 1e-24 {
            r_l - v2 * (2.0 / c2 * v2.dot(r_l))
        } else {
            r_l
        };
        frames.push(Frame::from_tangent(t1, r));
    }
    frames
}

/// Angle in radians between the normals of two consecutive frames.
pub fn normal_jump(a: &Frame, b: &Frame) -> f64 {
    math::acos(a.normal.dot(b.normal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_keeps_normal() {
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let f = rotation_minimizing(&pts, &polyline_tangents(&pts), Vec3::Y);
        for fr in &f {
            assert!((fr.normal - Vec3::Y).norm() < 1e-12);
            assert!((fr.binormal - Vec3::Z).norm() < 1e-12);
        }
    }

    #[test]
    fn helix_frames_stay_orthonormal() {
        let pts: Vec<Vec3> = (0..400)
            .map(|i| {
                let s = i as f64 * 0.05;
                Vec3::new(math::cos(s) * 5.0, math::sin(s) * 5.0, s)
            })
            .collect();
        let f = rotation_minimizing(&pts, &polyline_tangents(&pts), Vec3::X);
        for w in f.windows(2) {
            assert!(w[1].orthonormality_error() < 1e-9);
            assert!(normal_jump(&w[0], &w[1]) < 0.1);
        }
    }

    #[test]
    fn planar_arc_normal_stays_in_plane_complement() {
        // A circle in the xy plane with initial normal +z: the RMF keeps +z.
        let pts: Vec<Vec3> = (0..100)
            .map(|i| {
                let s = i as f64 * 0.03;
                Vec3::new(math::cos(s), math::sin(s), 0.0)
            })
            .collect();
        let f = rotation_minimizing(&pts, &polyline_tangents(&pts), Vec3::Z);
        for fr in &f {
            assert!((fr.normal - Vec3::Z).norm() < 1e-9);
        }
    }
}
