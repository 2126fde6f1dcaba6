use alloc::vec::Vec;

use crate::geom::{closest_on_segment, Vec3};

/// Ordered sub-voxel points with cumulative arc length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyline {
    points: Vec<Vec3>,
    arc: Vec<f64>,
}

/// Where a query point projects onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Vec3,
    /// Segment index `i` (between points `i` and `i + 1`).
    pub segment: usize,
    /// Parameter within the segment.
    pub t: f64,
    pub distance: f64,
    /// Arc length from the start to `point`.
    pub arc: f64,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points.
    pub fn new(points: impl IntoIterator<Item = Vec3>) -> Self {
        let mut out = Polyline::default();
        for p in points {
            out.push(p);
        }
        out
    }

    pub fn push(&mut self, p: Vec3) {
        match self.points.last() {
            None => {
                self.points.push(p);
                self.arc.push(0.0);
            }
            Some(&q) => {
                let d = q.dist(p);
                if d > 1e-12 {
                    self.points.push(p);
                    self.arc.push(self.arc[self.arc.len() - 1] + d);
                }
            }
        }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Cumulative arc length at each point.
    pub fn arc(&self) -> &[f64] {
        &self.arc
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.arc.last().copied().unwrap_or(0.0)
    }

    pub fn first(&self) -> Vec3 {
        self.points[0]
    }

    pub fn last(&self) -> Vec3 {
        self.points[self.points.len() - 1]
    }

    pub fn reversed(&self) -> Polyline {
        Polyline::new(self.points.iter().rev().copied())
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn at_arc(&self, s: f64) -> Vec3 {
        let n = self.points.len();
        if n == 1 || s <= 0.0 {
            return self.points[0];
        }
        if s >= self.length() {
            return self.points[n - 1];
        }
        let i = self.arc.partition_point(|&a| a <= s).saturating_sub(1).min(n - 2);
        let t = (s - self.arc[i]) / (self.arc[i + 1] - self.arc[i]);
        self.points[i].lerp(self.points[i + 1], t)
    }

    /// Point at normalized arc length `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> Vec3 {
        self.at_arc(t * self.length())
    }

    /// Closest point on the polyline to `p`, earliest segment on ties.
    pub fn project(&self, p: Vec3) -> Projection {
        if self.points.len() == 1 {
            return Projection {
                point: self.points[0],
                segment: 0,
                t: 0.0,
                distance: self.points[0].dist(p),
                arc: 0.0,
            };
        }
        let mut best: Option<Projection> = None;
        for i in 0..self.points.len() - 1 {
            let (q, t) = closest_on_segment(p, self.points[i], self.points[i + 1]);
            let d = q.dist(p);
            if best.is_none_or(|b| d < b.distance) {
                best = Some(Projection {
                    point: q,
                    segment: i,
                    t,
                    distance: d,
                    arc: self.arc[i] + t * (self.arc[i + 1] - self.arc[i]),
                });
            }
        }
        best.expect("at least one segment")
    }

    /// Splits at arc length `s` into `[0, s]` and `[s, end]`; both halves
    /// share the split point.
    pub fn split_at_arc(&self, s: f64) -> (Polyline, Polyline) {
        let q = self.at_arc(s);
        let mut a = Polyline::default();
        let mut b = Polyline::default();
        for (i, &p) in self.points.iter().enumerate() {
            if self.arc[i] < s {
                a.push(p);
            }
        }
        a.push(q);
        b.push(q);
        for (i, &p) in self.points.iter().enumerate() {
            if self.arc[i] > s {
                b.push(p);
            }
        }
        (a, b)
    }

    /// Concatenation; the joint point is kept once when the ends coincide.
    pub fn join(&self, other: &Polyline) -> Polyline {
        Polyline::new(self.points.iter().chain(other.points.iter()).copied())
    }

    /// Drops the first `k` points.
    pub fn skip(&self, k: usize) -> Polyline {
        Polyline::new(self.points[k.min(self.points.len() - 1)..].iter().copied())
    }

    /// Replaces the first point.
    pub fn with_first(&self, p: Vec3) -> Polyline {
        Polyline::new(core::iter::once(p).chain(self.points[1..].iter().copied()))
    }

    /// Replaces the last point.
    pub fn with_last(&self, p: Vec3) -> Polyline {
        let n = self.points.len();
        Polyline::new(self.points[..n - 1].iter().copied().chain(core::iter::once(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Polyline {
        Polyline::new([Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0), Vec3::new(3.0, 4.0, 0.0)])
    }

    #[test]
    fn arc_length_sums_segments() {
        let p = line();
        assert_eq!(p.length(), 7.0);
        assert_eq!(p.at_arc(5.0), Vec3::new(3.0, 2.0, 0.0));
        assert_eq!(p.at(0.0), Vec3::ZERO);
    }

    #[test]
    fn duplicates_dropped() {
        let p = Polyline::new([Vec3::ZERO, Vec3::ZERO, Vec3::X]);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn split_preserves_length() {
        let (a, b) = line().split_at_arc(4.0);
        assert!((a.length() - 4.0).abs() < 1e-12);
        assert!((b.length() - 3.0).abs() < 1e-12);
        assert_eq!(a.last(), b.first());
    }

    #[test]
    fn projection_reports_arc() {
        let pr = line().project(Vec3::new(4.0, 1.0, 0.0));
        assert_eq!(pr.segment, 1);
        assert!((pr.arc - 4.0).abs() < 1e-12);
        assert!((pr.distance - 1.0).abs() < 1e-12);
    }
}
