use std::f64::consts::PI;

use csd_core::eval::best_match_iou;
use csd_core::frame::Frame;
use csd_core::geom::polygon_self_intersects;
use csd_core::reconstruct::{
    align_contours, axis_curve, best_alignment, cut_disc, cut_object, generalized_cylinder, linear_homotopy,
    Alignment,
};
use csd_core::sweep::{cross_section, Contour};
use csd_core::volume::Grid;
use csd_core::{decompose, synth, AxisKind, BinaryVolume, DecomposeParams, Dims, Error, Spacing, Vec2, Vec3};

fn circle(r: f64, n: usize, origin: Vec3, tangent: Vec3) -> Contour {
    let pts = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    Contour::new(pts, origin, Frame::from_tangent(tangent, Vec3::Y))
}

fn grid(n: [usize; 3]) -> BinaryVolume {
    BinaryVolume::empty(Dims::new(n[0], n[1], n[2]), Spacing::default()).unwrap()
}

#[test]
fn frustum_matches_analytic_cone() {
    let g = grid([32, 16, 16]);
    let (p1, p2) = (Vec3::new(5.0, 7.5, 7.5), Vec3::new(25.0, 7.5, 7.5));
    let c1 = circle(2.0, 128, p1, Vec3::X);
    let c2 = circle(4.0, 128, p2, Vec3::X);
    let axis = axis_curve(p1, Vec3::X, p2, Vec3::X, AxisKind::Linear).unwrap();
    let gc = generalized_cylinder(&g, &c1, &c2, &axis, 0.5).unwrap();
    for f in &gc.frames {
        assert!(f.orthonormality_error() <= 1e-9);
    }
    let last = gc.u.len() - 1;
    for (k, c) in [(0, &c1), (last, &c2)] {
        for (a, b) in gc.slice(k).iter().zip(c.world_points()) {
            assert!(a.dist(b) <= 0.5, "slice {k}: {a:?} vs {b:?}");
        }
    }
    // Voxels in the plane x = 15 form a disc of radius about 3.
    let mid: usize = gc
        .voxels
        .iter()
        .filter(|&&i| (g.world(i).x - 15.0).abs() < 0.5)
        .count();
    let radius = (mid as f64 / PI).sqrt();
    assert!((radius - 3.0).abs() <= 0.75, "mid radius {radius}");
}

#[test]
fn equal_circles_give_a_digital_cylinder() {
    let g = grid([40, 20, 20]);
    let (p1, p2) = (Vec3::new(5.0, 9.5, 9.5), Vec3::new(35.0, 9.5, 9.5));
    let r = 5.0;
    let c1 = circle(r, 128, p1, Vec3::X);
    let c2 = circle(r, 128, p2, Vec3::X);
    let axis = axis_curve(p1, Vec3::X, p2, Vec3::X, AxisKind::Linear).unwrap();
    let gc = generalized_cylinder(&g, &c1, &c2, &axis, 0.5).unwrap();
    let truth: Vec<usize> = (0..g.dims().len())
        .filter(|&i| {
            let p = g.world(i);
            p.x >= 4.5 && p.x < 35.5 && ((p.y - 9.5).powi(2) + (p.z - 9.5).powi(2)).sqrt() <= r
        })
        .collect();
    let inter = gc.voxels.iter().filter(|v| truth.binary_search(v).is_ok()).count();
    let iou = inter as f64 / (gc.voxels.len() + truth.len() - inter) as f64;
    assert!(iou >= 0.95, "IoU {iou}");
}

#[test]
fn coarse_sampling_reports_frame_jump() {
    let g = grid([20, 20, 20]);
    let (p1, p2) = (Vec3::new(5.0, 5.0, 10.0), Vec3::new(15.0, 15.0, 10.0));
    let c1 = circle(2.0, 32, p1, Vec3::X);
    let c2 = circle(2.0, 32, p2, Vec3::Y);
    let axis = axis_curve(p1, Vec3::X, p2, Vec3::Y, AxisKind::Spline).unwrap();
    let err = generalized_cylinder(&g, &c1, &c2, &axis, 100.0).unwrap_err();
    assert!(matches!(err, Error::FrameDiscontinuity { .. }), "{err}");
    assert!(generalized_cylinder(&g, &c1, &c2, &axis, 0.5).is_ok());
}

#[test]
fn spline_matches_end_tangents() {
    let (p1, p2) = (Vec3::ZERO, Vec3::new(10.0, 10.0, 0.0));
    let a = axis_curve(p1, Vec3::X, p2, Vec3::Y, AxisKind::Spline).unwrap();
    assert!(a.at(0.0).dist(p1) < 1e-9 && a.at(1.0).dist(p2) < 1e-9);
    let (d0, d1) = (a.derivative(0.0).normalize(), a.derivative(1.0).normalize());
    assert!(d0.dist(Vec3::X) < 1e-9 && d1.dist(Vec3::Y) < 1e-9);
    // Bounded curvature: second differences stay small on a fine grid.
    let n = 1000;
    let h = 1.0 / n as f64;
    for k in 1..n {
        let u = k as f64 * h;
        let dd = (a.at(u + h) - a.at(u) * 2.0 + a.at(u - h)) * (1.0 / (h * h));
        assert!(dd.norm() < 100.0);
    }
    let sine = axis_curve(p1, Vec3::X, Vec3::new(10.0, 0.0, 0.0), Vec3::X, AxisKind::Sine).unwrap();
    assert!((sine.at(0.5).dist(Vec3::new(5.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
    let short = axis_curve(p1, Vec3::X, Vec3::new(0.5, 0.0, 0.0), -Vec3::X, AxisKind::Spline);
    assert!(matches!(short, Err(Error::DegenerateAxis)));
}

#[test]
fn rotated_contour_alignment_is_the_brute_force_minimum() {
    let n = 48;
    let c1: Vec<Vec2> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            // Not a circle, so the minimum is unique.
            Vec2::new(3.0 * a.cos(), 1.5 * a.sin() + 0.3 * (2.0 * a).cos())
        })
        .collect();
    let c2: Vec<Vec2> = c1.iter().map(|p| p.rotate(PI / 6.0)).collect();
    let got = best_alignment(&c1, &c2);
    let mut best = f64::INFINITY;
    for reversed in [false, true] {
        for shift in 0..n {
            let a = Alignment {
                shift,
                reversed,
                residual: 0.0,
            };
            let r: f64 = (0..n).map(|i| c1[i].dist_sq(c2[a.index(i, n)])).sum();
            best = best.min(r);
        }
    }
    assert!((got.residual - best).abs() < 1e-9);
    let a = circle(2.0, n, Vec3::ZERO, Vec3::Z);
    let b = Contour {
        points: a.points.iter().rev().copied().collect(),
        ..a.clone()
    };
    let (_, aligned) = align_contours(&a, &b).unwrap();
    assert_eq!(aligned.points, a.points);
}

#[test]
fn homotopy_of_convex_contours_stays_simple() {
    let a = circle(2.0, 64, Vec3::ZERO, Vec3::Z);
    let square: Vec<Vec2> = (0..64)
        .map(|i| {
            let t = i as f64 / 16.0;
            let (k, f) = (t.floor() as usize, t.fract());
            let c = [(5.0, -5.0), (5.0, 5.0), (-5.0, 5.0), (-5.0, -5.0), (5.0, -5.0)];
            Vec2::new(c[k].0 + (c[k + 1].0 - c[k].0) * f, c[k].1 + (c[k + 1].1 - c[k].1) * f)
        })
        .collect();
    let b = Contour {
        points: square,
        ..a.clone()
    };
    let (a, b) = align_contours(&a, &b).unwrap();
    for k in 0..=20 {
        let h = linear_homotopy(&a, &b, k as f64 / 20.0).unwrap();
        assert!(!polygon_self_intersects(&h.points), "u = {}", k as f64 / 20.0);
    }
}

#[test]
fn disc_splits_a_tube_in_two() {
    let ras = synth::straight_tube(40.0, 4.0).rasterize().unwrap();
    let axis = &ras.axes[0];
    let mid = axis.at(0.5);
    let frame = Frame::from_tangent(Vec3::X, Vec3::Y);
    let c = cross_section(&ras.volume, mid, frame, 128).unwrap();
    let disc = cut_disc(&ras.volume, &c);
    assert!(!disc.is_empty());
    for &v in &disc {
        assert!((ras.volume.world(v).x - mid.x).abs() <= 0.5);
    }
    let cut = cut_object(&ras.volume, &[disc], &[c], &[]).unwrap();
    assert_eq!((cut.parts.len(), cut.intersections.len()), (2, 0));
    assert!(cut.unseparated.is_empty());
}

#[test]
fn single_tube_passes_through() {
    let ras = synth::straight_tube(60.0, 5.0).rasterize().unwrap();
    let res = decompose(&ras.volume, &DecomposeParams::default()).unwrap();
    assert_eq!(res.component_count(), 1);
    assert_eq!((res.part_count(), res.intersection_count()), (1, 0));
    let same = res.labels.data().iter().zip(ras.volume.data()).all(|(&l, &f)| (l == 1) == f);
    assert!(same);
}

#[test]
fn x_crossing_gives_two_tubes() {
    let ras = synth::x_crossing(6.0).rasterize().unwrap();
    let res = decompose(&ras.volume, &DecomposeParams::default()).unwrap();
    assert_eq!(res.component_count(), 2);
    assert_eq!((res.part_count(), res.intersection_count()), (4, 1));
    for (_, _, iou) in best_match_iou(&ras.truth, &res.labels).unwrap() {
        assert!(iou >= 0.9, "IoU {iou}");
    }
    for c in &res.components {
        assert_eq!(c.parts.len(), 2);
    }
}

#[test]
fn labels_cover_foreground_and_match_subskeletons() {
    for sc in [synth::y_shape(5.0), synth::five_branch(), synth::four_leg()] {
        let ras = sc.rasterize().unwrap();
        let res = decompose(&ras.volume, &DecomposeParams::default()).unwrap();
        for (&l, &f) in res.labels.data().iter().zip(ras.volume.data()) {
            assert_eq!(l != 0, f);
        }
        // Parts keep their voxels through reconstruction.
        for c in &res.components {
            for (i, &p) in res.cut.pieces.data().iter().enumerate() {
                if c.parts.contains(&p) {
                    assert_eq!(res.labels.get(i), c.label);
                }
            }
        }
        if res.cut.unseparated.is_empty() {
            assert_eq!(res.component_count(), res.subskeletons.len());
        }
    }
}

#[test]
fn decompose_is_repeatable() {
    let ras = synth::four_leg().rasterize().unwrap();
    let a = decompose(&ras.volume, &DecomposeParams::default()).unwrap();
    let b = decompose(&ras.volume, &DecomposeParams::default()).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.cylinders, b.cylinders);
}

#[test]
fn stage_is_tagged_on_failure() {
    let mut data = vec![false; 20 * 20 * 20];
    data[20 * 20 * 5 + 20 * 5 + 5] = true;
    data[20 * 20 * 15 + 20 * 15 + 15] = true;
    let vol = BinaryVolume::new(Dims::new(20, 20, 20), Spacing::default(), data).unwrap();
    let err = decompose(&vol, &DecomposeParams::default()).unwrap_err();
    assert!(matches!(err.root(), Error::DisconnectedForeground(2)));
    assert!(err.stage().is_some());
    assert!(err.to_string().contains("disconnected foreground"));
}
