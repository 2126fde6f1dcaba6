use csd_core::frame::Frame;
use csd_core::params::{ContourRadius, HausdorffMetric};
use csd_core::skeleton::extract_skeleton;
use csd_core::skelgraph::{build_graph, partition_paths, paths_to_subskeletons};
use csd_core::sweep::*;
use csd_core::synth;
use csd_core::volume::{distance_field, Dims, Spacing};
use csd_core::{BinaryVolume, Vec3};

#[test]
fn tube_section_is_circle() {
    for r in [4.0, 6.0, 9.5] {
        let ras = synth::straight_tube(40.0, r).rasterize().unwrap();
        let axis = &ras.axes[0];
        let mid = axis.at(0.5);
        let c = cross_section(&ras.volume, mid, Frame::from_tangent(Vec3::X, Vec3::Y), 128).unwrap();
        let dev = c.points.iter().map(|p| (p.norm() - r).abs()).fold(0.0, f64::max);
        assert!(dev <= 0.75, "r={r} dev={dev}");
        assert!(c.area() > 0.0);
        let c2 = cross_section(&ras.volume, mid, Frame::from_tangent(Vec3::X, Vec3::Y), 256).unwrap();
        assert!(hausdorff(&c, &c2) <= 0.5);
    }
}

#[test]
fn square_section_area() {
    let d = Dims::new(30, 24, 24);
    let data = (0..d.len())
        .map(|i| {
            let [x, y, z] = d.coords(i);
            (3..27).contains(&x) && (6..18).contains(&y) && (6..18).contains(&z)
        })
        .collect();
    let v = BinaryVolume::new(d, Spacing::UNIT, data).unwrap();
    let c = cross_section(&v, Vec3::new(15.0, 11.5, 11.5), Frame::from_tangent(Vec3::X, Vec3::Y), 128).unwrap();
    // Occupancy 0.5 sits half a voxel outside the outer voxel centres.
    let expect = 12.0 * 12.0;
    assert!((c.area() - expect).abs() / expect < 0.05, "{}", c.area());
}

#[test]
fn x_crossing_critical_points_near_junction() {
    let r = 6.0;
    let ras = synth::x_crossing(r).rasterize().unwrap();
    let d = distance_field(&ras.volume).unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    let g = build_graph(&s).unwrap();
    let p = partition_paths(&g, 0.0);
    let subs = paths_to_subskeletons(&p, &g, &s, 1.0).unwrap();
    assert_eq!(subs.len(), 2);
    let opts = SweepOptions {
        theta_h: 0.8,
        sf: 1,
        metric: HausdorffMetric::Modified,
        contour_radius: ContourRadius::Nearest,
        n_samples: 128,
    };
    for (i, psi) in subs.iter().enumerate() {
        let ivs = decomposition_intervals(psi, i, &d, 10.0, 1.0).unwrap();
        assert_eq!(ivs.len(), 2);
        for iv in &ivs {
            let out = sweep_interval(&ras.volume, psi, iv, &opts).unwrap();
            let cp = &out.critical;
            let dist = (cp.t_c - iv.t_j).abs() * psi.length();
            assert!(dist <= 2.0 * r, "{dist}");
            assert!(!out.trace.is_empty());
            assert!(out.trace.iter().filter(|row| row.triggered).count() <= 1);
            let (lo, hi) = (iv.t_s.min(cp.t_c), iv.t_s.max(cp.t_c));
            assert!(cp.cut_t >= lo - 1e-12 && cp.cut_t <= hi + 1e-12);
        }
    }
}

fn tube_subskeleton(len: f64, r: f64) -> (synth::Rasterized, csd_core::skelgraph::SubSkeleton) {
    let ras = synth::straight_tube(len, r).rasterize().unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    let g = build_graph(&s).unwrap();
    let p = partition_paths(&g, 0.0);
    let mut subs = paths_to_subskeletons(&p, &g, &s, 1.0).unwrap();
    (ras, subs.remove(0))
}

#[test]
fn intervals_span_alpha_radii() {
    let (ras, mut psi) = tube_subskeleton(80.0, 5.0);
    psi.junctions.push(csd_core::skelgraph::JunctionParam { vertex: 0, t: 0.5 });
    let d = distance_field(&ras.volume).unwrap();
    let ivs = decomposition_intervals(&psi, 0, &d, 3.0, 1.0).unwrap();
    assert_eq!(ivs.len(), 2);
    let len = psi.length();
    for iv in &ivs {
        let r = iv.radius;
        assert!((r - 5.0).abs() <= 1.0);
        assert!(((iv.t_s - iv.t_j).abs() * len - 3.0 * r).abs() < 1e-9);
        assert!(((iv.t_e - iv.t_j).abs() * len - r).abs() < 1e-9);
    }
    assert_eq!((ivs[0].side, ivs[1].side), (Side::Plus, Side::Minus));
}

#[test]
fn uniform_tube_falls_back_to_admissible_maximum() {
    let (ras, mut psi) = tube_subskeleton(80.0, 5.0);
    psi.junctions.push(csd_core::skelgraph::JunctionParam { vertex: 0, t: 0.5 });
    let d = distance_field(&ras.volume).unwrap();
    let opts = SweepOptions {
        theta_h: 0.8,
        sf: 1,
        metric: HausdorffMetric::Modified,
        contour_radius: ContourRadius::Nearest,
        n_samples: 128,
    };
    for iv in decomposition_intervals(&psi, 0, &d, 5.0, 1.0).unwrap() {
        let out = sweep_interval(&ras.volume, &psi, &iv, &opts).unwrap();
        let cp = &out.critical;
        assert!(cp.fallback);
        assert!(out.trace.iter().all(|row| !row.triggered));
        let best = out.trace.iter().map(|row| row.h_rho).fold(0.0, f64::max);
        assert_eq!(cp.h_rho, best);
        assert!((cp.t_c - iv.t_j).abs() * psi.length() >= iv.radius - 1e-9);
    }
}

#[test]
fn sampling_factor_thins_inquiry_points() {
    let (ras, mut psi) = tube_subskeleton(80.0, 5.0);
    psi.junctions.push(csd_core::skelgraph::JunctionParam { vertex: 0, t: 0.5 });
    let d = distance_field(&ras.volume).unwrap();
    let iv = decomposition_intervals(&psi, 0, &d, 5.0, 1.0).unwrap().remove(0);
    let run = |sf| {
        let opts = SweepOptions {
            theta_h: 0.8,
            sf,
            metric: HausdorffMetric::Modified,
            contour_radius: ContourRadius::Nearest,
            n_samples: 64,
        };
        sweep_interval(&ras.volume, &psi, &iv, &opts).unwrap().trace.len()
    };
    let (n1, n4) = (run(1), run(4));
    assert_eq!(n4, (n1 - 1) / 4 + 1);
}
