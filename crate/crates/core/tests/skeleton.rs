use csd_core::skeleton::{
    backtrack, classify_points, extract_skeleton, extract_skeleton_with, solve_eikonal, speed_cost, SkeletonOptions,
};
use csd_core::volume::{distance_field, Grid};
use csd_core::{synth, BinaryVolume, Dims, Spacing, Vec3};

#[test]
fn straight_tubes_stay_centred() {
    for r in [4.0, 8.0, 12.0] {
        let ras = synth::straight_tube(100.0, r).rasterize().unwrap();
        let d = distance_field(&ras.volume).unwrap();
        let s = extract_skeleton(&ras.volume, None, 64).unwrap();
        assert_eq!(s.branches.len(), 1, "r={r}");
        let axis = &ras.axes[0];
        for p in s.points() {
            assert!(axis.project(p).distance <= 1.0, "r={r} off axis at {p:?}");
            assert!(d.sample(p).unwrap() >= 0.9 * r, "r={r} shallow at {p:?}");
        }
        let (j, e) = classify_points(&s);
        assert_eq!((j.len(), e.len()), (0, 2));
    }
}

#[test]
fn straight_trace_length_close_to_axis() {
    let ras = synth::straight_tube(80.0, 5.0).rasterize().unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    let len = s.branches[0].polyline.length();
    assert!((len - 80.0).abs() <= 0.05 * 80.0, "length {len}");
}

#[test]
fn l_tube_follows_the_corner() {
    let ras = synth::l_tube(40.0, 5.0).rasterize().unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    assert_eq!(s.branches.len(), 1);
    let axis = &ras.axes[0];
    let worst = s.points().map(|p| axis.project(p).distance).fold(0.0, f64::max);
    assert!(worst <= 1.5, "max deviation {worst}");
    let corner = axis.points()[1];
    let nearest = s.points().map(|p| p.dist(corner)).fold(f64::INFINITY, f64::min);
    assert!(nearest < 6.0, "skeleton cuts the corner by {nearest}");
}

#[test]
fn y_has_one_junction() {
    let ras = synth::y_shape(5.0).rasterize().unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    let (j, e) = classify_points(&s);
    assert_eq!((s.branches.len(), j.len(), e.len()), (3, 1, 3));
}

#[test]
fn x_crossing_junctions_near_centre() {
    let sc = synth::x_crossing(6.0);
    let ras = sc.rasterize().unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    assert_eq!(s.branches.len(), 4);
    let js = s.junctions();
    assert!((1..=2).contains(&js.len()));
    let a = &ras.axes[0];
    let centre = a.at(0.5);
    for j in js {
        let p = s.nodes[j].position;
        assert!(p.dist(centre) <= 2.0, "junction {p:?} vs {centre:?}");
    }
}

#[test]
fn weave_has_seven_branches_two_junctions() {
    let ras = synth::weave().rasterize().unwrap();
    let s = extract_skeleton(&ras.volume, None, 64).unwrap();
    let (j, _) = classify_points(&s);
    assert_eq!((s.branches.len(), j.len()), (7, 2));
}

#[test]
fn incidence_is_a_tree() {
    for sc in [synth::five_branch(), synth::four_leg(), synth::y_shape(5.0)] {
        let ras = sc.rasterize().unwrap();
        let s = extract_skeleton(&ras.volume, None, 64).unwrap();
        let live = s.nodes.iter().filter(|n| n.degree() > 0).count();
        assert_eq!(s.branches.len() + 1, live);
        for n in &s.nodes {
            assert_ne!(n.degree(), 2);
        }
    }
}

#[test]
fn more_branches_extend_the_trace_prefix() {
    let ras = synth::five_branch().rasterize().unwrap();
    let d = distance_field(&ras.volume).unwrap();
    let run = |k| {
        let opts = SkeletonOptions {
            max_branches: k,
            ..Default::default()
        };
        extract_skeleton_with(&ras.volume, &d, &opts).unwrap().traces
    };
    let full = run(64);
    assert!(full.len() >= 3);
    for k in 1..full.len() {
        assert_eq!(run(k), full[..k]);
    }
}

#[test]
fn arrival_decreases_along_trace() {
    let ras = synth::l_tube(30.0, 4.0).rasterize().unwrap();
    let d = distance_field(&ras.volume).unwrap();
    let cost = speed_cost(&d).unwrap();
    let u = solve_eikonal(&cost, &[cost.x_star]).unwrap();
    let start = ras.axes[0].first();
    let line = backtrack(&u, start, 0.25).unwrap();
    let vals: Vec<f64> = line.points().iter().map(|&p| u.sample(p).unwrap()).collect();
    // The last point is the snap onto the seed.
    for w in vals[..vals.len() - 1].windows(2) {
        assert!(w[1] < w[0], "{} then {}", w[0], w[1]);
    }
}

#[test]
fn two_seeds_give_pointwise_min() {
    let ras = synth::y_shape(4.0).rasterize().unwrap();
    let d = distance_field(&ras.volume).unwrap();
    let cost = speed_cost(&d).unwrap();
    let a = ras.volume.nearest_voxel(ras.axes[0].last()).unwrap();
    let b = ras.volume.nearest_voxel(ras.axes[1].last()).unwrap();
    let ua = solve_eikonal(&cost, &[a]).unwrap();
    let ub = solve_eikonal(&cost, &[b]).unwrap();
    let uab = solve_eikonal(&cost, &[a, b]).unwrap();
    // Where the fronts meet the joint upwind update mixes both sources and
    // lands slightly below either; elsewhere the two agree.
    for i in ras.volume.foreground() {
        let m = ua.get(i).min(ub.get(i));
        assert!(uab.get(i) <= m + 1e-9, "voxel {i}");
        if (ua.get(i) - ub.get(i)).abs() > 3.0 {
            assert!((uab.get(i) - m).abs() <= 1e-6, "voxel {i}");
        }
    }
}

#[test]
fn cost_grows_outward_in_a_ball() {
    let n = 31;
    let dims = Dims::new(n, n, n);
    let c = 15.0;
    let data = (0..dims.len())
        .map(|i| {
            let [x, y, z] = dims.coords(i);
            let p = Vec3::new(x as f64, y as f64, z as f64) - Vec3::new(c, c, c);
            p.norm() <= 12.0
        })
        .collect();
    let vol = BinaryVolume::new(dims, Spacing::default(), data).unwrap();
    let d = distance_field(&vol).unwrap();
    let cost = speed_cost(&d).unwrap();
    let at = |x: usize, y: usize, z: usize| cost.cost.get(dims.index(x, y, z));
    for k in 15..27 {
        assert!(at(k + 1, 15, 15) >= at(k, 15, 15));
        assert!(at(15, k + 1, 15) >= at(15, k, 15));
        assert!(at(15, 15, k + 1) >= at(15, 15, k));
    }
    assert_eq!(cost.cost.get(cost.x_star), 0.0);
}
