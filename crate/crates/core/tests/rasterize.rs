mod fixtures;
mod oracles;

use material_twin::project::{project_splats, projected_covariance, rasterize_votes, ViewVotes};
use material_twin::*;
use rand::Rng;

fn votes(cloud: &GaussianCloud64, cam: &CameraModel64, mask: &MaterialMap, th: f64) -> ViewVotes {
    let p = project_splats(cloud, cam);
    rasterize_votes(&p.footprints, mask, th).unwrap()
}

#[test]
fn tiled_votes_match_naive_oracle() {
    let mut r = fixtures::rng(11);
    for _ in 0..300 {
        let size = *[32u32, 40, 17].get(r.random_range(0..3)).unwrap();
        let cam = fixtures::camera(size, size as f64 * 0.8);
        let cloud = fixtures::random_splats(&mut r, 20);
        let mask = fixtures::random_mask(&mut r, size, size, 6);
        let th = r.random_range(0.2..0.9);
        let p = project_splats(&cloud, &cam);
        let tiled = rasterize_votes(&p.footprints, &mask, th).unwrap();
        assert_eq!(tiled.winners, oracles::naive_votes(&p.footprints, &mask, th));
    }
}

#[test]
fn projected_covariance_matches_finite_differences() {
    let mut r = fixtures::rng(12);
    for _ in 0..200 {
        let cloud = fixtures::random_splats(&mut r, 1);
        let cam = CameraModel64::look_at(
            "c",
            fixtures::point_in(&mut r, 0.5),
            Vec3::new(0.0, 0.0, 4.0),
            Vec3::new(0.0, -1.0, 0.0),
            r.random_range(50.0..500.0),
            64,
            64,
        )
        .unwrap();
        let p = cloud.positions[0];
        let pc = cam.world_to_camera(p);
        if pc.z < 0.5 {
            continue;
        }
        let cov = cloud.covariance(0);
        let got = projected_covariance(&cov, &cam, [pc.x, pc.y, pc.z]);
        let want = oracles::fd_projected_covariance(&cov, &cam, p);
        let scale = want[0][0].abs().max(want[1][1].abs()).max(1.0);
        for (g, w) in [(got.a, want[0][0]), (got.b, want[0][1]), (got.c, want[1][1])] {
            assert!((g - w).abs() < 1e-5 * scale, "{g} vs {w}");
        }
    }
}

fn coaxial(front_opacity: f64, rear_opacity: f64, front_scale: f64, rear_scale: f64) -> GaussianCloud64 {
    GaussianCloud::new(
        vec![Vec3::new(0.0, 0.0, 2.0), Vec3::new(0.0, 0.0, 4.0)],
        vec![Vec3::new(front_scale, front_scale, front_scale), Vec3::new(rear_scale, rear_scale, rear_scale)],
        vec![Quat::identity(); 2],
        vec![front_opacity, rear_opacity],
    )
    .unwrap()
}

fn rear_votes(cloud: &GaussianCloud64) -> usize {
    let cam = fixtures::camera(32, 40.0);
    let mask = MaterialMap::new(32, 32, vec![1; 32 * 32], Palette::permissive()).unwrap();
    votes(cloud, &cam, &mask, 0.5).votes().filter(|(g, _)| *g == 1).count()
}

#[test]
fn opaque_front_splat_hides_rear() {
    let mut r = fixtures::rng(13);
    for _ in 0..500 {
        let rs = r.random_range(0.05..0.5);
        let fs = r.random_range(2.0 * rs..1.5);
        let c = coaxial(1.0, r.random_range(0.01..1.0), fs, rs);
        assert_eq!(rear_votes(&c), 0);
    }
}

/// Raising the front opacity never gives the rear splat more votes, as long
/// as the front footprint dominates the rear one at every pixel.
#[test]
fn rear_votes_shrink_as_front_opacity_grows() {
    let mut r = fixtures::rng(14);
    for _ in 0..200 {
        let rs = r.random_range(0.05..0.4);
        let ro = r.random_range(0.5..1.0);
        let fs = 2.0 * rs * r.random_range(1.0..2.0);
        let mut prev = usize::MAX;
        for k in 0..=10 {
            let fo = ro + (1.0 - ro) * k as f64 / 10.0;
            let n = rear_votes(&coaxial(fo, ro, fs, rs));
            assert!(n <= prev, "front opacity {fo}: {n} > {prev}");
            prev = n;
        }
    }
}

/// Without the dominance condition the fallback rule can hand the rear splat
/// a pixel when a faint front splat becomes slightly less faint.
#[test]
fn faint_front_can_push_rear_over_fallback() {
    let rear_only = |front: f64| {
        let cloud = GaussianCloud::new(
            vec![Vec3::new(0.0, 0.0, 2.0), Vec3::new(0.0, 0.0, 4.0)],
            vec![Vec3::new(0.5, 0.5, 0.5), Vec3::new(2.0, 2.0, 2.0)],
            vec![Quat::identity(); 2],
            vec![front, 0.5],
        )
        .unwrap();
        let cam = fixtures::camera(8, 4.0);
        let mask = MaterialMap::new(8, 8, vec![1; 64], Palette::permissive()).unwrap();
        votes(&cloud, &cam, &mask, 0.5).votes().filter(|(g, _)| *g == 1).count()
    };
    assert_eq!(rear_only(0.03), 0);
    assert!(rear_only(0.1) > 0);
}

#[test]
fn unlabeled_pixels_cast_no_votes() {
    let mut r = fixtures::rng(15);
    let cam = fixtures::camera(32, 30.0);
    let cloud = fixtures::random_splats(&mut r, 20);
    let mask = MaterialMap::new(32, 32, vec![UNLABELED; 1024], Palette::permissive()).unwrap();
    assert_eq!(votes(&cloud, &cam, &mask, 0.5).vote_count(), 0);
}

#[test]
fn threshold_one_keeps_only_opaque_first_hits() {
    // a single opacity-1 splat wins exactly where its alpha reaches 1
    let cloud = coaxial(1.0, 1.0, 0.3, 0.3);
    let cam = fixtures::camera(32, 40.0);
    let mask = MaterialMap::new(32, 32, vec![2; 1024], Palette::permissive()).unwrap();
    let v = votes(&cloud, &cam, &mask, 1.0);
    let p = project_splats(&cloud, &cam);
    assert_eq!(v.winners, oracles::naive_votes(&p.footprints, &mask, 1.0));
}

#[test]
fn labels_aggregate_to_histogram_argmax() {
    let mut r = fixtures::rng(16);
    for _ in 0..50 {
        let cloud = fixtures::random_splats(&mut r, 20);
        let views: Vec<_> = (0..3)
            .map(|_| (fixtures::camera(32, 28.0), fixtures::random_mask(&mut r, 32, 32, 5)))
            .collect();
        let out = project_labels(&cloud, &views, 0.5).unwrap();
        let mut per: Vec<Vec<ClassId>> = vec![Vec::new(); cloud.len()];
        for (cam, mask) in &views {
            let p = project_splats(&cloud, cam);
            for (px, w) in oracles::naive_votes(&p.footprints, mask, 0.5).iter().enumerate() {
                if let Some(g) = w {
                    per[*g as usize].push(mask.classes[px]);
                }
            }
        }
        let expect: Vec<ClassId> = per.into_iter().map(oracles::histogram_argmax).collect();
        assert_eq!(out.labels, expect);
    }
}

#[test]
fn mask_size_mismatch_is_shape_error() {
    let cloud = coaxial(1.0, 1.0, 0.3, 0.3);
    let mask = MaterialMap::new(16, 16, vec![1; 256], Palette::permissive()).unwrap();
    let r = project_labels(&cloud, &[(fixtures::camera(32, 30.0), mask)], 0.5);
    assert!(matches!(r, Err(Error::Shape(_))));
}

#[test]
fn f32_projection_agrees_with_f64_on_clear_cases() {
    let cloud = coaxial(1.0, 1.0, 0.3, 0.3);
    let cloud32 = GaussianCloud32::new(
        cloud.positions.iter().map(|p| p.cast()).collect(),
        cloud.scales.iter().map(|p| p.cast()).collect(),
        vec![Quat::identity(); 2],
        vec![1.0, 1.0],
    )
    .unwrap();
    let cam = fixtures::camera(32, 40.0);
    let cam32 = CameraModel32::new("view.png", 40.0, 40.0, 16.0, 16.0, 32, 32, Mat3::identity(), Vec3::zero()).unwrap();
    let mask = MaterialMap::new(32, 32, vec![1; 1024], Palette::permissive()).unwrap();
    let a = project_labels(&cloud, &[(cam, mask.clone())], 0.5).unwrap();
    let b = project_labels(&cloud32, &[(cam32, mask)], 0.5).unwrap();
    assert_eq!(a.labels, b.labels);
}
