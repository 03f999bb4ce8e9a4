//! Seeded random fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use material_twin::{
    CameraModel, ClassId, GaussianCloud, InstanceSet, LabeledMesh, Mat3, MaterialMap, Palette, Quat, Vec3, UNLABELED,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_quat(r: &mut impl Rng) -> Quat<f64> {
    loop {
        let q = Quat::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n < 1.0 {
            return q.normalized().unwrap();
        }
    }
}

pub fn point_in(r: &mut impl Rng, half: f64) -> Vec3<f64> {
    Vec3::new(
        r.random_range(-half..half),
        r.random_range(-half..half),
        r.random_range(-half..half),
    )
}

/// Identity-pose camera looking down +z.
pub fn camera(size: u32, focal: f64) -> CameraModel<f64> {
    let c = size as f64 / 2.0;
    CameraModel::new("view.png", focal, focal, c, c, size, size, Mat3::identity(), Vec3::zero()).unwrap()
}

/// Up to `max` splats in front of [`camera`] with varied size, shape and opacity.
pub fn random_splats(r: &mut impl Rng, max: usize) -> GaussianCloud<f64> {
    let n = r.random_range(1..=max);
    let mut pos = Vec::new();
    let mut scale = Vec::new();
    let mut rot = Vec::new();
    let mut op = Vec::new();
    for _ in 0..n {
        let z = r.random_range(1.5..6.0);
        pos.push(Vec3::new(
            r.random_range(-0.6..0.6) * z,
            r.random_range(-0.6..0.6) * z,
            z,
        ));
        scale.push(Vec3::new(
            r.random_range(0.02..0.6),
            r.random_range(0.02..0.6),
            r.random_range(0.02..0.6),
        ));
        rot.push(unit_quat(r));
        op.push(if r.random_bool(0.2) { 1.0 } else { r.random_range(0.0..1.0) });
    }
    GaussianCloud::new(pos, scale, rot, op).unwrap()
}

/// Mask with a few class blobs and unlabeled holes.
pub fn random_mask(r: &mut impl Rng, w: u32, h: u32, classes: u8) -> MaterialMap {
    let blobs: Vec<(f64, f64, ClassId)> = (0..4)
        .map(|_| (r.random_range(0.0..w as f64), r.random_range(0.0..h as f64), r.random_range(0..classes)))
        .collect();
    let data = (0..w * h)
        .map(|p| {
            if r.random_bool(0.1) {
                return UNLABELED;
            }
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            blobs
                .iter()
                .min_by(|a, b| {
                    let da = (a.0 - x).powi(2) + (a.1 - y).powi(2);
                    let db = (b.0 - x).powi(2) + (b.1 - y).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap()
                .2
        })
        .collect();
    MaterialMap::new(w, h, data, Palette::permissive()).unwrap()
}

/// Noisy material map with up to `n` rectangular instances that may overlap.
pub fn random_instances(r: &mut impl Rng, w: u32, h: u32, n: usize) -> InstanceSet {
    let masks = (0..r.random_range(0..=n))
        .map(|_| {
            let x0 = r.random_range(0..w);
            let y0 = r.random_range(0..h);
            let x1 = r.random_range(x0 + 1..=w);
            let y1 = r.random_range(y0 + 1..=h);
            (0..w * h)
                .map(|p| {
                    let (x, y) = (p % w, p / w);
                    x >= x0 && x < x1 && y >= y0 && y < y1
                })
                .collect()
        })
        .collect();
    InstanceSet::new(w, h, masks).unwrap()
}

pub fn random_labels(r: &mut impl Rng, n: usize, classes: u8, unlabeled_p: f64) -> Vec<ClassId> {
    (0..n)
        .map(|_| {
            if r.random_bool(unlabeled_p) {
                UNLABELED
            } else {
                r.random_range(0..classes)
            }
        })
        .collect()
}

/// `n` random, non-degenerate, unconnected triangles inside a cube.
pub fn triangle_soup(r: &mut impl Rng, n: usize, half: f64) -> LabeledMesh<f64> {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    while tris.len() < n {
        let c = point_in(r, half);
        let a = c + point_in(r, 1.0);
        let b = c + point_in(r, 1.0);
        let d = c + point_in(r, 1.0);
        if (a - c).cross(b - c).norm() < 1e-3 || (b - a).cross(d - a).norm() < 1e-3 {
            continue;
        }
        let k = verts.len() as u32;
        verts.extend([a, b, d]);
        tris.push([k, k + 1, k + 2]);
    }
    LabeledMesh::unlabeled(verts, tris).unwrap()
}

/// Regular grid of `nx × ny` cells split into two triangles each, z = 0.
pub fn grid_mesh(nx: usize, ny: usize) -> LabeledMesh<f64> {
    let mut verts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push(Vec3::new(i as f64, j as f64, 0.0));
        }
    }
    let at = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            tris.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
            tris.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    LabeledMesh::unlabeled(verts, tris).unwrap()
}
