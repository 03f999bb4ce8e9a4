//! Slow, obviously-correct reference implementations for the tests.
//! Nothing here reuses the algorithm under test; shared geometry helpers
//! (triangle corners, the ray–triangle predicate) are fair game.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use material_twin::bvh::{intersect_triangle, Facing, Hit, Ray};
use material_twin::project::SplatFootprint;
use material_twin::{CameraModel, ClassId, InstanceSet, LabeledMesh, Mat3, MaterialMap, Sym2, Vec3, UNLABELED};

/// Argmax of a 256-bin count table; lowest class wins ties, 255 abstains.
pub fn histogram_argmax(labels: impl IntoIterator<Item = ClassId>) -> ClassId {
    let mut counts = [0u64; 256];
    for l in labels {
        counts[l as usize] += 1;
    }
    counts[UNLABELED as usize] = 0;
    let max = *counts.iter().max().unwrap();
    if max == 0 {
        return UNLABELED;
    }
    counts.iter().position(|&c| c == max).unwrap() as ClassId
}

pub fn instances_disjoint(set: &InstanceSet) -> bool {
    for i in 0..set.masks.len() {
        for j in i + 1..set.masks.len() {
            if set.masks[i].iter().zip(&set.masks[j]).any(|(&a, &b)| a && b) {
                return false;
            }
        }
    }
    true
}

/// Pixel-by-pixel refinement: find the pixel's instance by linear scan and
/// recount that instance from scratch.
pub fn refine(map: &MaterialMap, set: &InstanceSet) -> Vec<ClassId> {
    let n = map.classes.len();
    (0..n)
        .map(|p| match set.masks.iter().position(|m| m[p]) {
            None => map.classes[p],
            Some(i) => {
                let m = &set.masks[i];
                let l = histogram_argmax((0..n).filter(|&q| m[q]).map(|q| map.classes[q]));
                if l == UNLABELED {
                    map.classes[p]
                } else {
                    l
                }
            }
        })
        .collect()
}

/// Reference overlap removal: each pixel goes to the smallest claiming
/// instance (lower index on ties); empty instances vanish.
pub fn remove_overlaps(set: &InstanceSet) -> Vec<Vec<bool>> {
    let sizes: Vec<usize> = set.masks.iter().map(|m| m.iter().filter(|&&b| b).count()).collect();
    let n = set.width as usize * set.height as usize;
    let mut out = vec![vec![false; n]; set.masks.len()];
    for p in 0..n {
        let owner = (0..set.masks.len())
            .filter(|&i| set.masks[i][p])
            .min_by_key(|&i| (sizes[i], i));
        if let Some(i) = owner {
            out[i][p] = true;
        }
    }
    out.into_iter().filter(|m| m.iter().any(|&b| b)).collect()
}

fn alpha_at(f: &SplatFootprint<f64>, x: f64, y: f64) -> f64 {
    // inverse of the covariance written out by hand
    let Sym2 { a, b, c } = f.cov;
    let det = a * c - b * b;
    let (dx, dy) = (x - f.mean[0], y - f.mean[1]);
    let q = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    f.opacity * (-0.5 * q).exp()
}

/// Per-pixel vote without tiles or radii: every footprint is tested at every
/// labeled pixel, in (depth, gaussian) order.
pub fn naive_votes(footprints: &[SplatFootprint<f64>], mask: &MaterialMap, threshold: f64) -> Vec<Option<u32>> {
    let mut sorted = footprints.to_vec();
    sorted.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.gaussian.cmp(&b.gaussian)));
    let w = mask.width as usize;
    (0..mask.classes.len())
        .map(|p| {
            if mask.classes[p] == UNLABELED {
                return None;
            }
            let (x, y) = ((p % w) as f64 + 0.5, (p / w) as f64 + 0.5);
            let mut t = 1.0;
            let mut best: Option<(u32, f64)> = None;
            for f in &sorted {
                let alpha = alpha_at(f, x, y);
                if alpha < 1.0 / 255.0 {
                    continue;
                }
                if alpha >= threshold {
                    return Some(f.gaussian);
                }
                let wgt = alpha * t;
                if best.is_none() || wgt > best.unwrap().1 {
                    best = Some((f.gaussian, wgt));
                }
                t *= 1.0 - alpha;
            }
            if t < 0.5 {
                best.map(|b| b.0)
            } else {
                None
            }
        })
        .collect()
}

/// Screen-space covariance from a central-difference Jacobian of the
/// world → pixel map.
pub fn fd_projected_covariance(cov: &Mat3<f64>, cam: &CameraModel<f64>, p: Vec3<f64>) -> [[f64; 2]; 2] {
    let h = 1e-6 * (1.0 + p.norm());
    let mut j = [[0.0; 3]; 2];
    for k in 0..3 {
        let mut e = Vec3::zero();
        match k {
            0 => e.x = h,
            1 => e.y = h,
            _ => e.z = h,
        }
        let (u1, v1, _) = cam.project(p + e).unwrap();
        let (u0, v0, _) = cam.project(p - e).unwrap();
        j[0][k] = (u1 - u0) / (2.0 * h);
        j[1][k] = (v1 - v0) / (2.0 * h);
    }
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            for a in 0..3 {
                for b in 0..3 {
                    out[r][c] += j[r][a] * cov.m[a][b] * j[c][b];
                }
            }
        }
    }
    out
}

fn dist2(a: Vec3<f64>, b: Vec3<f64>) -> f64 {
    let d = a - b;
    d.x * d.x + d.y * d.y + d.z * d.z
}

/// Indices of the `k` nearest points, ordered by (distance², index).
pub fn nearest_k(points: &[Vec3<f64>], q: Vec3<f64>, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, &p)| (dist2(p, q), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|x| x.1).collect()
}

/// Nearest point within `radius` (inclusive), lower index on ties.
pub fn nearest_within(points: &[Vec3<f64>], q: Vec3<f64>, radius: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in points.iter().enumerate() {
        let d = dist2(p, q);
        if d <= radius * radius && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, d)| (i, d.sqrt()))
}

/// O(N·M) triangle labeling by nearest centroids.
pub fn knn_labels(positions: &[Vec3<f64>], labels: &[ClassId], mesh: &LabeledMesh<f64>, k: usize) -> Vec<ClassId> {
    let centroids: Vec<Vec3<f64>> = (0..mesh.len()).map(|f| mesh.centroid(f)).collect();
    let mut votes: Vec<Vec<ClassId>> = vec![Vec::new(); mesh.len()];
    for (&p, &l) in positions.iter().zip(labels) {
        if l == UNLABELED {
            continue;
        }
        for t in nearest_k(&centroids, p, k) {
            votes[t].push(l);
        }
    }
    votes.into_iter().map(histogram_argmax).collect()
}

/// Hole filling by a separate BFS from every unlabeled triangle: it takes
/// the smallest label among the labeled triangles at the smallest hop count.
pub fn fill(mesh: &LabeledMesh<f64>, max_hops: Option<usize>) -> Vec<ClassId> {
    let tris = mesh.triangles();
    let shares_edge = |a: usize, b: usize| {
        let common = tris[a].iter().filter(|v| tris[b].contains(v)).count();
        a != b && common >= 2
    };
    let n = tris.len();
    let adj: Vec<Vec<usize>> = (0..n).map(|a| (0..n).filter(|&b| shares_edge(a, b)).collect()).collect();
    let labels = mesh.labels();
    (0..n)
        .map(|start| {
            if labels[start] != UNLABELED {
                return labels[start];
            }
            let mut hop = vec![usize::MAX; n];
            hop[start] = 0;
            let mut queue = VecDeque::from([start]);
            let mut found: Option<(usize, ClassId)> = None;
            while let Some(f) = queue.pop_front() {
                if let Some((h, _)) = found {
                    if hop[f] > h {
                        break;
                    }
                }
                if labels[f] != UNLABELED {
                    let l = found.map_or(labels[f], |(_, l)| l.min(labels[f]));
                    found = Some((hop[f], l));
                    continue;
                }
                for &g in &adj[f] {
                    if hop[g] == usize::MAX {
                        hop[g] = hop[f] + 1;
                        queue.push_back(g);
                    }
                }
            }
            match found {
                Some((h, l)) if max_hops.is_none_or(|m| h <= m) => l,
                _ => UNLABELED,
            }
        })
        .collect()
}

pub fn closest_hit(mesh: &LabeledMesh<f64>, ray: &Ray<f64>, max_range: f64, facing: Facing) -> Option<Hit<f64>> {
    let mut best: Option<Hit<f64>> = None;
    for f in 0..mesh.len() {
        if let Some((t, cos)) = intersect_triangle(ray, mesh.corners(f), mesh.normals()[f], max_range, facing) {
            if best.is_none_or(|b| t < b.range) {
                best = Some(Hit {
                    triangle: f,
                    range: t,
                    cos_incidence: cos,
                });
            }
        }
    }
    best
}

pub fn psnr(a: &[u8], b: &[u8]) -> f64 {
    let mse = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * 255.0f64.log10() - 10.0 * mse.log10()
    }
}

/// SSIM with an explicit 2D Gaussian window evaluated at every valid
/// position.
pub fn ssim(a: &[u8], b: &[u8], w: usize, h: usize, ch: usize) -> f64 {
    const N: usize = 11;
    let mut win = [[0.0; N]; N];
    let mut total = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (x, y) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(x * x + y * y) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let (c1, c2) = ((0.01 * 255.0f64).powi(2), (0.03 * 255.0f64).powi(2));
    let mut per_channel = 0.0;
    for c in 0..ch {
        let px = |img: &[u8], x: usize, y: usize| img[(y * w + x) * ch + c] as f64;
        let mut sum = 0.0;
        let mut count = 0;
        for y0 in 0..=h - N {
            for x0 in 0..=w - N {
                let (mut ma, mut mb) = (0.0, 0.0);
                for j in 0..N {
                    for i in 0..N {
                        let g = win[i][j] / total;
                        ma += g * px(a, x0 + i, y0 + j);
                        mb += g * px(b, x0 + i, y0 + j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for j in 0..N {
                    for i in 0..N {
                        let g = win[i][j] / total;
                        let (da, db) = (px(a, x0 + i, y0 + j) - ma, px(b, x0 + i, y0 + j) - mb);
                        va += g * da * da;
                        vb += g * db * db;
                        cov += g * da * db;
                    }
                }
                sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        per_channel += sum / count as f64;
    }
    per_channel / ch as f64
}

/// Mean from a running sum; median by selecting the lower middle after a
/// full sort of a copy.
pub fn mae_median(errors: &[f64]) -> (f64, f64) {
    let mut acc = 0.0;
    for e in errors {
        acc += e;
    }
    let mut s = errors.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = if s.len() % 2 == 1 { s.len() / 2 } else { s.len() / 2 - 1 };
    (acc / errors.len() as f64, s[mid])
}
