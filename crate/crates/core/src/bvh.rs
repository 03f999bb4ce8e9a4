//! Closest-hit ray casting against a triangle mesh through an axis-aligned
//! bounding volume hierarchy.

use crate::linalg::Vec3;
use crate::mesh::LabeledMesh;
use crate::scalar::Real;

/// Hits whose incidence cosine is at or below this are treated as misses.
pub const GRAZING_COSINE: f64 = 1e-3;
const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    /// Unit length, so hit distances are ranges in meters.
    pub dir: Vec3<T>,
}

/// Which triangle sides count as hits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Facing {
    /// Only faces whose normal points against the ray.
    Front,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit<T> {
    pub triangle: usize,
    pub range: T,
    /// `|n · d|`.
    pub cos_incidence: T,
}

/// Möller–Trumbore intersection followed by the facing, grazing and range
/// filters. Shared by the BVH and by brute-force checks so both agree bit
/// for bit.
#[inline]
pub fn intersect_triangle<T: Real>(
    ray: &Ray<T>,
    corners: [Vec3<T>; 3],
    normal: Vec3<T>,
    max_range: T,
    facing: Facing,
) -> Option<(T, T)> {
    let nd = normal.dot(ray.dir);
    if facing == Facing::Front && !(nd < T::zero()) {
        return None;
    }
    let cos = nd.abs();
    if !(cos > T::lit(GRAZING_COSINE)) {
        return None;
    }
    let [a, b, c] = corners;
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det == T::zero() {
        return None;
    }
    let inv = T::one() / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t > T::zero() && t <= max_range {
        Some((t, cos))
    } else {
        None
    }
}

#[inline]
fn closer<T: Real>(t: T, tri: usize, best: &Option<Hit<T>>) -> bool {
    match best {
        None => true,
        Some(h) => t < h.range || (t == h.range && tri < h.triangle),
    }
}

/// Exhaustive closest hit over all triangles.
pub fn brute_force_closest_hit<T: Real>(
    mesh: &LabeledMesh<T>,
    ray: &Ray<T>,
    max_range: T,
    facing: Facing,
) -> Option<Hit<T>> {
    let mut best = None;
    for f in 0..mesh.len() {
        if let Some((t, cos)) = intersect_triangle(ray, mesh.corners(f), mesh.normals()[f], max_range, facing) {
            if closer(t, f, &best) {
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

#[derive(Clone, Copy, Debug)]
struct Aabb<T> {
    lo: Vec3<T>,
    hi: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    fn empty() -> Self {
        let inf = T::infinity();
        Self {
            lo: Vec3::new(inf, inf, inf),
            hi: Vec3::new(-inf, -inf, -inf),
        }
    }

    fn grow(&mut self, p: Vec3<T>) {
        self.lo = self.lo.min(p);
        self.hi = self.hi.max(p);
    }

    fn union(&mut self, o: &Self) {
        self.lo = self.lo.min(o.lo);
        self.hi = self.hi.max(o.hi);
    }

    fn area(&self) -> T {
        let d = self.hi - self.lo;
        if d.x < T::zero() {
            return T::zero();
        }
        T::two() * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Entry distance of the ray into the box, or `None` on a miss or when
    /// the box starts beyond `limit`. NaN slab terms are ignored, which
    /// errs towards visiting the box.
    #[inline]
    fn entry(&self, o: Vec3<T>, inv: Vec3<T>, limit: T) -> Option<T> {
        let mut tmin = T::zero();
        let mut tmax = limit;
        for a in 0..3 {
            let t1 = (self.lo.axis(a) - o.axis(a)) * inv.axis(a);
            let t2 = (self.hi.axis(a) - o.axis(a)) * inv.axis(a);
            tmin = tmin.max(t1.min(t2));
            tmax = tmax.min(t1.max(t2));
        }
        if tmin <= tmax {
            Some(tmin)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug)]
enum NodeKind {
    Leaf { start: u32, count: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Clone, Debug)]
struct Node<T> {
    bounds: Aabb<T>,
    kind: NodeKind,
}

/// Immutable BVH over a mesh; safe to share between threads.
#[derive(Clone, Debug)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<u32>,
}

impl<T: Real> Bvh<T> {
    /// Binned surface-area-heuristic build.
    pub fn build(mesh: &LabeledMesh<T>) -> Self {
        let n = mesh.len();
        let mut boxes = Vec::with_capacity(n);
        let mut centers = Vec::with_capacity(n);
        let mut scale = T::one();
        for v in mesh.vertices() {
            scale = scale.max(v.x.abs()).max(v.y.abs()).max(v.z.abs());
        }
        let pad = T::epsilon() * T::lit(1024.0) * scale;
        let pad = Vec3::new(pad, pad, pad);
        for f in 0..n {
            let mut b = Aabb::empty();
            for p in mesh.corners(f) {
                b.grow(p);
            }
            b.lo = b.lo - pad;
            b.hi = b.hi + pad;
            boxes.push(b);
            centers.push(mesh.centroid(f));
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        if n > 0 {
            build_node(&boxes, &centers, &mut order, 0, n, &mut nodes);
        }
        Self { nodes, order }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Closest accepted hit within `max_range`; equal ranges resolve to the
    /// lower triangle index.
    pub fn closest_hit(&self, mesh: &LabeledMesh<T>, ray: &Ray<T>, max_range: T, facing: Facing) -> Option<Hit<T>> {
        if self.nodes.is_empty() {
            return None;
        }
        let one = T::one();
        let inv = Vec3::new(one / ray.dir.x, one / ray.dir.y, one / ray.dir.z);
        let mut best: Option<Hit<T>> = None;
        let mut stack: Vec<(u32, T)> = Vec::with_capacity(64);
        if let Some(t) = self.nodes[0].bounds.entry(ray.origin, inv, max_range) {
            stack.push((0, t));
        }
        while let Some((idx, tnear)) = stack.pop() {
            if let Some(h) = &best {
                if tnear > h.range {
                    continue;
                }
            }
            let limit = best.as_ref().map_or(max_range, |h| h.range);
            match self.nodes[idx as usize].kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start as usize..(start + count) as usize] {
                        let f = f as usize;
                        if let Some((t, cos)) =
                            intersect_triangle(ray, mesh.corners(f), mesh.normals()[f], max_range, facing)
                        {
                            if closer(t, f, &best) {
                                best = Some(Hit {
                                    triangle: f,
                                    range: t,
                                    cos_incidence: cos,
                                });
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let tl = self.nodes[left as usize].bounds.entry(ray.origin, inv, limit);
                    let tr = self.nodes[right as usize].bounds.entry(ray.origin, inv, limit);
                    // push the farther child first so the nearer one is popped next
                    match (tl, tr) {
                        (Some(a), Some(b)) if a <= b => {
                            stack.push((right, b));
                            stack.push((left, a));
                        }
                        (Some(a), Some(b)) => {
                            stack.push((left, a));
                            stack.push((right, b));
                        }
                        (Some(a), None) => stack.push((left, a)),
                        (None, Some(b)) => stack.push((right, b)),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }
}

fn build_node<T: Real>(
    boxes: &[Aabb<T>],
    centers: &[Vec3<T>],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node<T>>,
) -> u32 {
    let id = nodes.len() as u32;
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &f in &order[start..end] {
        bounds.union(&boxes[f as usize]);
        cbounds.grow(centers[f as usize]);
    }
    let count = end - start;
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf {
            start: start as u32,
            count: count as u32,
        },
    });
    if count <= LEAF_SIZE {
        return id;
    }

    let ext = cbounds.hi - cbounds.lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let lo = cbounds.lo.axis(axis);
    let span = ext.axis(axis);
    let mid = if span > T::zero() {
        let bins = T::lit(SAH_BINS as f64);
        let bin_of = |f: u32| {
            let b = ((centers[f as usize].axis(axis) - lo) / span * bins)
                .to_usize()
                .unwrap_or(0);
            b.min(SAH_BINS - 1)
        };
        let mut bin_box = [Aabb::empty(); SAH_BINS];
        let mut bin_cnt = [0usize; SAH_BINS];
        for &f in &order[start..end] {
            let b = bin_of(f);
            bin_box[b].union(&boxes[f as usize]);
            bin_cnt[b] += 1;
        }
        let mut best = (T::infinity(), 0usize);
        for split in 1..SAH_BINS {
            let (mut lb, mut rb) = (Aabb::empty(), Aabb::empty());
            let (mut lc, mut rc) = (0, 0);
            for b in 0..split {
                lb.union(&bin_box[b]);
                lc += bin_cnt[b];
            }
            for b in split..SAH_BINS {
                rb.union(&bin_box[b]);
                rc += bin_cnt[b];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lb.area() * T::lit(lc as f64) + rb.area() * T::lit(rc as f64);
            if cost < best.0 {
                best = (cost, split);
            }
        }
        if best.1 == 0 {
            None
        } else {
            let slice = &mut order[start..end];
            slice.sort_by_key(|&f| (bin_of(f) >= best.1, f));
            Some(start + slice.iter().filter(|&&f| bin_of(f) < best.1).count())
        }
    } else {
        None
    };
    let mid = mid.unwrap_or_else(|| {
        // all centers coincide along the axis; fall back to a median split
        let slice = &mut order[start..end];
        slice.sort_by(|&a, &b| {
            centers[a as usize]
                .axis(axis)
                .partial_cmp(&centers[b as usize].axis(axis))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        start + count / 2
    });
    let left = build_node(boxes, centers, order, start, mid, nodes);
    let right = build_node(boxes, centers, order, mid, end, nodes);
    nodes[id as usize].kind = NodeKind::Inner { left, right };
    id
}
