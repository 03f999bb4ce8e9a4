//! Static 3D KD-tree with deterministic tie-breaking.
//!
//! Neighbors are ordered by `(squared distance, point index)`, so equal
//! distances resolve to the lower index exactly like a linear scan would.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::linalg::Vec3;
use crate::scalar::Real;

const LEAF_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub dist2: T,
}

impl<T: Real> Neighbor<T> {
    fn key_cmp(&self, o: &Self) -> Ordering {
        self.dist2
            .partial_cmp(&o.dist2)
            .unwrap_or(Ordering::Equal)
            .then(self.index.cmp(&o.index))
    }
}

// max-heap by (dist2, index)
struct HeapItem<T>(Neighbor<T>);

impl<T: Real> PartialEq for HeapItem<T> {
    fn eq(&self, o: &Self) -> bool {
        self.0.key_cmp(&o.0) == Ordering::Equal
    }
}
impl<T: Real> Eq for HeapItem<T> {}
impl<T: Real> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for HeapItem<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.key_cmp(&o.0)
    }
}

#[derive(Clone, Debug)]
enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: T, left: usize, right: usize },
}

#[derive(Clone, Debug)]
pub struct KdTree<T> {
    points: Vec<Vec3<T>>,
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<T: Real> KdTree<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build(&points, &mut order, 0, points.len(), &mut nodes);
        }
        Self { points, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    /// The `k` nearest points, closest first.
    pub fn nearest_k(&self, q: Vec3<T>, k: usize) -> Vec<Neighbor<T>> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, k, T::infinity(), &mut heap);
        let mut v: Vec<_> = heap.into_iter().map(|h| h.0).collect();
        v.sort_by(|a, b| a.key_cmp(b));
        v
    }

    pub fn nearest(&self, q: Vec3<T>) -> Option<Neighbor<T>> {
        self.nearest_k(q, 1).into_iter().next()
    }

    /// Nearest point with distance `<= radius`.
    pub fn nearest_within(&self, q: Vec3<T>, radius: T) -> Option<Neighbor<T>> {
        if self.is_empty() {
            return None;
        }
        let mut heap = BinaryHeap::with_capacity(2);
        self.search(0, q, 1, radius * radius, &mut heap);
        heap.pop().map(|h| h.0)
    }

    fn search(&self, node: usize, q: Vec3<T>, k: usize, bound2: T, heap: &mut BinaryHeap<HeapItem<T>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 > bound2 {
                        continue;
                    }
                    let cand = Neighbor { index: i, dist2: d2 };
                    if heap.len() < k {
                        heap.push(HeapItem(cand));
                    } else if cand.key_cmp(&heap.peek().unwrap().0) == Ordering::Less {
                        heap.pop();
                        heap.push(HeapItem(cand));
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff <= T::zero() { (left, right) } else { (right, left) };
                self.search(near, q, k, bound2, heap);
                let plane2 = diff * diff;
                let worst = if heap.len() < k {
                    bound2
                } else {
                    heap.peek().unwrap().0.dist2.min(bound2)
                };
                // equal distance may still win on index, so only prune strictly
                if plane2 <= worst {
                    self.search(far, q, k, bound2, heap);
                }
            }
        }
    }
}

fn build<T: Real>(points: &[Vec3<T>], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node<T>>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let slice = &mut order[start..end];
    let mut lo = points[slice[0]];
    let mut hi = lo;
    for &i in slice.iter() {
        lo = lo.min(points[i]);
        hi = hi.max(points[i]);
    }
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a]
            .axis(axis)
            .partial_cmp(&points[b].axis(axis))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let value = points[slice[mid]].axis(axis);
    nodes.push(Node::Leaf { start: 0, end: 0 });
    // left holds coordinates <= value, right >= value
    let left = build(points, order, start, start + mid, nodes);
    let right = build(points, order, start + mid, end, nodes);
    nodes[id] = Node::Split { axis, value, left, right };
    id
}
