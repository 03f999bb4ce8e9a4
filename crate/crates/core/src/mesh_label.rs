//! Transfer of Gaussian labels onto mesh triangles.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::linalg::Vec3;
use crate::material::{ClassId, Palette, UNLABELED};
use crate::mesh::LabeledMesh;
use crate::scalar::Real;
use crate::vote::VoteHistogram;

pub const DEFAULT_KNN_K: usize = 1;

/// Each labeled Gaussian votes for its `k` nearest triangles (by centroid
/// distance, ties → lower triangle index). Triangles take the majority of
/// their votes; triangles without votes become [`UNLABELED`].
pub fn assign_gaussians_to_triangles<T: Real>(
    positions: &[Vec3<T>],
    labels: &[ClassId],
    mesh: &LabeledMesh<T>,
    k: usize,
) -> Result<LabeledMesh<T>> {
    if mesh.is_empty() {
        return Err(Error::Input("mesh has no triangles".into()));
    }
    if positions.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} gaussian positions but {} labels",
            positions.len(),
            labels.len()
        )));
    }
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let tree = KdTree::new((0..mesh.len()).map(|f| mesh.centroid(f)).collect());
    let hits: Vec<(ClassId, Vec<usize>)> = positions
        .par_iter()
        .zip(labels.par_iter())
        .filter(|(_, &l)| l != UNLABELED)
        .map(|(&p, &l)| (l, tree.nearest_k(p, k).into_iter().map(|n| n.index).collect()))
        .collect();
    let mut hist = vec![VoteHistogram::new(); mesh.len()];
    for (label, tris) in &hits {
        for &t in tris {
            hist[t].add(*label);
        }
    }
    mesh.with_labels(hist.iter().map(VoteHistogram::majority).collect())
}

/// Triangles sharing an edge, sorted and deduplicated per triangle.
pub fn edge_adjacency(triangles: &[[u32; 3]]) -> Vec<Vec<u32>> {
    let mut edges: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (f, t) in triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push(f as u32);
        }
    }
    let mut adj = vec![Vec::new(); triangles.len()];
    for faces in edges.values() {
        for &f in faces {
            adj[f as usize].extend(faces.iter().copied().filter(|&g| g != f));
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillStats {
    pub filled: usize,
    pub remaining_unlabeled: usize,
}

/// Labels unlabeled triangles from their nearest labeled triangle in hop
/// distance across shared edges (ties → lowest class ID). Triangles more
/// than `max_hops` away, or in components without any label, stay unlabeled.
pub fn fill_unlabeled<T: Real>(mesh: &LabeledMesh<T>, max_hops: Option<usize>) -> Result<(LabeledMesh<T>, FillStats)> {
    let adj = edge_adjacency(mesh.triangles());
    let mut labels = mesh.labels().to_vec();
    let mut frontier: Vec<usize> = (0..labels.len()).filter(|&f| labels[f] != UNLABELED).collect();
    let mut filled = 0;
    let mut hop = 0;
    while !frontier.is_empty() && max_hops.is_none_or(|m| hop < m) {
        hop += 1;
        // label of every newly reached triangle = min label among frontier neighbors
        let mut next: BTreeMap<usize, ClassId> = BTreeMap::new();
        for &f in &frontier {
            for &g in &adj[f] {
                let g = g as usize;
                if labels[g] == UNLABELED {
                    let e = next.entry(g).or_insert(UNLABELED);
                    *e = (*e).min(labels[f]);
                }
            }
        }
        for (&g, &l) in &next {
            labels[g] = l;
        }
        filled += next.len();
        frontier = next.into_keys().collect();
    }
    let remaining = labels.iter().filter(|&&l| l == UNLABELED).count();
    Ok((
        mesh.with_labels(labels)?,
        FillStats {
            filled,
            remaining_unlabeled: remaining,
        },
    ))
}

/// Counts and per-class surface areas of a labeled mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshLabelSummary {
    pub triangles: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    /// Triangles labeled by adjacency filling rather than by Gaussians.
    pub filled: usize,
    pub fill_enabled: bool,
    /// Class name → area in m².
    pub class_areas_m2: BTreeMap<String, f64>,
}

pub fn summarize<T: Real>(mesh: &LabeledMesh<T>, fill: Option<FillStats>, palette: &Palette) -> MeshLabelSummary {
    let mut areas: BTreeMap<String, f64> = BTreeMap::new();
    for (f, &l) in mesh.labels().iter().enumerate() {
        let name = if l == UNLABELED {
            "unlabeled".to_string()
        } else {
            palette.name(l).map_or_else(|| format!("class_{l}"), str::to_string)
        };
        *areas.entry(name).or_insert(0.0) += mesh.area(f).to_f64_lossy();
    }
    let labeled = mesh.labeled_count();
    MeshLabelSummary {
        triangles: mesh.len(),
        labeled,
        unlabeled: mesh.len() - labeled,
        filled: fill.map_or(0, |s| s.filled),
        fill_enabled: fill.is_some(),
        class_areas_m2: areas,
    }
}
