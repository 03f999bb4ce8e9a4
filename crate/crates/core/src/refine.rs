//! Shape-aware refinement of per-view material maps.
//!
//! Instance masks are first made disjoint, then every instance takes the
//! majority material of its pixels.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::material::{ClassId, InstanceSet, MaterialMap, UNLABELED};
use crate::vote::VoteHistogram;

/// Makes instances pairwise disjoint.
///
/// A pixel claimed by several instances stays with the one that has the
/// fewest pixels (ties: lower index). Instances left empty are dropped; the
/// survivors keep their relative order.
pub fn remove_overlaps(instances: &InstanceSet) -> Result<InstanceSet> {
    let n = instances.width as usize * instances.height as usize;
    if let Some(i) = instances.masks.iter().position(|m| m.len() != n) {
        return Err(Error::Shape(format!("instance {i} does not match the view size")));
    }
    let counts = instances.pixel_counts();
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by_key(|&i| (counts[i], i));

    let mut owner: Vec<Option<usize>> = vec![None; n];
    for &i in &order {
        for (p, _) in instances.masks[i].iter().enumerate().filter(|(_, &b)| b) {
            owner[p].get_or_insert(i);
        }
    }
    let mut masks: Vec<Vec<bool>> = vec![vec![false; n]; instances.len()];
    for (p, o) in owner.iter().enumerate() {
        if let Some(i) = *o {
            masks[i][p] = true;
        }
    }
    let masks = masks.into_iter().filter(|m| m.iter().any(|&b| b)).collect();
    InstanceSet::new(instances.width, instances.height, masks)
}

/// Per-instance majority label; unlabeled pixels abstain.
pub fn instance_majorities(materials: &MaterialMap, instances: &InstanceSet) -> Vec<ClassId> {
    instances
        .masks
        .par_iter()
        .map(|m| {
            m.iter()
                .zip(&materials.classes)
                .filter(|(&inside, _)| inside)
                .map(|(_, &c)| c)
                .collect::<VoteHistogram>()
                .majority()
        })
        .collect()
}

/// Replaces every pixel inside an instance with the instance's majority
/// class. Instances with only unlabeled pixels and pixels outside all
/// instances are left as they are.
pub fn refine_labels(materials: &MaterialMap, instances: &InstanceSet) -> Result<MaterialMap> {
    if (materials.width, materials.height) != (instances.width, instances.height) {
        return Err(Error::Shape(format!(
            "material map is {}x{}, instances are {}x{}",
            materials.width, materials.height, instances.width, instances.height
        )));
    }
    let n = materials.pixel_count();
    if let Some(i) = instances.masks.iter().position(|m| m.len() != n) {
        return Err(Error::Shape(format!("instance {i} does not match the view size")));
    }
    if !instances.is_disjoint() {
        return Err(Error::Input("instances overlap; remove overlaps first".into()));
    }
    let majority = instance_majorities(materials, instances);
    let mut out = materials.clone();
    for (m, &label) in instances.masks.iter().zip(&majority) {
        if label == UNLABELED {
            continue;
        }
        for (c, _) in out.classes.iter_mut().zip(m).filter(|(_, &b)| b) {
            *c = label;
        }
    }
    Ok(out)
}
