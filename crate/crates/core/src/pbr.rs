//! Principled-BSDF material records keyed by class ID and their binding to
//! mesh triangles.
//!
//! The shipped default table holds plausible placeholder values, not
//! laboratory measurements; replace it with calibrated data where available.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{ClassId, Palette, UNLABELED};
use crate::mesh::LabeledMesh;
use crate::scalar::Real;

pub const DEFAULT_TABLE_JSON: &str = include_str!("default_materials.json");

fn unlabeled_id() -> ClassId {
    UNLABELED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbrMaterial {
    #[serde(default = "unlabeled_id")]
    pub class_id: ClassId,
    pub name: String,
    pub base_color: [f64; 3],
    pub metallic: f64,
    pub roughness: f64,
    pub specular: f64,
    pub clearcoat: f64,
    pub opacity: f64,
    /// Calibrated diffuse LiDAR reflectivity, 0–255.
    pub diffuse_reflectivity_255: u8,
}

impl PbrMaterial {
    /// Diffuse albedo `ρ = reflectivity / 255`.
    pub fn albedo(&self) -> f64 {
        self.diffuse_reflectivity_255 as f64 / 255.0
    }

    fn validate(&self, class: &str) -> Result<()> {
        let unit = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Range {
                    field: field.to_string(),
                    class: class.to_string(),
                    value: v,
                    expected: "[0, 1]".into(),
                })
            }
        };
        for (i, c) in self.base_color.iter().enumerate() {
            unit(&format!("base_color[{i}]"), *c)?;
        }
        unit("metallic", self.metallic)?;
        unit("roughness", self.roughness)?;
        unit("specular", self.specular)?;
        unit("clearcoat", self.clearcoat)?;
        unit("opacity", self.opacity)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    fallback: Option<PbrMaterial>,
    materials: Vec<PbrMaterial>,
}

/// Validated class → material mapping with a fallback for unlabeled faces.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialTable {
    materials: BTreeMap<ClassId, PbrMaterial>,
    fallback: PbrMaterial,
}

impl MaterialTable {
    pub fn new(materials: Vec<PbrMaterial>, fallback: PbrMaterial) -> Result<Self> {
        let mut map = BTreeMap::new();
        for m in materials {
            if m.class_id == UNLABELED {
                return Err(Error::Schema(format!(
                    "material `{}` uses reserved class ID 255; use the fallback entry",
                    m.name
                )));
            }
            m.validate(&format!("{} ({})", m.class_id, m.name))?;
            if map.insert(m.class_id, m.clone()).is_some() {
                return Err(Error::Schema(format!("duplicate class ID {}", m.class_id)));
            }
        }
        fallback.validate("fallback")?;
        let fallback = PbrMaterial {
            class_id: UNLABELED,
            ..fallback
        };
        Ok(Self { materials: map, fallback })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let fallback = file
            .fallback
            .ok_or_else(|| Error::Schema("material table has no `fallback` entry".into()))?;
        Self::new(file.materials, fallback)
    }

    pub fn default_urban() -> Self {
        Self::from_json(DEFAULT_TABLE_JSON).expect("shipped table is valid")
    }

    pub fn to_json(&self) -> String {
        let file = TableFile {
            fallback: Some(self.fallback.clone()),
            materials: self.materials.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("table serializes")
    }

    /// Entries including the fallback.
    pub fn len(&self) -> usize {
        self.materials.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, class: ClassId) -> Option<&PbrMaterial> {
        if class == UNLABELED {
            Some(&self.fallback)
        } else {
            self.materials.get(&class)
        }
    }

    pub fn fallback(&self) -> &PbrMaterial {
        &self.fallback
    }

    pub fn materials(&self) -> impl Iterator<Item = &PbrMaterial> {
        self.materials.values()
    }

    pub fn palette(&self) -> Palette {
        Palette(self.materials.values().map(|m| (m.class_id, m.name.clone())).collect())
    }
}

pub fn load_material_table(path: impl AsRef<Path>) -> Result<MaterialTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MaterialTable::from_json(&text)
}

pub fn write_material_table(table: &MaterialTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_json() + "\n").map_err(|e| Error::io(path, e))
}

/// A mesh whose every triangle resolves to a material.
#[derive(Clone, Debug)]
pub struct BoundMesh<T> {
    pub mesh: LabeledMesh<T>,
    pub table: MaterialTable,
}

impl<T: Real> BoundMesh<T> {
    #[inline]
    pub fn material(&self, triangle: usize) -> &PbrMaterial {
        self.table
            .get(self.mesh.labels()[triangle])
            .expect("binding checked at construction")
    }

    /// Triangle count per bound material name.
    pub fn usage(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for f in 0..self.mesh.len() {
            *m.entry(self.material(f).name.clone()).or_insert(0) += 1;
        }
        m
    }
}

/// Binds every triangle; unlabeled faces take the fallback. Labels missing
/// from the table are reported together.
pub fn bind_materials<T: Real>(mesh: &LabeledMesh<T>, table: &MaterialTable) -> Result<BoundMesh<T>> {
    let missing: BTreeSet<ClassId> = mesh
        .labels()
        .iter()
        .copied()
        .filter(|&l| table.get(l).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnmappedClass(missing.into_iter().collect()));
    }
    Ok(BoundMesh {
        mesh: mesh.clone(),
        table: table.clone(),
    })
}
