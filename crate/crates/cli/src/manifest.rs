//! Batch manifest: one entry per scene, paths relative to the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use material_twin::{Error, Result};
use serde::Deserialize;

use crate::provenance::io_err;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub scenes: Vec<SceneEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagePair {
    pub rendered: PathBuf,
    pub truth: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub name: String,
    pub splats: PathBuf,
    pub mesh: PathBuf,
    /// COLMAP text model directory.
    pub cameras: PathBuf,
    /// Camera image name → material mask.
    pub masks: BTreeMap<String, PathBuf>,
    /// Camera image name → instance masks (file or directory).
    #[serde(default)]
    pub instances: BTreeMap<String, PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub material_table: Option<PathBuf>,
    pub pattern: Option<PathBuf>,
    pub reference_cloud: Option<PathBuf>,
    #[serde(default)]
    pub images: Vec<ImagePair>,
}

impl Manifest {
    /// Parses the manifest and resolves every path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut names = BTreeSet::new();
        if m.scenes.is_empty() {
            return Err(Error::Schema(format!("{}: no scenes", path.display())));
        }
        for s in &mut m.scenes {
            if s.name.is_empty() || s.name.contains(['/', '\\']) || s.name == "." || s.name == ".." {
                return Err(Error::Schema(format!("invalid scene name `{}`", s.name)));
            }
            if !names.insert(s.name.clone()) {
                return Err(Error::Schema(format!("duplicate scene name `{}`", s.name)));
            }
            if let Some(id) = s.instances.keys().find(|k| !s.masks.contains_key(*k)) {
                return Err(Error::Schema(format!(
                    "scene `{}`: instances given for `{id}` which has no mask",
                    s.name
                )));
            }
            s.resolve(base);
        }
        Ok(m)
    }
}

impl SceneEntry {
    fn resolve(&mut self, base: &Path) {
        let j = |p: &mut PathBuf| *p = base.join(&*p);
        j(&mut self.splats);
        j(&mut self.mesh);
        j(&mut self.cameras);
        self.masks.values_mut().for_each(j);
        self.instances.values_mut().for_each(j);
        for p in [
            &mut self.trajectory,
            &mut self.material_table,
            &mut self.pattern,
            &mut self.reference_cloud,
        ]
        .into_iter()
        .flatten()
        {
            j(p);
        }
        for pair in &mut self.images {
            j(&mut pair.rendered);
            j(&mut pair.truth);
        }
    }
}
