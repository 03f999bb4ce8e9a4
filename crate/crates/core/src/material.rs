//! Per-pixel material maps, instance masks and the class palette.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Material class identifier. [`UNLABELED`] marks "no class".
pub type ClassId = u8;

/// Sentinel for unknown/unlabeled shared by masks, splats and triangles.
pub const UNLABELED: ClassId = 255;

/// The ten urban material classes the default table and palette cover.
pub const URBAN_CLASSES: [(ClassId, &str); 10] = [
    (0, "glass"),
    (1, "brick_ceramic"),
    (2, "concrete"),
    (3, "asphalt"),
    (4, "vegetation"),
    (5, "metal"),
    (6, "plastic"),
    (7, "gravel"),
    (8, "tree_trunk"),
    (9, "rubber"),
];

/// Class ID → human readable name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette(pub BTreeMap<ClassId, String>);

impl Palette {
    pub fn urban() -> Self {
        Self(URBAN_CLASSES.iter().map(|&(id, n)| (id, n.to_string())).collect())
    }

    /// Palette accepting every class ID 0..=254, named by number.
    pub fn permissive() -> Self {
        Self((0..UNLABELED).map(|id| (id, format!("class_{id}"))).collect())
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.0.contains_key(&id)
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.0.get(&id).map(String::as_str)
    }
}

impl Default for Palette {
    fn default() -> Self {
        Self::urban()
    }
}

/// Row-major per-pixel class image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaterialMap {
    pub width: u32,
    pub height: u32,
    pub classes: Vec<ClassId>,
    pub palette: Palette,
}

impl MaterialMap {
    pub fn new(width: u32, height: u32, classes: Vec<ClassId>, palette: Palette) -> Result<Self> {
        let map = Self {
            width,
            height,
            classes,
            palette,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() != self.width as usize * self.height as usize {
            return Err(Error::Shape(format!(
                "material map has {} pixels, expected {}x{}",
                self.classes.len(),
                self.width,
                self.height
            )));
        }
        if let Some((i, &c)) = self
            .classes
            .iter()
            .enumerate()
            .find(|(_, &c)| c != UNLABELED && !self.palette.contains(c))
        {
            return Err(Error::Data(format!(
                "pixel {i} carries class {c} which is not in the palette"
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.classes.len()
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> ClassId {
        self.classes[y as usize * self.width as usize + x as usize]
    }

    pub fn unlabeled_count(&self) -> usize {
        self.classes.iter().filter(|&&c| c == UNLABELED).count()
    }
}

/// Binary instance masks over one view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSet {
    pub width: u32,
    pub height: u32,
    pub masks: Vec<Vec<bool>>,
}

impl InstanceSet {
    /// Fails with a shape error if any mask differs from `width × height`.
    pub fn new(width: u32, height: u32, masks: Vec<Vec<bool>>) -> Result<Self> {
        let n = width as usize * height as usize;
        if let Some((i, m)) = masks.iter().enumerate().find(|(_, m)| m.len() != n) {
            return Err(Error::Shape(format!(
                "instance {i} has {} pixels, expected {width}x{height}",
                m.len()
            )));
        }
        Ok(Self { width, height, masks })
    }

    /// Builds disjoint instances from an indexed label image: value `k > 0`
    /// marks membership in instance `k`, 0 is background. Instances are
    /// ordered by label value; unused values produce no instance.
    pub fn from_index_image(width: u32, height: u32, index: &[u16]) -> Result<Self> {
        if index.len() != width as usize * height as usize {
            return Err(Error::Shape("instance index image size mismatch".into()));
        }
        let mut ids: Vec<u16> = index.iter().copied().filter(|&v| v != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        let masks = ids
            .iter()
            .map(|&id| index.iter().map(|&v| v == id).collect())
            .collect();
        Self::new(width, height, masks)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn pixel_counts(&self) -> Vec<usize> {
        self.masks.iter().map(|m| m.iter().filter(|&&b| b).count()).collect()
    }

    /// True when no pixel is claimed by two instances.
    pub fn is_disjoint(&self) -> bool {
        let n = self.width as usize * self.height as usize;
        (0..n).all(|p| self.masks.iter().filter(|m| m[p]).count() <= 1)
    }
}
