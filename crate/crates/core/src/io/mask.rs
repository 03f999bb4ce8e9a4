//! 8-bit single-channel mask images and instance masks.

use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::material::{ClassId, InstanceSet, MaterialMap, Palette};

fn open(path: &Path) -> Result<DynamicImage> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    image::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Loads a class-ID image. Anything other than 8-bit single-channel is a
/// format error; class IDs missing from `palette` are a data error.
pub fn load_mask(path: impl AsRef<Path>, palette: &Palette) -> Result<MaterialMap> {
    let path = path.as_ref();
    match open(path)? {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            MaterialMap::new(w, h, img.into_raw(), palette.clone())
        }
        other => Err(Error::Format(format!(
            "{}: mask must be 8-bit single-channel, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

pub fn write_mask(map: &MaterialMap, path: impl AsRef<Path>) -> Result<()> {
    write_gray(map.width, map.height, map.classes.clone(), path.as_ref())
}

pub fn write_gray(width: u32, height: u32, data: Vec<ClassId>, path: &Path) -> Result<()> {
    let img: GrayImage = ImageBuffer::from_raw(width, height, data)
        .ok_or_else(|| Error::Shape("image buffer does not match dimensions".into()))?;
    img.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Loads instance masks.
///
/// A directory holds one binary mask per PNG (non-zero = inside), ordered by
/// file name; masks may overlap. A single file is an indexed label image
/// (8- or 16-bit gray, 0 = background) whose instances are disjoint.
pub fn load_instances(path: impl AsRef<Path>) -> Result<InstanceSet> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        let mut dims = None;
        let mut masks = Vec::with_capacity(files.len());
        for f in &files {
            let img = match open(f)? {
                DynamicImage::ImageLuma8(i) => i,
                other => {
                    return Err(Error::Format(format!(
                        "{}: instance mask must be 8-bit single-channel, found {:?}",
                        f.display(),
                        other.color()
                    )))
                }
            };
            let d = img.dimensions();
            if *dims.get_or_insert(d) != d {
                return Err(Error::Shape(format!(
                    "{}: {}x{} differs from the other instance masks",
                    f.display(),
                    d.0,
                    d.1
                )));
            }
            masks.push(img.into_raw().into_iter().map(|v| v != 0).collect());
        }
        let (w, h) = dims.unwrap_or((0, 0));
        InstanceSet::new(w, h, masks)
    } else {
        let (w, h, idx): (u32, u32, Vec<u16>) = match open(path)? {
            DynamicImage::ImageLuma8(i) => {
                let (w, h) = i.dimensions();
                (w, h, i.into_raw().into_iter().map(u16::from).collect())
            }
            DynamicImage::ImageLuma16(i) => {
                let (w, h) = i.dimensions();
                (w, h, i.into_raw())
            }
            other => {
                return Err(Error::Format(format!(
                    "{}: instance index image must be 8/16-bit gray, found {:?}",
                    path.display(),
                    other.color()
                )))
            }
        };
        InstanceSet::from_index_image(w, h, &idx)
    }
}

/// Writes each instance as `instance_NNNN.png` into `dir`.
pub fn write_instance_dir(set: &InstanceSet, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, m) in set.masks.iter().enumerate() {
        let data = m.iter().map(|&b| if b { 255 } else { 0 }).collect();
        write_gray(set.width, set.height, data, &dir.join(format!("instance_{k:04}.png")))?;
    }
    Ok(())
}

/// Writes a 16-bit indexed instance image. Instances must be disjoint.
pub fn write_instance_index(set: &InstanceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if set.len() >= u16::MAX as usize {
        return Err(Error::Input("too many instances for a 16-bit index image".into()));
    }
    let mut idx = vec![0u16; set.width as usize * set.height as usize];
    for (k, m) in set.masks.iter().enumerate() {
        for (p, _) in m.iter().enumerate().filter(|(_, &b)| b) {
            if idx[p] != 0 {
                return Err(Error::Data(format!("pixel {p} belongs to two instances")));
            }
            idx[p] = k as u16 + 1;
        }
    }
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(set.width, set.height, idx)
        .ok_or_else(|| Error::Shape("instance buffer does not match dimensions".into()))?;
    img.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
