//! Gaussian splat PLY in the usual 3DGS layout.
//!
//! `x y z` positions, `opacity` as a logit, `scale_0..2` as natural logs,
//! `rot_0..3` as a `(w, x, y, z)` quaternion, and any `f_dc_*`/`f_rest_*`
//! color coefficients. An optional `label` uchar carries projected material
//! classes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::cloud::{ColorCoefficients, GaussianCloud};
use crate::error::{Error, Result};
use crate::io::ply::{read_ply, write_ply, Element, PlyFile, PlyFormat, ScalarType};
use crate::linalg::{Quat, Vec3};
use crate::scalar::Real;

/// Opacities are clamped to `[OPACITY_EPS, 1 - OPACITY_EPS]` before taking the logit.
const OPACITY_EPS: f64 = 1e-9;

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn logit(p: f64) -> f64 {
    let p = p.clamp(OPACITY_EPS, 1.0 - OPACITY_EPS);
    (p / (1.0 - p)).ln()
}

fn storage_type<T: Real>() -> ScalarType {
    if std::mem::size_of::<T>() <= 4 {
        ScalarType::F32
    } else {
        ScalarType::F64
    }
}

pub fn load_gaussian_ply<T: Real>(path: impl AsRef<Path>) -> Result<GaussianCloud<T>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    gaussians_from_ply(&read_ply(BufReader::new(f))?)
}

pub fn gaussians_from_ply<T: Real>(ply: &PlyFile) -> Result<GaussianCloud<T>> {
    let v = ply.require_element("vertex")?;
    let col = |name: &str| v.require_scalar(name);
    let (x, y, z) = (col("x")?, col("y")?, col("z")?);
    let op = col("opacity")?;
    let s = [col("scale_0")?, col("scale_1")?, col("scale_2")?];
    let r = [col("rot_0")?, col("rot_1")?, col("rot_2")?, col("rot_3")?];

    let n = v.count;
    let mut positions = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    let mut rotations = Vec::with_capacity(n);
    let mut opacities = Vec::with_capacity(n);
    for i in 0..n {
        let raw = [x[i], y[i], z[i], op[i], s[0][i], s[1][i], s[2][i], r[0][i], r[1][i], r[2][i], r[3][i]];
        if raw.iter().any(|a| !a.is_finite()) {
            return Err(Error::Data(format!("splat {i}: non-finite value")));
        }
        positions.push(Vec3::new(T::lit(x[i]), T::lit(y[i]), T::lit(z[i])));
        scales.push(Vec3::new(
            T::lit(s[0][i].exp()),
            T::lit(s[1][i].exp()),
            T::lit(s[2][i].exp()),
        ));
        let q = Quat::new(r[0][i], r[1][i], r[2][i], r[3][i])
            .normalized()
            .ok_or_else(|| Error::Data(format!("splat {i}: zero rotation quaternion")))?;
        rotations.push(Quat::new(T::lit(q.w), T::lit(q.x), T::lit(q.y), T::lit(q.z)));
        opacities.push(T::lit(logistic(op[i])));
    }

    let color_names: Vec<String> = v
        .properties
        .iter()
        .filter(|p| p.name.starts_with("f_dc_") || p.name.starts_with("f_rest_"))
        .map(|p| p.name.clone())
        .collect();
    let colors = if color_names.is_empty() {
        None
    } else {
        let cols: Vec<&[f64]> = color_names
            .iter()
            .map(|nm| v.require_scalar(nm))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            values.extend(cols.iter().map(|c| c[i] as f32));
        }
        Some(ColorCoefficients {
            names: color_names,
            values,
        })
    };

    let labels = match v.scalar("label") {
        Some(l) => Some(
            l.iter()
                .enumerate()
                .map(|(i, &c)| {
                    if (0.0..=255.0).contains(&c) && c.fract() == 0.0 {
                        Ok(c as u8)
                    } else {
                        Err(Error::Data(format!("splat {i}: label {c} is not a class ID")))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    let cloud = GaussianCloud {
        positions,
        scales,
        rotations,
        opacities,
        colors,
        labels,
    };
    cloud.validate()?;
    Ok(cloud)
}

/// Encodes a cloud back into the file convention. Positions and rotations
/// are stored at the precision of `T` (float for `f32`, double for `f64`).
pub fn gaussians_to_ply<T: Real>(cloud: &GaussianCloud<T>, format: PlyFormat) -> PlyFile {
    let st = storage_type::<T>();
    let n = cloud.len();
    let f = |g: &dyn Fn(usize) -> f64| (0..n).map(g).collect::<Vec<f64>>();
    let mut el = Element::new("vertex", n)
        .with_scalar("x", st, f(&|i| cloud.positions[i].x.to_f64_lossy()))
        .with_scalar("y", st, f(&|i| cloud.positions[i].y.to_f64_lossy()))
        .with_scalar("z", st, f(&|i| cloud.positions[i].z.to_f64_lossy()));
    if let Some(c) = &cloud.colors {
        let k = c.names.len();
        for (j, name) in c.names.iter().enumerate() {
            el = el.with_scalar(name.clone(), ScalarType::F32, f(&|i| c.values[i * k + j] as f64));
        }
    }
    el = el.with_scalar("opacity", st, f(&|i| logit(cloud.opacities[i].to_f64_lossy())));
    for axis in 0..3 {
        el = el.with_scalar(
            format!("scale_{axis}"),
            st,
            f(&|i| cloud.scales[i].axis(axis).to_f64_lossy().ln()),
        );
    }
    el = el
        .with_scalar("rot_0", st, f(&|i| cloud.rotations[i].w.to_f64_lossy()))
        .with_scalar("rot_1", st, f(&|i| cloud.rotations[i].x.to_f64_lossy()))
        .with_scalar("rot_2", st, f(&|i| cloud.rotations[i].y.to_f64_lossy()))
        .with_scalar("rot_3", st, f(&|i| cloud.rotations[i].z.to_f64_lossy()));
    if let Some(l) = &cloud.labels {
        el = el.with_scalar("label", ScalarType::U8, l.iter().map(|&c| c as f64).collect());
    }
    PlyFile {
        format,
        comments: Vec::new(),
        elements: vec![el],
    }
}

pub fn write_gaussian_ply<T: Real>(cloud: &GaussianCloud<T>, path: impl AsRef<Path>, format: PlyFormat) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_ply(&mut w, &gaussians_to_ply(cloud, format))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_splat(opacity_logit: f64, log_scale: f64) -> PlyFile {
        let e = Element::new("vertex", 1)
            .with_scalar("x", ScalarType::F32, vec![1.0])
            .with_scalar("y", ScalarType::F32, vec![2.0])
            .with_scalar("z", ScalarType::F32, vec![3.0])
            .with_scalar("opacity", ScalarType::F32, vec![opacity_logit])
            .with_scalar("scale_0", ScalarType::F64, vec![log_scale])
            .with_scalar("scale_1", ScalarType::F64, vec![log_scale])
            .with_scalar("scale_2", ScalarType::F64, vec![log_scale])
            .with_scalar("rot_0", ScalarType::F32, vec![2.0])
            .with_scalar("rot_1", ScalarType::F32, vec![0.0])
            .with_scalar("rot_2", ScalarType::F32, vec![0.0])
            .with_scalar("rot_3", ScalarType::F32, vec![0.0]);
        PlyFile {
            format: PlyFormat::Ascii,
            comments: vec![],
            elements: vec![e],
        }
    }

    #[test]
    fn logit_zero_is_half_opacity() {
        let c: GaussianCloud<f64> = gaussians_from_ply(&one_splat(0.0, 0.0)).unwrap();
        assert_eq!(c.opacities[0], 0.5);
    }

    #[test]
    fn log_scale_is_exponentiated() {
        let c: GaussianCloud<f64> = gaussians_from_ply(&one_splat(0.0, 2.0f64.ln())).unwrap();
        assert!((c.scales[0].x - 2.0).abs() < 1e-15);
        assert_eq!(c.rotations[0], Quat::identity());
    }

    #[test]
    fn missing_property_is_named() {
        let mut p = one_splat(0.0, 0.0);
        let el = &mut p.elements[0];
        let idx = el.properties.iter().position(|q| q.name == "rot_2").unwrap();
        el.properties.remove(idx);
        el.columns.remove(idx);
        match gaussians_from_ply::<f64>(&p) {
            Err(Error::Format(msg)) => assert!(msg.contains("rot_2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_reports_index() {
        let p = one_splat(f64::NAN, 0.0);
        match gaussians_from_ply::<f64>(&p) {
            Err(Error::Data(msg)) => assert!(msg.contains("splat 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
