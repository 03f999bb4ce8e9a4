//! Simulated point cloud files.
//!
//! CSV: header `x,y,z,range,cos_incidence,power,reflectivity,class,triangle,revolution,channel,azimuth`.
//! Binary: headerless little-endian records of 24 bytes:
//! `x y z range` as f32, `reflectivity class` as u8,
//! `revolution channel azimuth` as u16.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lidar::LidarReturn;
use crate::linalg::Vec3;
use crate::material::{ClassId, UNLABELED};
use crate::scalar::Real;

pub const CSV_HEADER: &str = "x,y,z,range,cos_incidence,power,reflectivity,class,triangle,revolution,channel,azimuth";
pub const BINARY_RECORD_SIZE: usize = 24;

/// The part of a LiDAR point the evaluation needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudPoint {
    pub position: Vec3<f64>,
    pub reflectivity: u8,
    pub class: ClassId,
}

impl<T: Real> From<&LidarReturn<T>> for CloudPoint {
    fn from(r: &LidarReturn<T>) -> Self {
        Self {
            position: r.point.cast(),
            reflectivity: r.reflectivity,
            class: r.class,
        }
    }
}

pub fn format_returns_csv<T: Real>(returns: &[LidarReturn<T>]) -> String {
    let mut s = String::with_capacity(returns.len() * 96);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in returns {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.point.x, r.point.y, r.point.z, r.range, r.cos_incidence, r.power, r.reflectivity, r.class,
            r.triangle, r.revolution, r.channel, r.azimuth
        );
    }
    s
}

pub fn encode_returns_binary<T: Real>(returns: &[LidarReturn<T>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(returns.len() * BINARY_RECORD_SIZE);
    for r in returns {
        for v in [r.point.x, r.point.y, r.point.z, r.range] {
            out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
        out.push(r.reflectivity);
        out.push(r.class);
        for v in [r.revolution, r.channel, r.azimuth] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Binary record decoded back: `(x, y, z, range, reflectivity, class, revolution, channel, azimuth)`.
pub type BinaryRecord = ([f32; 4], u8, u8, [u16; 3]);

pub fn decode_returns_binary(bytes: &[u8]) -> Result<Vec<BinaryRecord>> {
    if !bytes.len().is_multiple_of(BINARY_RECORD_SIZE) {
        return Err(Error::Format(format!(
            "binary cloud size {} is not a multiple of {BINARY_RECORD_SIZE}",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(BINARY_RECORD_SIZE)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes(c[i..i + 4].try_into().unwrap());
            let u = |i: usize| u16::from_le_bytes([c[i], c[i + 1]]);
            ([f(0), f(4), f(8), f(12)], c[16], c[17], [u(18), u(20), u(22)])
        })
        .collect())
}

/// Reads any CSV point cloud with `x`, `y`, `z` and `reflectivity` columns
/// (optional `class`), in any order.
pub fn parse_cloud_csv(text: &str) -> Result<Vec<CloudPoint>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("point cloud CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| cols.iter().position(|c| *c == name);
    let need = |name: &str| {
        find(name).ok_or_else(|| Error::Format(format!("point cloud CSV lacks a `{name}` column")))
    };
    let (ix, iy, iz, ir) = (need("x")?, need("y")?, need("z")?, need("reflectivity")?);
    let ic = find("class");
    let mut out = Vec::new();
    for (ln, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Format(format!("point cloud CSV line {}: malformed record", ln + 1));
        let num = |i: usize| f.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        let p = Vec3::new(num(ix)?, num(iy)?, num(iz)?);
        if !p.is_finite() {
            return Err(Error::Data(format!("point cloud CSV line {}: non-finite coordinate", ln + 1)));
        }
        let refl = num(ir)?;
        if !(0.0..=255.0).contains(&refl) {
            return Err(Error::Data(format!("point cloud CSV line {}: reflectivity {refl} outside 0–255", ln + 1)));
        }
        let class = match ic {
            Some(i) => num(i)? as ClassId,
            None => UNLABELED,
        };
        out.push(CloudPoint {
            position: p,
            reflectivity: refl.round() as u8,
            class,
        });
    }
    Ok(out)
}

pub fn load_cloud_csv(path: impl AsRef<Path>) -> Result<Vec<CloudPoint>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cloud_csv(&text)
}
