//! Trajectory CSV: `timestamp,tx,ty,tz,qw,qx,qy,qz`, optional header line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Quat, Vec3};
use crate::scalar::Real;
use crate::trajectory::{Pose, Trajectory};

pub const TRAJECTORY_HEADER: &str = "timestamp,tx,ty,tz,qw,qx,qy,qz";

pub fn parse_trajectory<T: Real>(text: &str) -> Result<Trajectory<T>> {
    let mut samples = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let nums = match nums {
            Ok(n) => n,
            Err(_) if samples.is_empty() && fields.first() == Some(&"timestamp") => continue,
            Err(_) => return Err(Error::Format(format!("trajectory line {}: non-numeric field", ln + 1))),
        };
        if nums.len() != 8 {
            return Err(Error::Format(format!(
                "trajectory line {}: expected 8 fields, found {}",
                ln + 1,
                nums.len()
            )));
        }
        let l = |i: usize| T::lit(nums[i]);
        samples.push((
            l(0),
            Pose {
                translation: Vec3::new(l(1), l(2), l(3)),
                rotation: Quat::new(l(4), l(5), l(6), l(7)),
            },
        ));
    }
    Trajectory::new(samples)
}

pub fn load_trajectory<T: Real>(path: impl AsRef<Path>) -> Result<Trajectory<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text)
}

pub fn format_trajectory<T: Real>(tr: &Trajectory<T>) -> String {
    let mut s = format!("{TRAJECTORY_HEADER}\n");
    for (t, p) in tr.samples() {
        let (q, x) = (p.rotation, p.translation);
        let _ = writeln!(s, "{t},{},{},{},{},{},{},{}", x.x, x.y, x.z, q.w, q.x, q.y, q.z);
    }
    s
}

pub fn write_trajectory<T: Real>(tr: &Trajectory<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_trajectory(tr)).map_err(|e| Error::io(path, e))
}
