//! Spinning multi-beam LiDAR simulation against a material-bound mesh.
//!
//! Received power follows a monostatic Lambertian model
//! `P = P0 · ρ · cosθ / r²`; reflectivity is that power normalized back
//! for range and incidence and scaled to 0–255.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::{Bvh, Facing, Hit, Ray};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::material::ClassId;
use crate::pbr::{BoundMesh, PbrMaterial};
use crate::scalar::Real;
use crate::trajectory::{Pose, Trajectory};

pub const DEFAULT_EMITTER_POWER: f64 = 1.0;

/// Beam layout and timing of the sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPattern {
    pub channels: u32,
    pub vfov_min_deg: f64,
    pub vfov_max_deg: f64,
    pub horizontal_samples: u32,
    pub rate_hz: f64,
    pub max_range_m: f64,
}

impl Default for ScanPattern {
    /// 128 beams at 20 Hz; the field of view, azimuth resolution and range
    /// are typical values for that sensor class.
    fn default() -> Self {
        Self {
            channels: 128,
            vfov_min_deg: -22.5,
            vfov_max_deg: 22.5,
            horizontal_samples: 1024,
            rate_hz: 20.0,
            max_range_m: 120.0,
        }
    }
}

impl ScanPattern {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Data(format!("scan pattern: {m}")));
        if self.channels == 0 {
            return bad("channels must be at least 1");
        }
        if !(self.vfov_min_deg < self.vfov_max_deg) {
            return bad("vfov_min_deg must be below vfov_max_deg");
        }
        if self.vfov_min_deg < -90.0 || self.vfov_max_deg > 90.0 {
            return bad("vertical field of view must lie within ±90°");
        }
        if self.horizontal_samples == 0 {
            return bad("horizontal_samples must be at least 1");
        }
        if !(self.rate_hz > 0.0) || !self.rate_hz.is_finite() {
            return bad("rate_hz must be positive");
        }
        if !(self.max_range_m > 0.0) || !self.max_range_m.is_finite() {
            return bad("max_range_m must be positive");
        }
        if self.channels > u16::MAX as u32 + 1 || self.horizontal_samples > u16::MAX as u32 + 1 {
            return bad("channel and azimuth indices must fit in 16 bits");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Schema(format!("scan pattern: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn rays_per_revolution(&self) -> usize {
        self.channels as usize * self.horizontal_samples as usize
    }

    /// Beam elevations in degrees, channel 0 at the top.
    pub fn elevations_deg(&self) -> Vec<f64> {
        let n = self.channels;
        if n == 1 {
            return vec![0.5 * (self.vfov_min_deg + self.vfov_max_deg)];
        }
        let step = (self.vfov_max_deg - self.vfov_min_deg) / (n - 1) as f64;
        (0..n).map(|c| self.vfov_max_deg - step * c as f64).collect()
    }
}

/// Sensor-frame beam directions (x forward, y left, z up), ordered by
/// channel then azimuth. Azimuths step counter-clockwise from +x.
pub fn sensor_directions<T: Real>(pattern: &ScanPattern) -> Vec<Vec3<T>> {
    let h = pattern.horizontal_samples;
    let mut out = Vec::with_capacity(pattern.rays_per_revolution());
    for el in pattern.elevations_deg() {
        let el = el.to_radians();
        for a in 0..h {
            let az = std::f64::consts::TAU * a as f64 / h as f64;
            let d = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            out.push(d.cast());
        }
    }
    out
}

/// World-space rays for one revolution at `pose`.
pub fn generate_rays<T: Real>(pattern: &ScanPattern, pose: &Pose<T>) -> Vec<Ray<T>> {
    let r = pose.rotation_matrix();
    sensor_directions::<T>(pattern)
        .into_iter()
        .map(|d| Ray {
            origin: pose.translation,
            dir: r.mul_vec(d).normalized().unwrap_or(d),
        })
        .collect()
}

/// `P0 · ρ · cosθ / r²`.
pub fn received_power<T: Real>(albedo: T, range: T, cos_incidence: T, emitter_power: T) -> Result<T> {
    if !(range > T::zero()) {
        return Err(Error::Domain(format!("range must be positive, got {range}")));
    }
    if !(cos_incidence > T::zero()) {
        return Err(Error::Domain(format!("incidence cosine must be positive, got {cos_incidence}")));
    }
    Ok(emitter_power * albedo * cos_incidence / (range * range))
}

/// Power of a hit on `material`.
pub fn compute_power<T: Real>(hit: &Hit<T>, material: &PbrMaterial, emitter_power: T) -> Result<T> {
    received_power(T::lit(material.albedo()), hit.range, hit.cos_incidence, emitter_power)
}

/// `clamp(round(255 · P r² / (P0 cosθ)), 0, 255)`.
pub fn normalize_reflectivity<T: Real>(power: T, range: T, cos_incidence: T, emitter_power: T) -> Result<u8> {
    if !(cos_incidence > T::zero()) {
        return Err(Error::Domain(format!("incidence cosine must be positive, got {cos_incidence}")));
    }
    if !(range > T::zero()) {
        return Err(Error::Domain(format!("range must be positive, got {range}")));
    }
    if !(power >= T::zero()) {
        return Err(Error::Domain(format!("power must be non-negative, got {power}")));
    }
    let v = (T::lit(255.0) * power * range * range / (emitter_power * cos_incidence)).round();
    Ok(v.max(T::zero()).min(T::lit(255.0)).to_u8().unwrap_or(255))
}

/// Optional zero-mean Gaussian perturbation of range (meters) and power
/// (same units as the emitter constant), reproducible from `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub range_sigma_m: f64,
    pub power_sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOptions {
    pub emitter_power: f64,
    pub noise: Option<NoiseModel>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            emitter_power: DEFAULT_EMITTER_POWER,
            noise: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LidarReturn<T> {
    pub point: Vec3<T>,
    pub range: T,
    pub cos_incidence: T,
    pub triangle: u32,
    pub class: ClassId,
    pub power: T,
    pub reflectivity: u8,
    pub revolution: u16,
    pub channel: u16,
    pub azimuth: u16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scan<T> {
    pub returns: Vec<LidarReturn<T>>,
    pub revolutions: usize,
    pub rays_cast: usize,
}

/// Number of whole revolutions sampled from a trajectory, one pose each.
pub fn revolution_count<T: Real>(pattern: &ScanPattern, trajectory: &Trajectory<T>) -> Result<usize> {
    let period = 1.0 / pattern.rate_hz;
    let dur = trajectory.duration().to_f64_lossy();
    if dur + 1e-12 < period {
        return Err(Error::Input(format!(
            "trajectory spans {dur} s, shorter than one revolution ({period} s)"
        )));
    }
    let n = (dur * pattern.rate_hz + 1e-9).floor() as usize + 1;
    if n > u16::MAX as usize + 1 {
        return Err(Error::Input("too many revolutions for 16-bit indices".into()));
    }
    Ok(n)
}

/// `(point, range, cos_incidence, triangle, power, reflectivity)`.
type Traced<T> = (Vec3<T>, T, T, usize, T, u8);

fn trace_one<T: Real>(
    bound: &BoundMesh<T>,
    bvh: &Bvh<T>,
    ray: &Ray<T>,
    max_range: T,
    opts: &SimulationOptions,
    ray_id: u64,
) -> Result<Option<Traced<T>>> {
    let Some(hit) = bvh.closest_hit(&bound.mesh, ray, max_range, Facing::Front) else {
        return Ok(None);
    };
    let p0 = T::lit(opts.emitter_power);
    let material = bound.material(hit.triangle);
    let mut range = hit.range;
    let mut power = compute_power(&hit, material, p0)?;
    if let Some(noise) = &opts.noise {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(ray_id);
        if noise.range_sigma_m > 0.0 {
            let n = Normal::new(0.0, noise.range_sigma_m).map_err(|e| Error::Input(e.to_string()))?;
            range = T::lit((range.to_f64_lossy() + n.sample(&mut rng)).max(1e-6));
        }
        if noise.power_sigma > 0.0 {
            let n = Normal::new(0.0, noise.power_sigma).map_err(|e| Error::Input(e.to_string()))?;
            power = T::lit((power.to_f64_lossy() + n.sample(&mut rng)).max(0.0));
        }
    }
    let refl = normalize_reflectivity(power, range, hit.cos_incidence, p0)?;
    let point = ray.origin + ray.dir * range;
    Ok(Some((point, range, hit.cos_incidence, hit.triangle, power, refl)))
}

/// Simulates one scan per revolution along the trajectory.
///
/// Output is ordered by (revolution, channel, azimuth) regardless of how
/// many threads trace the rays.
pub fn simulate_scan<T: Real>(
    bound: &BoundMesh<T>,
    bvh: &Bvh<T>,
    pattern: &ScanPattern,
    trajectory: &Trajectory<T>,
    opts: &SimulationOptions,
) -> Result<Scan<T>> {
    pattern.validate()?;
    let revs = revolution_count(pattern, trajectory)?;
    let dirs = sensor_directions::<T>(pattern);
    let h = pattern.horizontal_samples as usize;
    let max_range = T::lit(pattern.max_range_m);
    let mut returns = Vec::new();
    for k in 0..revs {
        let t = trajectory.start() + T::lit(k as f64 / pattern.rate_hz);
        let pose = trajectory.pose_at(t);
        let rot = pose.rotation_matrix();
        let base = (k * dirs.len()) as u64;
        let hits: Vec<Option<LidarReturn<T>>> = dirs
            .par_iter()
            .enumerate()
            .map(|(i, &d)| {
                let ray = Ray {
                    origin: pose.translation,
                    dir: rot.mul_vec(d).normalized().unwrap_or(d),
                };
                Ok(trace_one(bound, bvh, &ray, max_range, opts, base + i as u64)?.map(
                    |(point, range, cos, tri, power, refl)| LidarReturn {
                        point,
                        range,
                        cos_incidence: cos,
                        triangle: tri as u32,
                        class: bound.mesh.labels()[tri],
                        power,
                        reflectivity: refl,
                        revolution: k as u16,
                        channel: (i / h) as u16,
                        azimuth: (i % h) as u16,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        returns.extend(hits.into_iter().flatten());
    }
    Ok(Scan {
        returns,
        revolutions: revs,
        rays_cast: revs * dirs.len(),
    })
}
