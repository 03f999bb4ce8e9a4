use crate::error::{Error, Result};
use crate::linalg::{Mat3, Quat, Rigid, Vec3};
use crate::scalar::Real;

/// Sensor pose in the world frame (sensor → world).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T> {
    pub rotation: Quat<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Quat::identity(),
            translation: Vec3::zero(),
        }
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        self.rotation.to_mat3()
    }

    pub fn to_rigid(&self) -> Rigid<T> {
        Rigid {
            rotation: self.rotation_matrix(),
            translation: self.translation,
        }
    }
}

/// Time-ordered sensor poses.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    samples: Vec<(T, Pose<T>)>,
}

impl<T: Real> Trajectory<T> {
    /// Quaternions are normalized; timestamps must be strictly increasing.
    pub fn new(samples: Vec<(T, Pose<T>)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("trajectory has no samples".into()));
        }
        let mut out = Vec::with_capacity(samples.len());
        for (i, (t, pose)) in samples.into_iter().enumerate() {
            if !t.is_finite() || !pose.translation.is_finite() {
                return Err(Error::Data(format!("trajectory sample {i}: non-finite value")));
            }
            if let Some(&(prev, _)) = out.last() {
                if !(t > prev) {
                    return Err(Error::Data(format!(
                        "trajectory sample {i}: timestamp {t} not after {prev}"
                    )));
                }
            }
            let q = pose
                .rotation
                .normalized()
                .ok_or_else(|| Error::Data(format!("trajectory sample {i}: zero quaternion")))?;
            out.push((
                t,
                Pose {
                    rotation: q,
                    translation: pose.translation,
                },
            ));
        }
        Ok(Self { samples: out })
    }

    pub fn samples(&self) -> &[(T, Pose<T>)] {
        &self.samples
    }

    pub fn start(&self) -> T {
        self.samples[0].0
    }

    pub fn end(&self) -> T {
        self.samples[self.samples.len() - 1].0
    }

    pub fn duration(&self) -> T {
        self.end() - self.start()
    }

    /// Pose at time `t`: linear in translation, slerp in rotation, clamped
    /// to the first/last sample outside the covered interval.
    pub fn pose_at(&self, t: T) -> Pose<T> {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        if t >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        // first sample with time > t; exists because t < end
        let hi = s.partition_point(|(ts, _)| *ts <= t);
        let (t0, p0) = s[hi - 1];
        let (t1, p1) = s[hi];
        let u = (t - t0) / (t1 - t0);
        Pose {
            rotation: p0.rotation.slerp(&p1.rotation, u),
            translation: p0.translation + (p1.translation - p0.translation) * u,
        }
    }

    /// Applies `world' = g ∘ world` to every pose.
    pub fn transformed(&self, rotation: Quat<T>, translation: Vec3<T>) -> Self {
        let r = rotation.to_mat3();
        let samples = self
            .samples
            .iter()
            .map(|&(t, p)| {
                (
                    t,
                    Pose {
                        rotation: rotation.mul(&p.rotation),
                        translation: r.mul_vec(p.translation) + translation,
                    },
                )
            })
            .collect();
        Self { samples }
    }
}
