use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Calibrated pinhole camera with a world→camera extrinsic.
///
/// Camera frame is +Z forward, +X right, +Y down. Pixel `(i, j)` covers
/// `[i, i+1) × [j, j+1)`, so its center sits at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel<T> {
    pub id: String,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> CameraModel<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        fx: T,
        fy: T,
        cx: T,
        cy: T,
        width: u32,
        height: u32,
        rotation: Mat3<T>,
        translation: Vec3<T>,
    ) -> Result<Self> {
        let cam = Self {
            id: id.into(),
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            rotation,
            translation,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `eye` looking at `target`, with `up` pointing towards the
    /// top of the image; principal point at the image center.
    pub fn look_at(
        id: impl Into<String>,
        eye: Vec3<T>,
        target: Vec3<T>,
        up: Vec3<T>,
        focal: T,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let id = id.into();
        let degenerate = || Error::Data(format!("camera {id}: degenerate look-at frame"));
        let forward = (target - eye).normalized().ok_or_else(degenerate)?;
        let right = forward.cross(up).normalized().ok_or_else(degenerate)?;
        let down = forward.cross(right);
        let rotation = Mat3::from_rows([right.to_array(), down.to_array(), forward.to_array()]);
        let translation = -rotation.mul_vec(eye);
        let (cx, cy) = (T::lit(width as f64 * 0.5), T::lit(height as f64 * 0.5));
        Self::new(id, focal, focal, cx, cy, width, height, rotation, translation)
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        if !(self.fx > T::zero() && self.fy > T::zero()) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::Data(format!("camera {id}: focal lengths must be positive")));
        }
        let (w, h) = (T::lit(self.width as f64), T::lit(self.height as f64));
        if !(self.cx > T::zero() && self.cx < w && self.cy > T::zero() && self.cy < h) {
            return Err(Error::Data(format!(
                "camera {id}: principal point ({}, {}) outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        if !self.rotation.is_rotation(T::lit(1e-6)) {
            return Err(Error::Data(format!("camera {id}: rotation is not orthonormal with det +1")));
        }
        if !self.translation.is_finite() {
            return Err(Error::Data(format!("camera {id}: non-finite translation")));
        }
        Ok(())
    }

    #[inline]
    pub fn world_to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3<T> {
        -self.rotation.transpose().mul_vec(self.translation)
    }

    /// Pixel coordinates and depth of a world point, `None` when `z <= 0`.
    pub fn project(&self, p: Vec3<T>) -> Option<(T, T, T)> {
        let c = self.world_to_camera(p);
        if c.z <= T::zero() {
            return None;
        }
        Some((self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy, c.z))
    }

    /// Unit world-space direction of the ray through pixel coordinates `(u, v)`.
    pub fn pixel_ray(&self, u: T, v: T) -> Vec3<T> {
        let d = Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, T::one());
        self.rotation
            .transpose()
            .mul_vec(d)
            .normalized()
            .expect("pixel ray has unit z component")
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel<f64> {
        CameraModel::new("c", 100.0, 100.0, 32.0, 24.0, 64, 48, Mat3::identity(), Vec3::zero()).unwrap()
    }

    #[test]
    fn projects_optical_axis_to_principal_point() {
        let (u, v, z) = cam().project(Vec3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!((u, v, z), (32.0, 24.0, 5.0));
        assert!(cam().project(Vec3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn pixel_ray_inverts_projection() {
        let c = cam();
        let d = c.pixel_ray(40.5, 10.5);
        let (u, v, _) = c.project(d * 3.0).unwrap();
        assert!((u - 40.5).abs() < 1e-12 && (v - 10.5).abs() < 1e-12);
    }

    #[test]
    fn look_at_centers_target() {
        let c = CameraModel::look_at(
            "c",
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(5.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, 1.0),
            50.0,
            64,
            48,
        )
        .unwrap();
        assert_eq!(c.project(Vec3::new(5.0, 0.0, 1.0)).unwrap(), (32.0, 24.0, 5.0));
        // world +z is image up, world +y (left) is image left
        let (u, v, _) = c.project(Vec3::new(5.0, 1.0, 2.0)).unwrap();
        assert!(u < 32.0 && v < 24.0);
    }

    #[test]
    fn rejects_bad_intrinsics() {
        let r = CameraModel::new("c", -1.0, 1.0, 2.0, 2.0, 4, 4, Mat3::identity(), Vec3::zero());
        assert!(matches!(r, Err(Error::Data(_))));
        let r = CameraModel::new("c", 1.0, 1.0, 5.0, 2.0, 4, 4, Mat3::identity(), Vec3::zero());
        assert!(matches!(r, Err(Error::Data(_))));
        let mut bad = Mat3::identity();
        bad.m[0][0] = -1.0;
        let r = CameraModel::new("c", 1.0, 1.0, 2.0, 2.0, 4, 4, bad, Vec3::zero());
        assert!(matches!(r, Err(Error::Data(_))));
    }
}
