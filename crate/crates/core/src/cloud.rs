use crate::error::{Error, Result};
use crate::linalg::{Mat3, Quat, Vec3};
use crate::material::{ClassId, UNLABELED};
use crate::scalar::Real;

/// Opaque per-splat color coefficients carried through unchanged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ColorCoefficients {
    /// PLY property names, in file order (`f_dc_0`, …, `f_rest_44`).
    pub names: Vec<String>,
    /// Row-major, `names.len()` values per splat.
    pub values: Vec<f32>,
}

/// A cloud of 3D Gaussians in physical units.
///
/// Opacities are in `[0, 1]` and scales are positive standard deviations in
/// meters; the logit/log encodings of the file format never leak in here.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianCloud<T> {
    pub positions: Vec<Vec3<T>>,
    pub scales: Vec<Vec3<T>>,
    pub rotations: Vec<Quat<T>>,
    pub opacities: Vec<T>,
    pub colors: Option<ColorCoefficients>,
    /// Per-splat material class, present once labels have been projected.
    pub labels: Option<Vec<ClassId>>,
}

impl<T: Real> GaussianCloud<T> {
    pub fn new(
        positions: Vec<Vec3<T>>,
        scales: Vec<Vec3<T>>,
        rotations: Vec<Quat<T>>,
        opacities: Vec<T>,
    ) -> Result<Self> {
        let cloud = Self {
            positions,
            scales,
            rotations,
            opacities,
            colors: None,
            labels: None,
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.scales.len() != n || self.rotations.len() != n || self.opacities.len() != n {
            return Err(Error::Data("gaussian attribute arrays differ in length".into()));
        }
        if let Some(c) = &self.colors {
            if c.values.len() != c.names.len() * n {
                return Err(Error::Data("color coefficient count does not match splat count".into()));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::Data("label count does not match splat count".into()));
            }
        }
        let tol = T::lit(1e-6);
        for i in 0..n {
            if !self.positions[i].is_finite() {
                return Err(Error::Data(format!("gaussian {i}: non-finite position")));
            }
            let s = self.scales[i];
            if !(s.x > T::zero() && s.y > T::zero() && s.z > T::zero()) || !s.is_finite() {
                return Err(Error::Data(format!("gaussian {i}: scales must be positive and finite")));
            }
            if (self.rotations[i].norm() - T::one()).abs() > tol {
                return Err(Error::Data(format!("gaussian {i}: rotation quaternion is not unit norm")));
            }
            let o = self.opacities[i];
            if !(o >= T::zero() && o <= T::one()) {
                return Err(Error::Data(format!("gaussian {i}: opacity {o} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// World-space covariance `R S Sᵀ Rᵀ` of splat `i`.
    pub fn covariance(&self, i: usize) -> Mat3<T> {
        let r = self.rotations[i].to_mat3();
        let s = self.scales[i];
        let m = r.mul_mat(&Mat3::diagonal(s));
        m.mul_mat(&m.transpose())
    }

    /// Label of splat `i`, or [`UNLABELED`] when no labels are attached.
    pub fn label(&self, i: usize) -> ClassId {
        self.labels.as_ref().map_or(UNLABELED, |l| l[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_axis_aligned_splat_is_diagonal() {
        let c = GaussianCloud::new(
            vec![Vec3::zero()],
            vec![Vec3::new(1.0, 2.0, 3.0)],
            vec![Quat::identity()],
            vec![0.5],
        )
        .unwrap();
        let cov = c.covariance(0);
        assert_eq!(cov.m, [[1.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 9.0]]);
    }

    #[test]
    fn rejects_invariant_violations() {
        let ok = || {
            (
                vec![Vec3::<f64>::zero()],
                vec![Vec3::new(1.0, 1.0, 1.0)],
                vec![Quat::identity()],
                vec![0.5],
            )
        };
        let (p, mut s, r, o) = ok();
        s[0].y = 0.0;
        assert!(GaussianCloud::new(p, s, r, o).is_err());
        let (p, s, mut r, o) = ok();
        r[0].w = 2.0;
        assert!(GaussianCloud::new(p, s, r, o).is_err());
        let (p, s, r, mut o) = ok();
        o[0] = 1.5;
        assert!(GaussianCloud::new(p, s, r, o).is_err());
        let (mut p, s, r, o) = ok();
        p[0].x = f64::NAN;
        assert!(GaussianCloud::new(p, s, r, o).is_err());
    }
}
