use crate::error::{Error, Result};
use crate::linalg::{Rigid, Vec3};
use crate::material::{ClassId, UNLABELED};
use crate::scalar::Real;

/// Smallest triangle area accepted, in m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Triangle mesh with one material class per face.
///
/// Normals follow the counter-clockwise winding `(v1 - v0) × (v2 - v0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
    labels: Vec<ClassId>,
    normals: Vec<Vec3<T>>,
}

impl<T: Real> LabeledMesh<T> {
    /// Validates indices and areas and derives the face normals.
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>, labels: Vec<ClassId>) -> Result<Self> {
        if labels.len() != triangles.len() {
            return Err(Error::Data(format!(
                "{} labels for {} triangles",
                labels.len(),
                triangles.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("vertex {i}: non-finite coordinate")));
        }
        let nv = vertices.len();
        let min_area = T::lit(MIN_TRIANGLE_AREA);
        let mut normals = Vec::with_capacity(triangles.len());
        for (f, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= nv) {
                return Err(Error::Data(format!(
                    "triangle {f}: vertex index {bad} out of range ({nv} vertices)"
                )));
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let cr = (b - a).cross(c - a);
            let area = cr.norm() * T::half();
            if !(area > min_area) {
                return Err(Error::Data(format!("triangle {f}: degenerate (area {area})")));
            }
            normals.push(cr * (T::one() / cr.norm()));
        }
        Ok(Self {
            vertices,
            triangles,
            labels,
            normals,
        })
    }

    /// Same geometry, all faces [`UNLABELED`].
    pub fn unlabeled(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = triangles.len();
        Self::new(vertices, triangles, vec![UNLABELED; n])
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, f: usize) -> [Vec3<T>; 3] {
        self.triangles[f].map(|i| self.vertices[i as usize])
    }

    pub fn centroid(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(f);
        (a + b + c) * (T::one() / T::lit(3.0))
    }

    pub fn area(&self, f: usize) -> T {
        let [a, b, c] = self.corners(f);
        (b - a).cross(c - a).norm() * T::half()
    }

    /// Copy with the face labels replaced.
    pub fn with_labels(&self, labels: Vec<ClassId>) -> Result<Self> {
        if labels.len() != self.triangles.len() {
            return Err(Error::Data(format!(
                "{} labels for {} triangles",
                labels.len(),
                self.triangles.len()
            )));
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Applies a rigid transform to every vertex.
    pub fn transformed(&self, t: &Rigid<T>) -> Result<Self> {
        let v = self.vertices.iter().map(|&p| t.apply(p)).collect();
        Self::new(v, self.triangles.clone(), self.labels.clone())
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != UNLABELED).count()
    }
}
