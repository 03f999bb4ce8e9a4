//! Camera-only, material-informed reconstruction of urban scenes.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`refine`] — instance-consistent cleanup of per-pixel material maps.
//! 2. [`project`] — transfer of 2D labels onto 3D Gaussian splats.
//! 3. [`mesh_label`] — transfer of splat labels onto mesh triangles.
//! 4. [`pbr`] — binding of labeled triangles to physically based materials.
//! 5. [`lidar`] — ray-cast LiDAR simulation with reflectivity output.
//! 6. [`metrics`] — reflectivity error, PSNR and SSIM.
//!
//! Geometry is generic over [`Real`] (`f32` or `f64`); the `*64` / `*32`
//! aliases below name the common instantiations.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bvh;
pub mod camera;
pub mod cloud;
pub mod error;
pub mod io;
pub mod kdtree;
pub mod lidar;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod mesh_label;
pub mod metrics;
pub mod pbr;
pub mod project;
pub mod refine;
pub mod scalar;
pub mod synthetic;
pub mod trajectory;
pub mod vote;

pub use bvh::{Bvh, Facing, Hit, Ray};
pub use camera::CameraModel;
pub use cloud::{ColorCoefficients, GaussianCloud};
pub use error::{Error, Result};
pub use kdtree::KdTree;
pub use lidar::{simulate_scan, LidarReturn, NoiseModel, Scan, ScanPattern, SimulationOptions};
pub use linalg::{Mat3, Quat, Rigid, Sym2, Vec3};
pub use material::{ClassId, InstanceSet, MaterialMap, Palette, UNLABELED, URBAN_CLASSES};
pub use mesh::LabeledMesh;
pub use mesh_label::{assign_gaussians_to_triangles, fill_unlabeled, FillStats, MeshLabelSummary};
pub use metrics::{match_points, psnr, reflectivity_error, ssim, Image, ReflectivityError};
pub use pbr::{bind_materials, BoundMesh, MaterialTable, PbrMaterial};
pub use project::{project_labels, LabelProjection};
pub use refine::{refine_labels, remove_overlaps};
pub use scalar::Real;
pub use trajectory::{Pose, Trajectory};
pub use vote::VoteHistogram;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Vec3d = Vec3<f64>;
pub type Vec3f = Vec3<f32>;
pub type GaussianCloud64 = GaussianCloud<f64>;
pub type GaussianCloud32 = GaussianCloud<f32>;
pub type LabeledMesh64 = LabeledMesh<f64>;
pub type LabeledMesh32 = LabeledMesh<f32>;
pub type CameraModel64 = CameraModel<f64>;
pub type CameraModel32 = CameraModel<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type Bvh64 = Bvh<f64>;
pub type Scan64 = Scan<f64>;
