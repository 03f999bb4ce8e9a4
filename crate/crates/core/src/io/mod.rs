//! Readers and writers for the external file formats.

pub mod colmap;
pub mod mask;
pub mod mesh_io;
pub mod ply;
pub mod splat_ply;
pub mod trajectory_csv;

pub use colmap::{load_cameras, write_cameras};
pub use mask::{load_instances, load_mask, write_mask};
pub use mesh_io::{load_mesh, write_labeled_mesh};
pub use splat_ply::{load_gaussian_ply, write_gaussian_ply};
pub use trajectory_csv::{load_trajectory, write_trajectory};
pub mod point_cloud;
