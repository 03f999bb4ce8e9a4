//! Analytic test scene: an asphalt ground plane, a concrete wall with a glass
//! panel, and everything the pipeline consumes derived from that geometry —
//! flat splats on the surfaces, ray-cast material masks, instance masks, a
//! short drive and the reference point cloud of the labeled scene.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::bvh::{Bvh, Facing, Ray};
use crate::camera::CameraModel;
use crate::cloud::GaussianCloud;
use crate::error::{Error, Result};
use crate::io::ply::PlyFormat;
use crate::io::{self, mask, point_cloud};
use crate::lidar::{simulate_scan, Scan, ScanPattern, SimulationOptions};
use crate::linalg::{Quat, Vec3};
use crate::material::{ClassId, InstanceSet, MaterialMap, Palette, UNLABELED};
use crate::mesh::LabeledMesh;
use crate::pbr::{bind_materials, write_material_table, MaterialTable};
use crate::trajectory::{Pose, Trajectory};

pub const GLASS: ClassId = 0;
pub const CONCRETE: ClassId = 2;
pub const ASPHALT: ClassId = 3;

const GROUND_HALF: f64 = 10.0;
const WALL_X: f64 = 10.0;
const WALL_HEIGHT: f64 = 6.0;
const CELL: f64 = 1.0;
/// Glass panel cells on the wall: y ∈ [-2, 2), z ∈ [2, 4).
const PANEL_Y: (f64, f64) = (-2.0, 2.0);
const PANEL_Z: (f64, f64) = (2.0, 4.0);

const SPLAT_SIGMA: f64 = 0.1;
const SPLAT_THICKNESS: f64 = 0.005;
const SPLAT_OPACITY: f64 = 0.95;
/// Barycentric weights of the splats placed in every triangle.
const SPLAT_BARY: [[f64; 3]; 3] = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]];

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    /// Geometry with ground-truth labels.
    pub mesh: LabeledMesh<f64>,
    pub splats: GaussianCloud<f64>,
    /// Class of the surface each splat was placed on.
    pub splat_truth: Vec<ClassId>,
    pub views: Vec<(CameraModel<f64>, MaterialMap)>,
    /// One instance per material region and view.
    pub instances: Vec<InstanceSet>,
    pub trajectory: Trajectory<f64>,
    pub pattern: ScanPattern,
    pub table: MaterialTable,
}

fn grid(
    verts: &mut Vec<Vec3<f64>>,
    tris: &mut Vec<[u32; 3]>,
    labels: &mut Vec<ClassId>,
    nu: usize,
    nv: usize,
    point: impl Fn(f64, f64) -> Vec3<f64>,
    label: impl Fn(f64, f64) -> ClassId,
) {
    let base = verts.len() as u32;
    for j in 0..=nv {
        for i in 0..=nu {
            verts.push(point(i as f64 * CELL, j as f64 * CELL));
        }
    }
    let at = |i: usize, j: usize| base + (j * (nu + 1) + i) as u32;
    for j in 0..nv {
        for i in 0..nu {
            let l = label((i as f64 + 0.5) * CELL, (j as f64 + 0.5) * CELL);
            // counter-clockwise in (u, v), so normals follow u × v
            tris.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
            tris.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
            labels.extend([l, l]);
        }
    }
}

fn scene_mesh() -> Result<LabeledMesh<f64>> {
    let (mut v, mut t, mut l) = (Vec::new(), Vec::new(), Vec::new());
    let n = (2.0 * GROUND_HALF / CELL) as usize;
    // ground, normal +z
    grid(
        &mut v,
        &mut t,
        &mut l,
        n,
        n,
        |a, b| Vec3::new(a - GROUND_HALF, b - GROUND_HALF, 0.0),
        |_, _| ASPHALT,
    );
    // wall at x = WALL_X facing -x: u runs along +z, v along +y so u × v = -x
    grid(
        &mut v,
        &mut t,
        &mut l,
        (WALL_HEIGHT / CELL) as usize,
        n,
        |a, b| Vec3::new(WALL_X, b - GROUND_HALF, a),
        |a, b| {
            let (y, z) = (b - GROUND_HALF, a);
            if y > PANEL_Y.0 && y < PANEL_Y.1 && z > PANEL_Z.0 && z < PANEL_Z.1 {
                GLASS
            } else {
                CONCRETE
            }
        },
    );
    LabeledMesh::new(v, t, l)
}

fn scene_splats(mesh: &LabeledMesh<f64>) -> Result<(GaussianCloud<f64>, Vec<ClassId>)> {
    let n = mesh.len() * SPLAT_BARY.len();
    let (mut pos, mut scale, mut rot, mut op, mut truth) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let wall_rot = Quat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), -std::f64::consts::FRAC_PI_2);
    for f in 0..mesh.len() {
        let [a, b, c] = mesh.corners(f);
        let ground = mesh.normals()[f].z > 0.5;
        for w in SPLAT_BARY {
            pos.push(a * w[0] + b * w[1] + c * w[2]);
            scale.push(Vec3::new(SPLAT_SIGMA, SPLAT_SIGMA, SPLAT_THICKNESS));
            rot.push(if ground { Quat::identity() } else { wall_rot });
            op.push(SPLAT_OPACITY);
            truth.push(mesh.labels()[f]);
        }
    }
    Ok((GaussianCloud::new(pos, scale, rot, op)?, truth))
}

fn scene_cameras() -> Result<Vec<CameraModel<f64>>> {
    let up = Vec3::new(0.0, 0.0, 1.0);
    let north = Vec3::new(1.0, 0.0, 0.0);
    let mut cams = Vec::new();
    // four near-nadir views over the ground quadrants
    for (k, (x, y)) in [(-5.0, -5.0), (-5.0, 5.0), (5.0, -5.0), (5.0, 5.0)].into_iter().enumerate() {
        cams.push(CameraModel::look_at(
            format!("top_{k}.png"),
            Vec3::new(x, y, 12.0),
            Vec3::new(x, y, 0.0),
            north,
            160.0,
            160,
            160,
        )?);
    }
    // two views facing the wall
    for (k, y) in [-5.0, 5.0].into_iter().enumerate() {
        cams.push(CameraModel::look_at(
            format!("wall_{k}.png"),
            Vec3::new(0.0, y, 3.0),
            Vec3::new(WALL_X, y, 3.0),
            up,
            160.0,
            160,
            112,
        )?);
    }
    Ok(cams)
}

/// Material map seen by `cam`: class of the closest surface along each
/// pixel-center ray, unlabeled where the ray escapes.
pub fn render_mask(mesh: &LabeledMesh<f64>, bvh: &Bvh<f64>, cam: &CameraModel<f64>, palette: &Palette) -> Result<MaterialMap> {
    let origin = cam.center();
    let w = cam.width as usize;
    let classes: Vec<ClassId> = (0..cam.pixel_count())
        .into_par_iter()
        .map(|i| {
            let (u, v) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            let ray = Ray {
                origin,
                dir: cam.pixel_ray(u, v),
            };
            bvh.closest_hit(mesh, &ray, 1e3, Facing::Both)
                .map_or(UNLABELED, |h| mesh.labels()[h.triangle])
        })
        .collect();
    MaterialMap::new(cam.width, cam.height, classes, palette.clone())
}

/// One instance per class present in `map`, in class order.
fn class_instances(map: &MaterialMap) -> Result<InstanceSet> {
    let mut present: Vec<ClassId> = map.classes.iter().copied().filter(|&c| c != UNLABELED).collect();
    present.sort_unstable();
    present.dedup();
    let masks = present
        .iter()
        .map(|&c| map.classes.iter().map(|&p| p == c).collect())
        .collect();
    InstanceSet::new(map.width, map.height, masks)
}

impl SyntheticScene {
    pub fn build() -> Result<Self> {
        let mesh = scene_mesh()?;
        let (splats, splat_truth) = scene_splats(&mesh)?;
        let table = MaterialTable::default_urban();
        let palette = table.palette();
        let bvh = Bvh::build(&mesh);
        let mut views = Vec::new();
        let mut instances = Vec::new();
        for cam in scene_cameras()? {
            let map = render_mask(&mesh, &bvh, &cam, &palette)?;
            instances.push(class_instances(&map)?);
            views.push((cam, map));
        }
        // 0.2 s drive along +x at 1.8 m, yawed 10° towards the wall corner
        let yaw = Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 10f64.to_radians());
        let trajectory = Trajectory::new(vec![
            (
                0.0,
                Pose {
                    rotation: yaw,
                    translation: Vec3::new(-4.0, -3.0, 1.8),
                },
            ),
            (
                0.2,
                Pose {
                    rotation: yaw,
                    translation: Vec3::new(-2.0, -3.0, 1.8),
                },
            ),
        ])?;
        let pattern = ScanPattern {
            channels: 32,
            vfov_min_deg: -30.0,
            vfov_max_deg: 10.0,
            horizontal_samples: 360,
            rate_hz: 10.0,
            max_range_m: 50.0,
        };
        Ok(Self {
            mesh,
            splats,
            splat_truth,
            views,
            instances,
            trajectory,
            pattern,
            table,
        })
    }

    /// Geometry with every label removed, as a reconstruction would deliver it.
    pub fn unlabeled_mesh(&self) -> LabeledMesh<f64> {
        self.mesh
            .with_labels(vec![UNLABELED; self.mesh.len()])
            .expect("label count matches")
    }

    /// Scan of the ground-truth-labeled scene.
    pub fn reference_scan(&self) -> Result<Scan<f64>> {
        let bound = bind_materials(&self.mesh, &self.table)?;
        let bvh = Bvh::build(&self.mesh);
        simulate_scan(&bound, &bvh, &self.pattern, &self.trajectory, &SimulationOptions::default())
    }

    /// Writes all inputs plus `manifest.json` into `dir`; returns the
    /// manifest path. Paths inside the manifest are relative to `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        for sub in ["cameras", "masks", "instances"] {
            let p = dir.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        io::write_gaussian_ply(&self.splats, dir.join("splats.ply"), PlyFormat::BinaryLittleEndian)?;
        io::write_labeled_mesh(&self.unlabeled_mesh(), dir.join("mesh.ply"))?;
        io::write_labeled_mesh(&self.mesh, dir.join("mesh_truth.ply"))?;
        let cams: Vec<_> = self.views.iter().map(|(c, _)| c.clone()).collect();
        io::write_cameras(&cams, dir.join("cameras"))?;
        let mut masks = serde_json::Map::new();
        let mut inst = serde_json::Map::new();
        for ((cam, map), set) in self.views.iter().zip(&self.instances) {
            let m = format!("masks/{}", cam.id);
            let i = format!("instances/{}", cam.id);
            io::write_mask(map, dir.join(&m))?;
            mask::write_instance_index(set, dir.join(&i))?;
            masks.insert(cam.id.clone(), m.into());
            inst.insert(cam.id.clone(), i.into());
        }
        io::write_trajectory(&self.trajectory, dir.join("trajectory.csv"))?;
        write_material_table(&self.table, dir.join("materials.json"))?;
        write_text(&dir.join("pattern.json"), &pretty(&self.pattern)?)?;
        let reference = self.reference_scan()?;
        write_text(
            &dir.join("reference.csv"),
            &point_cloud::format_returns_csv(&reference.returns),
        )?;
        let manifest = json!({
            "scenes": [{
                "name": "synthetic",
                "splats": "splats.ply",
                "mesh": "mesh.ply",
                "cameras": "cameras",
                "masks": masks,
                "instances": inst,
                "trajectory": "trajectory.csv",
                "material_table": "materials.json",
                "pattern": "pattern.json",
                "reference_cloud": "reference.csv",
            }]
        });
        let path = dir.join("manifest.json");
        write_text(&path, &pretty(&manifest)?)?;
        Ok(path)
    }
}

fn pretty<S: serde::Serialize>(v: &S) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Internal(e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
