//! One function per subcommand. Each validates its inputs, writes its
//! outputs plus a provenance record, and returns a JSON summary.
//! `pipeline` calls the same functions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use material_twin::io::ply::{write_ply, PlyFormat, ScalarType};
use material_twin::io::point_cloud::{self, CloudPoint};
use material_twin::io::{self, colmap, mask, mesh_io};
use material_twin::mesh_label::summarize;
use material_twin::metrics::absolute_errors;
use material_twin::pbr::load_material_table;
use material_twin::project::DEFAULT_ALPHA_THRESHOLD;
use material_twin::*;
use serde_json::{json, Value};

use crate::manifest::{ImagePair, Manifest, SceneEntry};
use crate::provenance::{ensure_parent, io_err, sidecar, write_bytes, write_json, Recorder};

fn table_from(path: Option<&Path>, rec: &mut Recorder) -> Result<MaterialTable> {
    match path {
        Some(p) => {
            rec.input(p)?;
            load_material_table(p)
        }
        None => Ok(MaterialTable::default_urban()),
    }
}

fn class_name(palette: &Palette, c: ClassId) -> String {
    if c == UNLABELED {
        "unlabeled".into()
    } else {
        palette.name(c).map_or_else(|| format!("class_{c}"), str::to_string)
    }
}

fn class_counts(labels: &[ClassId], palette: &Palette) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for &l in labels {
        *m.entry(class_name(palette, l)).or_insert(0) += 1;
    }
    m
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

// ---------------------------------------------------------------- refine

#[derive(Args, Clone, Debug)]
pub struct RefineArgs {
    /// Material mask (8-bit class-ID PNG).
    #[arg(long)]
    pub materials: PathBuf,
    /// Instance masks: an indexed PNG or a directory of binary PNGs.
    #[arg(long)]
    pub instances: PathBuf,
    /// Material table whose classes the mask may use (default: urban table).
    #[arg(long)]
    pub material_table: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn refine(a: &RefineArgs) -> Result<Value> {
    let mut rec = Recorder::new("refine", &a.output);
    let table = table_from(a.material_table.as_deref(), &mut rec)?;
    rec.input(&a.materials)?;
    rec.input(&a.instances)?;
    let map = io::load_mask(&a.materials, &table.palette())?;
    let mut raw = io::load_instances(&a.instances)?;
    if raw.is_empty() {
        // an empty directory carries no size; it just means "no instances"
        raw = InstanceSet::new(map.width, map.height, Vec::new())?;
    }
    let set = remove_overlaps(&raw)?;
    let out = refine_labels(&map, &set)?;
    ensure_parent(&a.output)?;
    io::write_mask(&out, &a.output)?;
    rec.output(&a.output)?;
    let changed = map.classes.iter().zip(&out.classes).filter(|(x, y)| x != y).count();
    let summary = json!({
        "width": out.width,
        "height": out.height,
        "instances": set.len(),
        "overlapping_pixels_resolved": raw.pixel_counts().iter().sum::<usize>() - set.pixel_counts().iter().sum::<usize>(),
        "pixels_changed": changed,
    });
    rec.finish(&a.output, json!({}), summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------- project

#[derive(Args, Clone, Debug)]
pub struct ProjectArgs {
    /// Gaussian splat PLY.
    #[arg(long)]
    pub splats: PathBuf,
    /// COLMAP text model directory (cameras.txt, images.txt).
    #[arg(long)]
    pub cameras: PathBuf,
    /// Directory holding one mask per camera, named by the camera's image name.
    #[arg(long)]
    pub masks: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA_THRESHOLD)]
    pub alpha_threshold: f64,
    #[arg(long)]
    pub material_table: Option<PathBuf>,
    /// Write per-view images of the label each pixel voted for.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,
    /// Labeled splat PLY.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn project(a: &ProjectArgs) -> Result<Value> {
    if !(a.alpha_threshold > 0.0 && a.alpha_threshold <= 1.0) {
        return Err(Error::Input(format!("--alpha-threshold {} is outside (0, 1]", a.alpha_threshold)));
    }
    let mut rec = Recorder::new("project", &a.output);
    let table = table_from(a.material_table.as_deref(), &mut rec)?;
    let palette = table.palette();
    rec.input(&a.splats)?;
    let mut cloud: GaussianCloud64 = io::load_gaussian_ply(&a.splats)?;
    for f in ["cameras.txt", "images.txt"] {
        rec.input(&a.cameras.join(f))?;
    }
    let cams: Vec<CameraModel64> = colmap::load_cameras(&a.cameras)?;
    let mut views = Vec::new();
    let mut skipped = Vec::new();
    for cam in cams {
        let p = a.masks.join(&cam.id);
        if p.is_file() {
            rec.input(&p)?;
            let m = io::load_mask(&p, &palette)?;
            views.push((cam, m));
        } else {
            skipped.push(cam.id);
        }
    }
    if views.is_empty() {
        return Err(Error::Input(format!(
            "no camera in {} has a mask in {}",
            a.cameras.display(),
            a.masks.display()
        )));
    }
    let res = project_labels(&cloud, &views, a.alpha_threshold)?;
    if let Some(dir) = &a.debug_dir {
        for ((cam, _), v) in views.iter().zip(&res.views) {
            let p = dir.join(&cam.id);
            ensure_parent(&p)?;
            mask::write_gray(cam.width, cam.height, v.winner_label_image(&res.labels), &p)?;
            rec.output(&p)?;
        }
    }
    cloud.labels = Some(res.labels.clone());
    ensure_parent(&a.output)?;
    io::write_gaussian_ply(&cloud, &a.output, PlyFormat::BinaryLittleEndian)?;
    rec.output(&a.output)?;
    let per_view: Vec<Value> = views
        .iter()
        .zip(&res.views)
        .zip(&res.stats)
        .map(|(((cam, _), v), s)| json!({ "camera": cam.id, "votes": v.vote_count(), "stats": s }))
        .collect();
    let summary = json!({
        "gaussians": cloud.len(),
        "views": per_view,
        "skipped_cameras": skipped,
        "total_votes": res.votes.total(),
        "labels": class_counts(&res.labels, &palette),
    });
    rec.finish(&a.output, json!({ "alpha_threshold": a.alpha_threshold }), summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------- label-mesh

#[derive(Args, Clone, Debug)]
pub struct FillArgs {
    /// Propagate labels into unlabeled triangles across shared edges (default).
    #[arg(long, overrides_with = "no_fill")]
    pub fill: bool,
    #[arg(long, overrides_with = "fill")]
    pub no_fill: bool,
    /// Limit propagation to this many edge hops from a labeled triangle.
    #[arg(long)]
    pub max_hops: Option<usize>,
}

impl FillArgs {
    pub fn enabled(&self) -> bool {
        !self.no_fill
    }
}

#[derive(Args, Clone, Debug)]
pub struct LabelMeshArgs {
    /// Labeled splat PLY (output of `project`).
    #[arg(long)]
    pub splats: PathBuf,
    /// Mesh (PLY or OBJ); existing labels are replaced.
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = material_twin::mesh_label::DEFAULT_KNN_K)]
    pub knn_k: usize,
    #[command(flatten)]
    pub fill: FillArgs,
    #[arg(long)]
    pub material_table: Option<PathBuf>,
    /// Also write the mesh as labeled before filling.
    #[arg(long)]
    pub prefill_output: Option<PathBuf>,
    /// Summary JSON (default: `<output>.summary.json`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn label_mesh(a: &LabelMeshArgs) -> Result<Value> {
    let mut rec = Recorder::new("label-mesh", &a.output);
    let table = table_from(a.material_table.as_deref(), &mut rec)?;
    rec.input(&a.splats)?;
    rec.input(&a.mesh)?;
    let cloud: GaussianCloud64 = io::load_gaussian_ply(&a.splats)?;
    let labels = cloud.labels.as_ref().ok_or_else(|| {
        Error::Input(format!("{} carries no `label` property; run `project` first", a.splats.display()))
    })?;
    let mesh: LabeledMesh64 = io::load_mesh(&a.mesh)?;
    let seeded = assign_gaussians_to_triangles(&cloud.positions, labels, &mesh, a.knn_k)?;
    if let Some(p) = &a.prefill_output {
        ensure_parent(p)?;
        io::write_labeled_mesh(&seeded, p)?;
        rec.output(p)?;
    }
    let (out, stats) = if a.fill.enabled() {
        let (m, s) = fill_unlabeled(&seeded, a.fill.max_hops)?;
        (m, Some(s))
    } else {
        (seeded.clone(), None)
    };
    ensure_parent(&a.output)?;
    io::write_labeled_mesh(&out, &a.output)?;
    rec.output(&a.output)?;
    let s = summarize(&out, stats, &table.palette());
    let summary_path = a.summary.clone().unwrap_or_else(|| sidecar(&a.output, "summary.json"));
    write_json(&summary_path, &s)?;
    rec.output(&summary_path)?;
    let summary = json!({
        "labeled_before_fill": seeded.labeled_count(),
        "mesh": s,
    });
    let params = json!({
        "knn_k": a.knn_k,
        "fill": a.fill.enabled(),
        "max_hops": a.fill.max_hops,
    });
    rec.finish(&a.output, params, summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------- assign-pbr

#[derive(Args, Clone, Debug)]
pub struct AssignPbrArgs {
    /// Labeled mesh (PLY or OBJ).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Material table JSON (default: built-in urban table).
    #[arg(long)]
    pub material_table: Option<PathBuf>,
    /// Bound mesh. PLY gets per-face PBR columns; OBJ keeps only `usemtl`.
    #[arg(short, long)]
    pub output: PathBuf,
}

fn write_bound_mesh(bound: &BoundMesh<f64>, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
        return io::write_labeled_mesh(&bound.mesh, path);
    }
    let n = bound.mesh.len();
    let col = |f: &dyn Fn(&PbrMaterial) -> f64| (0..n).map(|i| f(bound.material(i))).collect::<Vec<f64>>();
    let extra = [
        ("base_r", ScalarType::F32, col(&|m| m.base_color[0])),
        ("base_g", ScalarType::F32, col(&|m| m.base_color[1])),
        ("base_b", ScalarType::F32, col(&|m| m.base_color[2])),
        ("metallic", ScalarType::F32, col(&|m| m.metallic)),
        ("roughness", ScalarType::F32, col(&|m| m.roughness)),
        ("specular", ScalarType::F32, col(&|m| m.specular)),
        ("clearcoat", ScalarType::F32, col(&|m| m.clearcoat)),
        ("opacity", ScalarType::F32, col(&|m| m.opacity)),
        ("reflectivity", ScalarType::U8, col(&|m| m.diffuse_reflectivity_255 as f64)),
    ];
    let ply = mesh_io::mesh_to_ply(&bound.mesh, PlyFormat::BinaryLittleEndian, &extra);
    let mut buf = Vec::new();
    write_ply(&mut buf, &ply).map_err(|e| io_err(path, e))?;
    write_bytes(path, &buf)
}

pub fn assign_pbr(a: &AssignPbrArgs) -> Result<Value> {
    let mut rec = Recorder::new("assign-pbr", &a.output);
    let table = table_from(a.material_table.as_deref(), &mut rec)?;
    rec.input(&a.mesh)?;
    let mesh: LabeledMesh64 = io::load_mesh(&a.mesh)?;
    let bound = bind_materials(&mesh, &table)?;
    ensure_parent(&a.output)?;
    write_bound_mesh(&bound, &a.output)?;
    rec.output(&a.output)?;
    let summary = json!({
        "triangles": mesh.len(),
        "fallback_triangles": mesh.len() - mesh.labeled_count(),
        "usage": bound.usage(),
    });
    rec.finish(&a.output, json!({}), summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    /// Labeled or bound mesh (PLY or OBJ).
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub material_table: Option<PathBuf>,
    /// Sensor trajectory CSV.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Scan pattern JSON (default: 128 channels, 20 Hz).
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Point cloud: `.bin` for packed records, CSV otherwise.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Report JSON (default: `<output>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct NoiseArgs {
    /// Seed for the optional range/power noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of range noise in meters (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub range_noise: f64,
    /// Standard deviation of received-power noise (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub power_noise: f64,
}

impl NoiseArgs {
    fn model(&self) -> Result<Option<NoiseModel>> {
        for (name, v) in [("--range-noise", self.range_noise), ("--power-noise", self.power_noise)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        Ok((self.range_noise > 0.0 || self.power_noise > 0.0).then_some(NoiseModel {
            range_sigma_m: self.range_noise,
            power_sigma: self.power_noise,
            seed: self.seed,
        }))
    }
}

fn is_bin(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bin"))
}

pub fn simulate(a: &SimulateArgs) -> Result<Value> {
    let mut rec = Recorder::new("simulate", &a.output);
    let table = table_from(a.material_table.as_deref(), &mut rec)?;
    rec.input(&a.mesh)?;
    rec.input(&a.trajectory)?;
    let pattern = match &a.pattern {
        Some(p) => {
            rec.input(p)?;
            ScanPattern::from_json(&std::fs::read_to_string(p).map_err(|e| io_err(p, e))?)?
        }
        None => ScanPattern::default(),
    };
    let mesh: LabeledMesh64 = io::load_mesh(&a.mesh)?;
    let trajectory: Trajectory64 = io::load_trajectory(&a.trajectory)?;
    let bound = bind_materials(&mesh, &table)?;
    let bvh = Bvh::build(&bound.mesh);
    let opts = SimulationOptions {
        noise: a.noise.model()?,
        ..Default::default()
    };
    let scan = simulate_scan(&bound, &bvh, &pattern, &trajectory, &opts)?;
    let bytes = if is_bin(&a.output) {
        point_cloud::encode_returns_binary(&scan.returns)
    } else {
        point_cloud::format_returns_csv(&scan.returns).into_bytes()
    };
    write_bytes(&a.output, &bytes)?;
    rec.output(&a.output)?;

    let palette = table.palette();
    let mut per_class: BTreeMap<String, (usize, u8, u8, u64, ClassId)> = BTreeMap::new();
    for r in &scan.returns {
        let e = per_class
            .entry(class_name(&palette, r.class))
            .or_insert((0, u8::MAX, 0, 0, r.class));
        e.0 += 1;
        e.1 = e.1.min(r.reflectivity);
        e.2 = e.2.max(r.reflectivity);
        e.3 += r.reflectivity as u64;
    }
    let classes: BTreeMap<String, Value> = per_class
        .into_iter()
        .map(|(name, (n, lo, hi, sum, c))| {
            let m = table.get(c).unwrap_or(table.fallback());
            let v = json!({
                "returns": n,
                "reflectivity_min": lo,
                "reflectivity_max": hi,
                "reflectivity_mean": sum as f64 / n as f64,
                "table_reflectivity": m.diffuse_reflectivity_255,
                "material": m.name,
            });
            (name, v)
        })
        .collect();
    let report = json!({
        "returns": scan.returns.len(),
        "rays_cast": scan.rays_cast,
        "revolutions": scan.revolutions,
        "pattern": pattern,
        "noise": opts.noise,
        "classes": classes,
    });
    let report_path = a.report.clone().unwrap_or_else(|| sidecar(&a.output, "report.json"));
    write_json(&report_path, &report)?;
    rec.output(&report_path)?;
    let params = json!({
        "seed": a.noise.seed,
        "range_noise": a.noise.range_noise,
        "power_noise": a.noise.power_noise,
        "pattern": pattern,
    });
    rec.finish(&a.output, params, report.clone())?;
    Ok(report)
}

// ---------------------------------------------------------------- evaluate

#[derive(Args, Clone, Debug)]
pub struct EvaluateArgs {
    /// Simulated cloud (CSV or `.bin`).
    #[arg(long)]
    pub sim: PathBuf,
    /// Reference cloud (CSV or `.bin`) with reflectivity per point.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = material_twin::metrics::DEFAULT_MATCH_RADIUS)]
    pub match_radius: f64,
    /// Rendered image; pairs with the `--truth` at the same position.
    #[arg(long)]
    pub rendered: Vec<PathBuf>,
    #[arg(long)]
    pub truth: Vec<PathBuf>,
    #[arg(long)]
    pub material_table: Option<PathBuf>,
    /// Per-pair absolute errors (default: `<output>.errors.csv`).
    #[arg(long)]
    pub errors_csv: Option<PathBuf>,
    /// Report JSON.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn load_cloud(path: &Path) -> Result<Vec<CloudPoint>> {
    if is_bin(path) {
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        Ok(point_cloud::decode_returns_binary(&bytes)?
            .into_iter()
            .map(|(xyzr, refl, class, _)| CloudPoint {
                position: Vec3::new(xyzr[0] as f64, xyzr[1] as f64, xyzr[2] as f64),
                reflectivity: refl,
                class,
            })
            .collect())
    } else {
        point_cloud::load_cloud_csv(path)
    }
}

/// Infinite PSNR (identical images) is reported as the string `"inf"`.
fn finite_or_tag(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

fn error_json(e: &ReflectivityError) -> Value {
    json!({ "count": e.count, "mae": e.mae, "median": e.median })
}

pub fn evaluate(a: &EvaluateArgs) -> Result<Value> {
    if a.rendered.len() != a.truth.len() {
        return Err(Error::Input(format!(
            "{} --rendered images but {} --truth images",
            a.rendered.len(),
            a.truth.len()
        )));
    }
    let mut rec = Recorder::new("evaluate", &a.output);
    let table = table_from(a.material_table.as_deref(), &mut rec)?;
    rec.input(&a.sim)?;
    rec.input(&a.reference)?;
    let sim = load_cloud(&a.sim)?;
    let reference = load_cloud(&a.reference)?;
    let matching = match_points(&sim, &reference, a.match_radius)?;
    let errors = absolute_errors(&matching, &sim, &reference);
    let overall = reflectivity_error(&errors)?;

    let palette = table.palette();
    let mut by_class: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (p, e) in matching.pairs.iter().zip(&errors) {
        by_class
            .entry(class_name(&palette, reference[p.reference].class))
            .or_default()
            .push(*e);
    }
    let per_class = by_class
        .iter()
        .map(|(k, v)| Ok((k.clone(), error_json(&reflectivity_error(v)?))))
        .collect::<Result<BTreeMap<String, Value>>>()?;

    let mut images = Vec::new();
    for (r, t) in a.rendered.iter().zip(&a.truth) {
        rec.input(r)?;
        rec.input(t)?;
        let (ri, ti) = (Image::load(r)?, Image::load(t)?);
        images.push(json!({
            "rendered": path_str(r),
            "truth": path_str(t),
            "psnr": finite_or_tag(psnr(&ri, &ti)?),
            "ssim": ssim(&ri, &ti)?,
        }));
    }

    let mut csv = String::from("sim_index,reference_index,distance,sim_reflectivity,reference_reflectivity,abs_error\n");
    for (p, e) in matching.pairs.iter().zip(&errors) {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.sim, p.reference, p.distance, sim[p.sim].reflectivity, reference[p.reference].reflectivity, e
        ));
    }
    let csv_path = a.errors_csv.clone().unwrap_or_else(|| sidecar(&a.output, "errors.csv"));
    write_bytes(&csv_path, csv.as_bytes())?;

    let report = json!({
        "sim_points": sim.len(),
        "reference_points": reference.len(),
        "matched": matching.pairs.len(),
        "unmatched": matching.unmatched,
        "match_fraction": matching.match_fraction(),
        "match_radius": a.match_radius,
        "reflectivity": error_json(&overall),
        "per_class": per_class,
        "images": images,
    });
    write_json(&a.output, &report)?;
    rec.output(&a.output)?;
    rec.output(&csv_path)?;
    rec.finish(&a.output, json!({ "match_radius": a.match_radius }), report.clone())?;
    Ok(report)
}

// ---------------------------------------------------------------- pipeline

#[derive(Args, Clone, Debug)]
pub struct PipelineArgs {
    /// Manifest JSON listing the scenes.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA_THRESHOLD)]
    pub alpha_threshold: f64,
    #[arg(long, default_value_t = material_twin::mesh_label::DEFAULT_KNN_K)]
    pub knn_k: usize,
    #[command(flatten)]
    pub fill: FillArgs,
    #[arg(long, default_value_t = material_twin::metrics::DEFAULT_MATCH_RADIUS)]
    pub match_radius: f64,
    /// Scan pattern for every scene, overriding the manifest.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Output directory; each scene gets a subdirectory.
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Masks handed to `project`: refined where instances exist, copied otherwise.
fn stage_masks(scene: &SceneEntry, dir: &Path, table: Option<&PathBuf>) -> Result<Value> {
    let mut out = serde_json::Map::new();
    for (id, mask_path) in &scene.masks {
        let dst = dir.join(id);
        let v = match scene.instances.get(id) {
            Some(inst) => refine(&RefineArgs {
                materials: mask_path.clone(),
                instances: inst.clone(),
                material_table: table.cloned(),
                output: dst,
            })?,
            None => {
                let bytes = std::fs::read(mask_path).map_err(|e| io_err(mask_path, e))?;
                write_bytes(&dst, &bytes)?;
                json!("copied")
            }
        };
        out.insert(id.clone(), v);
    }
    Ok(Value::Object(out))
}

fn run_scene(a: &PipelineArgs, scene: &SceneEntry, dir: &Path) -> Result<Value> {
    let table = scene.material_table.as_ref();
    let masks_dir = dir.join("masks");
    let mut stages = serde_json::Map::new();
    stages.insert("refine".into(), stage_masks(scene, &masks_dir, table)?);

    let splats = dir.join("splats_labeled.ply");
    let v = project(&ProjectArgs {
        splats: scene.splats.clone(),
        cameras: scene.cameras.clone(),
        masks: masks_dir,
        alpha_threshold: a.alpha_threshold,
        material_table: table.cloned(),
        debug_dir: None,
        output: splats.clone(),
    })?;
    stages.insert("project".into(), v);

    let labeled = dir.join("mesh_labeled.ply");
    let v = label_mesh(&LabelMeshArgs {
        splats,
        mesh: scene.mesh.clone(),
        knn_k: a.knn_k,
        fill: a.fill.clone(),
        material_table: table.cloned(),
        prefill_output: Some(dir.join("mesh_prefill.ply")),
        summary: None,
        output: labeled.clone(),
    })?;
    stages.insert("label_mesh".into(), v);

    let bound = dir.join("mesh_bound.ply");
    let v = assign_pbr(&AssignPbrArgs {
        mesh: labeled,
        material_table: table.cloned(),
        output: bound.clone(),
    })?;
    stages.insert("assign_pbr".into(), v);

    if let Some(traj) = &scene.trajectory {
        let cloud = dir.join("cloud.csv");
        let v = simulate(&SimulateArgs {
            mesh: bound,
            material_table: table.cloned(),
            trajectory: traj.clone(),
            pattern: a.pattern.clone().or_else(|| scene.pattern.clone()),
            noise: a.noise.clone(),
            output: cloud.clone(),
            report: None,
        })?;
        stages.insert("simulate".into(), v);
        if let Some(reference) = &scene.reference_cloud {
            let (rendered, truth): (Vec<_>, Vec<_>) = scene
                .images
                .iter()
                .map(|ImagePair { rendered, truth }| (rendered.clone(), truth.clone()))
                .unzip();
            let v = evaluate(&EvaluateArgs {
                sim: cloud,
                reference: reference.clone(),
                match_radius: a.match_radius,
                rendered,
                truth,
                material_table: table.cloned(),
                errors_csv: None,
                output: dir.join("evaluation.json"),
            })?;
            stages.insert("evaluate".into(), v);
        }
    }
    Ok(Value::Object(stages))
}

pub fn pipeline(a: &PipelineArgs) -> Result<Value> {
    let manifest = Manifest::load(&a.manifest)?;
    let summary_path = a.output.join("pipeline.json");
    let mut rec = Recorder::new("pipeline", &summary_path);
    rec.input(&a.manifest)?;
    let mut scenes = serde_json::Map::new();
    for scene in &manifest.scenes {
        let v = run_scene(a, scene, &a.output.join(&scene.name))?;
        scenes.insert(scene.name.clone(), v);
    }
    let summary = json!({ "scenes": scenes });
    write_json(&summary_path, &summary)?;
    rec.output(&summary_path)?;
    let params = json!({
        "alpha_threshold": a.alpha_threshold,
        "knn_k": a.knn_k,
        "fill": a.fill.enabled(),
        "max_hops": a.fill.max_hops,
        "match_radius": a.match_radius,
        "pattern_override": a.pattern.as_deref().map(path_str),
        "seed": a.noise.seed,
        "range_noise": a.noise.range_noise,
        "power_noise": a.noise.power_noise,
    });
    rec.finish(&summary_path, params, json!({ "scenes": manifest.scenes.len() }))?;
    Ok(summary)
}

// ---------------------------------------------------------------- synth-scene

#[derive(Args, Clone, Debug)]
pub struct SynthSceneArgs {
    /// Directory to write the scene and its `manifest.json` into.
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn synth_scene(a: &SynthSceneArgs) -> Result<Value> {
    let scene = material_twin::synthetic::SyntheticScene::build()?;
    let manifest = scene.write(&a.output)?;
    Ok(json!({
        "manifest": path_str(&manifest),
        "triangles": scene.mesh.len(),
        "gaussians": scene.splats.len(),
        "views": scene.views.len(),
    }))
}
