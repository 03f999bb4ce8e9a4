#[path = "../../core/tests/fixtures/mod.rs"]
mod fixtures;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use material_twin::io::{self, mask, trajectory_csv};
use material_twin::*;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_material-twin")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Value {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn err(args: &[&str]) -> (i32, Value) {
    let out = bin(args);
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    (out.status.code().unwrap(), v)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn refine_matches_oracle_golden() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = fixtures::rng(301);
    for case in 0..10 {
        let mut map = fixtures::random_mask(&mut r, 40, 30, 10);
        map.palette = Palette::urban();
        let raw = fixtures::random_instances(&mut r, 40, 30, 5);
        let m = dir.path().join(format!("m{case}.png"));
        let i = dir.path().join(format!("i{case}"));
        mask::write_mask(&map, &m).unwrap();
        mask::write_instance_dir(&raw, &i).unwrap();
        let golden = oracles::refine(&map, &InstanceSet::new(40, 30, oracles::remove_overlaps(&raw)).unwrap());

        let out = dir.path().join(format!("out{case}.png"));
        ok(&["refine", "--materials", s(&m), "--instances", s(&i), "-o", s(&out)]);
        assert_eq!(io::load_mask(&out, &Palette::urban()).unwrap().classes, golden);
        let prov = read_json(&PathBuf::from(format!("{}.provenance.json", out.display())));
        assert_eq!(prov["command"], "refine");
        assert_eq!(prov["outputs"][0]["path"], format!("out{case}.png"));

        let again = dir.path().join(format!("again{case}.png"));
        ok(&["refine", "--materials", s(&m), "--instances", s(&i), "-o", s(&again)]);
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
    }
}

/// Two 20 m × 40 m halves (asphalt, concrete) under a sensor driving along x.
fn write_plane_scene(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let obj = "v -20 -20 0\nv 0 -20 0\nv 0 20 0\nv -20 20 0\nv 20 -20 0\nv 20 20 0\n\
               usemtl asphalt\nf 1 2 3\nf 1 3 4\nusemtl concrete\nf 2 5 6\nf 2 6 3\n";
    let mesh = dir.join("plane.obj");
    std::fs::write(&mesh, obj).unwrap();
    let tr = Trajectory::new(vec![
        (0.0, Pose { rotation: Quat::identity(), translation: Vec3::new(-1.25, 0.0, 2.0) }),
        (0.1, Pose { rotation: Quat::identity(), translation: Vec3::new(0.75, 0.0, 2.0) }),
    ])
    .unwrap();
    let traj = dir.join("traj.csv");
    trajectory_csv::write_trajectory::<f64>(&tr, &traj).unwrap();
    let pattern = dir.join("pattern.json");
    std::fs::write(
        &pattern,
        r#"{"channels":16,"vfov_min_deg":-40,"vfov_max_deg":-5,"horizontal_samples":180,"rate_hz":20,"max_range_m":100}"#,
    )
    .unwrap();
    (mesh, traj, pattern)
}

#[test]
fn simulate_reports_table_reflectivity() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, traj, pattern) = write_plane_scene(dir.path());
    for name in ["cloud.csv", "cloud.bin"] {
        let out = dir.path().join(name);
        let rep = ok(&["simulate", "--mesh", s(&mesh), "--trajectory", s(&traj), "--pattern", s(&pattern), "-o", s(&out)]);
        assert_eq!(rep["revolutions"], 3);
        let classes = rep["classes"].as_object().unwrap();
        assert_eq!(classes.len(), 2);
        for (name, want) in [("asphalt", 20), ("concrete", 60)] {
            let c = &classes[name];
            assert_eq!((c["reflectivity_min"].as_u64(), c["reflectivity_max"].as_u64()), (Some(want), Some(want)));
            assert_eq!(c["table_reflectivity"], want);
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("cloud.csv")).unwrap();
    let bin = std::fs::read(dir.path().join("cloud.bin")).unwrap();
    assert_eq!(bin.len(), 24 * (csv.lines().count() - 1));

    // a cloud evaluated against itself has zero error
    let c = dir.path().join("cloud.csv");
    let e = dir.path().join("eval.json");
    let rep = ok(&["evaluate", "--sim", s(&c), "--reference", s(&dir.path().join("cloud.bin")), "-o", s(&e)]);
    assert_eq!(rep["reflectivity"]["mae"], 0.0);
    assert_eq!(rep["match_fraction"], 1.0);
}

#[test]
fn noisy_simulation_is_reproducible_from_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, traj, pattern) = write_plane_scene(dir.path());
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&[
            "simulate", "--mesh", s(&mesh), "--trajectory", s(&traj), "--pattern", s(&pattern),
            "--seed", seed, "--range-noise", "0.05", "--power-noise", "1e-4", "-o", s(&out),
        ]);
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "5");
    assert_eq!(a, run("b.csv", "5"));
    assert_ne!(a, run("c.csv", "6"));
}

#[test]
fn pipeline_equals_subcommands_in_sequence() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    ok(&["synth-scene", "-o", s(&scene)]);
    let piped = tmp.path().join("piped");
    let summary = ok(&["pipeline", "--manifest", s(&scene.join("manifest.json")), "-o", s(&piped)]);
    assert_eq!(summary["scenes"]["synthetic"]["evaluate"]["reflectivity"]["mae"], 0.0);

    let man = read_json(&scene.join("manifest.json"));
    let m = &man["scenes"][0];
    let at = |k: &str| scene.join(m[k].as_str().unwrap());
    let out = tmp.path().join("manual").join("synthetic");
    let o = |f: &str| out.join(f);
    for (id, mask_rel) in m["masks"].as_object().unwrap() {
        let inst = scene.join(m["instances"][id].as_str().unwrap());
        let mask = scene.join(mask_rel.as_str().unwrap());
        let table = at("material_table");
        ok(&["refine", "--materials", s(&mask), "--instances", s(&inst), "--material-table", s(&table), "-o", s(&o(&format!("masks/{id}")))]);
    }
    let table = at("material_table");
    let t = s(&table);
    ok(&["project", "--splats", s(&at("splats")), "--cameras", s(&at("cameras")), "--masks", s(&o("masks")),
         "--material-table", t, "-o", s(&o("splats_labeled.ply"))]);
    ok(&["label-mesh", "--splats", s(&o("splats_labeled.ply")), "--mesh", s(&at("mesh")), "--material-table", t,
         "--prefill-output", s(&o("mesh_prefill.ply")), "-o", s(&o("mesh_labeled.ply"))]);
    ok(&["assign-pbr", "--mesh", s(&o("mesh_labeled.ply")), "--material-table", t, "-o", s(&o("mesh_bound.ply"))]);
    ok(&["simulate", "--mesh", s(&o("mesh_bound.ply")), "--material-table", t, "--trajectory", s(&at("trajectory")),
         "--pattern", s(&at("pattern")), "-o", s(&o("cloud.csv"))]);
    ok(&["evaluate", "--sim", s(&o("cloud.csv")), "--reference", s(&at("reference_cloud")), "--material-table", t,
         "-o", s(&o("evaluation.json"))]);

    let mut files = Vec::new();
    collect(&o(""), &o(""), &mut files);
    assert!(files.len() > 20, "{files:?}");
    for f in files {
        let a = std::fs::read(out.join(&f)).unwrap();
        let b = std::fs::read(piped.join("synthetic").join(&f)).unwrap();
        assert!(a == b, "{} differs", f.display());
    }
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

#[test]
fn missing_file_is_usage_error() {
    let (code, v) = err(&["assign-pbr", "--mesh", "/nonexistent/mesh.ply", "-o", "/tmp/never.ply"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "io");
    assert_eq!(v["error"]["exit_code"], 2);
}

#[test]
fn bad_arguments_are_usage_errors() {
    let (code, v) = err(&["simulate", "--mesh"]);
    assert_eq!((code, v["error"]["kind"].as_str()), (2, Some("usage")));
    let (code, _) = err(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(bin(&["--help"]).status.success());
}

#[test]
fn unmapped_class_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("m.obj");
    std::fs::write(&mesh, "v 0 0 0\nv 1 0 0\nv 0 1 0\nusemtl class_200\nf 1 2 3\n").unwrap();
    let (code, v) = err(&["assign-pbr", "--mesh", s(&mesh), "-o", s(&dir.path().join("b.ply"))]);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "unmapped_class");
}

#[test]
fn malformed_ply_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.ply");
    std::fs::write(&p, "ply\nformat ascii 1.0\nelement vertex 1\nend_header\n").unwrap();
    let (code, v) = err(&["assign-pbr", "--mesh", s(&p), "-o", s(&dir.path().join("b.ply"))]);
    assert_eq!((code, v["error"]["kind"].as_str()), (2, Some("format")));
}

#[test]
fn project_without_matching_masks_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    ok(&["synth-scene", "-o", s(&scene)]);
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let (code, v) = err(&[
        "project", "--splats", s(&scene.join("splats.ply")), "--cameras", s(&scene.join("cameras")),
        "--masks", s(&empty), "-o", s(&tmp.path().join("x.ply")),
    ]);
    assert_eq!((code, v["error"]["kind"].as_str()), (3, Some("input")));
}

#[test]
fn label_mesh_respects_no_fill() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    ok(&["synth-scene", "-o", s(&scene)]);
    let out = tmp.path().join("o");
    ok(&["pipeline", "--manifest", s(&scene.join("manifest.json")), "--no-fill", "-o", s(&out)]);
    let sum = read_json(&out.join("synthetic/mesh_labeled.ply.summary.json"));
    assert_eq!(sum["fill_enabled"], false);
    let debug = tmp.path().join("dbg");
    ok(&[
        "project", "--splats", s(&scene.join("splats.ply")), "--cameras", s(&scene.join("cameras")),
        "--masks", s(&scene.join("masks")), "--debug-dir", s(&debug), "-o", s(&tmp.path().join("l.ply")),
    ]);
    let img = mask::load_mask(debug.join("top_0.png"), &Palette::permissive()).unwrap();
    assert!(img.classes.iter().any(|&c| c != UNLABELED));
}
