//! Labeled mesh files.
//!
//! PLY: `vertex` with `x y z`, `face` with a `vertex_indices` list and an
//! integer `material` property (missing → unlabeled).
//! OBJ: `v`/`f` records; `usemtl <name>` switches the material of subsequent
//! faces where `<name>` is a class number, `class_<n>`, an urban class name,
//! or `unlabeled`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::ply::{read_ply, write_ply, Element, PlyFile, PlyFormat, ScalarType};
use crate::linalg::Vec3;
use crate::material::{ClassId, UNLABELED, URBAN_CLASSES};
use crate::mesh::LabeledMesh;
use crate::scalar::Real;

fn is_obj(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("obj"))
}

pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<LabeledMesh<T>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let r = BufReader::new(f);
    if is_obj(path) {
        mesh_from_obj(r)
    } else {
        mesh_from_ply(&read_ply(r)?)
    }
}

/// Writes PLY (binary) or OBJ depending on the extension.
pub fn write_labeled_mesh<T: Real>(mesh: &LabeledMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res = if is_obj(path) {
        w.write_all(mesh_to_obj(mesh).as_bytes())
    } else {
        write_ply(&mut w, &mesh_to_ply(mesh, PlyFormat::BinaryLittleEndian, &[]))
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn class_from_value(v: f64, face: usize) -> Result<ClassId> {
    if (0.0..=255.0).contains(&v) && v.fract() == 0.0 {
        Ok(v as ClassId)
    } else {
        Err(Error::Data(format!("face {face}: material {v} is not a class ID")))
    }
}

pub fn mesh_from_ply<T: Real>(ply: &PlyFile) -> Result<LabeledMesh<T>> {
    let v = ply.require_element("vertex")?;
    let (x, y, z) = (v.require_scalar("x")?, v.require_scalar("y")?, v.require_scalar("z")?);
    let vertices: Vec<Vec3<T>> = (0..v.count)
        .map(|i| Vec3::new(T::lit(x[i]), T::lit(y[i]), T::lit(z[i])))
        .collect();
    let f = ply.require_element("face")?;
    let idx = f
        .list("vertex_indices")
        .or_else(|| f.list("vertex_index"))
        .ok_or_else(|| Error::Format("element `face` is missing required property `vertex_indices`".into()))?;
    let mats = f.scalar("material");
    let mut triangles = Vec::with_capacity(f.count);
    let mut labels = Vec::with_capacity(f.count);
    for (fi, poly) in idx.iter().enumerate() {
        let label = match mats {
            Some(m) => class_from_value(m[fi], fi)?,
            None => UNLABELED,
        };
        let poly: Vec<u32> = poly
            .iter()
            .map(|&i| {
                if i < 0.0 || i >= vertices.len() as f64 {
                    Err(Error::Data(format!(
                        "face {fi}: vertex index {i} out of range ({} vertices)",
                        vertices.len()
                    )))
                } else {
                    Ok(i as u32)
                }
            })
            .collect::<Result<_>>()?;
        push_polygon(&poly, label, fi, &mut triangles, &mut labels)?;
    }
    LabeledMesh::new(vertices, triangles, labels)
}

/// Fan-triangulates polygons with more than three corners.
fn push_polygon(
    poly: &[u32],
    label: ClassId,
    face: usize,
    triangles: &mut Vec<[u32; 3]>,
    labels: &mut Vec<ClassId>,
) -> Result<()> {
    if poly.len() < 3 {
        return Err(Error::Format(format!("face {face} has {} corners", poly.len())));
    }
    for k in 1..poly.len() - 1 {
        triangles.push([poly[0], poly[k], poly[k + 1]]);
        labels.push(label);
    }
    Ok(())
}

/// Faces are written as one binary `vertex_indices` list plus a `material`
/// uchar, followed by any `extra` per-face scalar columns.
pub fn mesh_to_ply<T: Real>(mesh: &LabeledMesh<T>, format: PlyFormat, extra: &[(&str, ScalarType, Vec<f64>)]) -> PlyFile {
    let st = if std::mem::size_of::<T>() <= 4 {
        ScalarType::F32
    } else {
        ScalarType::F64
    };
    let vs = mesh.vertices();
    let col = |a: usize| vs.iter().map(|p| p.axis(a).to_f64_lossy()).collect();
    let verts = Element::new("vertex", vs.len())
        .with_scalar("x", st, col(0))
        .with_scalar("y", st, col(1))
        .with_scalar("z", st, col(2));
    let mut faces = Element::new("face", mesh.len())
        .with_list(
            "vertex_indices",
            ScalarType::U8,
            ScalarType::U32,
            mesh.triangles()
                .iter()
                .map(|t| t.iter().map(|&i| i as f64).collect())
                .collect(),
        )
        .with_scalar(
            "material",
            ScalarType::U8,
            mesh.labels().iter().map(|&l| l as f64).collect(),
        );
    for (name, ty, values) in extra {
        faces = faces.with_scalar(*name, *ty, values.clone());
    }
    PlyFile {
        format,
        comments: Vec::new(),
        elements: vec![verts, faces],
    }
}

fn class_from_material_name(name: &str, line: usize) -> Result<ClassId> {
    if name == "unlabeled" {
        return Ok(UNLABELED);
    }
    let num = name.strip_prefix("class_").unwrap_or(name);
    if let Ok(n) = num.parse::<u8>() {
        return Ok(n);
    }
    URBAN_CLASSES
        .iter()
        .find(|(_, n)| *n == name)
        .map(|(id, _)| *id)
        .ok_or_else(|| Error::Format(format!("line {line}: unknown material `{name}`")))
}

pub fn mesh_from_obj<T: Real, R: BufRead>(r: R) -> Result<LabeledMesh<T>> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut labels = Vec::new();
    let mut current = UNLABELED;
    let mut face_no = 0;
    for (ln, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("reading OBJ: {e}")))?;
        let ln = ln + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Format(format!("line {ln}: bad vertex")))?;
                if c.len() != 3 {
                    return Err(Error::Format(format!("line {ln}: vertex needs 3 coordinates")));
                }
                vertices.push(Vec3::new(T::lit(c[0]), T::lit(c[1]), T::lit(c[2])));
            }
            Some("f") => {
                let nv = vertices.len() as i64;
                let poly = tok
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|_| Error::Format(format!("line {ln}: bad face index `{t}`")))?;
                        // OBJ is 1-based; negative indices count from the end
                        let i = if i < 0 { nv + i } else { i - 1 };
                        if i < 0 || i >= nv {
                            return Err(Error::Data(format!(
                                "face {face_no}: vertex index {first} out of range ({nv} vertices)"
                            )));
                        }
                        Ok(i as u32)
                    })
                    .collect::<Result<Vec<_>>>()?;
                push_polygon(&poly, current, face_no, &mut triangles, &mut labels)?;
                face_no += 1;
            }
            Some("usemtl") => {
                current = class_from_material_name(tok.next().unwrap_or(""), ln)?;
            }
            _ => {}
        }
    }
    LabeledMesh::new(vertices, triangles, labels)
}

pub fn mesh_to_obj<T: Real>(mesh: &LabeledMesh<T>) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    let mut current: Option<ClassId> = None;
    for (t, &l) in mesh.triangles().iter().zip(mesh.labels()) {
        if current != Some(l) {
            if l == UNLABELED {
                s.push_str("usemtl unlabeled\n");
            } else {
                let _ = writeln!(s, "usemtl class_{l}");
            }
            current = Some(l);
        }
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit cube, two triangles per side, outward winding.
    fn cube_obj() -> String {
        let mut s = String::new();
        for z in [0, 1] {
            for y in [0, 1] {
                for x in [0, 1] {
                    let _ = writeln!(s, "v {x} {y} {z}");
                }
            }
        }
        s.push_str("usemtl asphalt\n");
        for f in [
            [1, 3, 4, 2],
            [5, 6, 8, 7],
            [1, 2, 6, 5],
            [3, 7, 8, 4],
            [1, 5, 7, 3],
            [2, 4, 8, 6],
        ] {
            let _ = writeln!(s, "f {} {} {} {}", f[0], f[1], f[2], f[3]);
        }
        s
    }

    #[test]
    fn unit_cube_has_twelve_labeled_faces() {
        let m: LabeledMesh<f64> = mesh_from_obj(cube_obj().as_bytes()).unwrap();
        assert_eq!(m.len(), 12);
        assert_eq!(m.labels(), &[3u8; 12]);
        // outward normals: centroid + normal moves away from the cube center
        for f in 0..12 {
            let c = m.centroid(f) - Vec3::new(0.5, 0.5, 0.5);
            assert!(c.dot(m.normals()[f]) > 0.0);
        }
    }

    #[test]
    fn obj_roundtrip_preserves_labels() {
        let m: LabeledMesh<f64> = mesh_from_obj(cube_obj().as_bytes()).unwrap();
        let mut labels = m.labels().to_vec();
        labels[4] = UNLABELED;
        labels[7] = 0;
        let m = m.with_labels(labels).unwrap();
        let back: LabeledMesh<f64> = mesh_from_obj(mesh_to_obj(&m).as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn out_of_range_obj_index_is_data_error() {
        let s = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n";
        assert!(matches!(mesh_from_obj::<f64, _>(s.as_bytes()), Err(Error::Data(_))));
    }

    #[test]
    fn out_of_range_ply_index_is_data_error() {
        let ply = PlyFile {
            format: PlyFormat::Ascii,
            comments: vec![],
            elements: vec![
                Element::new("vertex", 3)
                    .with_scalar("x", ScalarType::F32, vec![0.0, 1.0, 0.0])
                    .with_scalar("y", ScalarType::F32, vec![0.0, 0.0, 1.0])
                    .with_scalar("z", ScalarType::F32, vec![0.0; 3]),
                Element::new("face", 1).with_list(
                    "vertex_indices",
                    ScalarType::U8,
                    ScalarType::I32,
                    vec![vec![0.0, 1.0, 3.0]],
                ),
            ],
        };
        assert!(matches!(mesh_from_ply::<f64>(&ply), Err(Error::Data(_))));
    }
}
