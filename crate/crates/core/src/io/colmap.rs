//! COLMAP sparse model, text flavor (`cameras.txt` + `images.txt`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Quat, Vec3};
use crate::scalar::Real;

struct Intrinsics {
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

fn parse_intrinsics(text: &str) -> Result<BTreeMap<u32, Intrinsics>> {
    let mut out = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Format(format!("cameras.txt line {}: malformed camera record", ln + 1));
        if tok.len() < 4 {
            return Err(bad());
        }
        let id: u32 = tok[0].parse().map_err(|_| bad())?;
        let width: u32 = tok[2].parse().map_err(|_| bad())?;
        let height: u32 = tok[3].parse().map_err(|_| bad())?;
        let params: Vec<f64> = tok[4..]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let (fx, fy, cx, cy) = match (tok[1], params.as_slice()) {
            ("PINHOLE", [fx, fy, cx, cy]) => (*fx, *fy, *cx, *cy),
            ("SIMPLE_PINHOLE", [f, cx, cy]) => (*f, *f, *cx, *cy),
            ("PINHOLE" | "SIMPLE_PINHOLE", _) => return Err(bad()),
            (other, _) => return Err(Error::UnsupportedModel(other.to_string())),
        };
        out.insert(
            id,
            Intrinsics {
                width,
                height,
                fx,
                fy,
                cx,
                cy,
            },
        );
    }
    Ok(out)
}

/// Parses the two text files into world→camera models, one per image, in
/// file order. Each model's `id` is the image name.
pub fn parse_cameras<T: Real>(cameras_txt: &str, images_txt: &str) -> Result<Vec<CameraModel<T>>> {
    let intr = parse_intrinsics(cameras_txt)?;
    let mut cams = Vec::new();
    let mut lines = images_txt.lines().enumerate();
    while let Some((ln, line)) = lines.next() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("images.txt line {}: malformed image record", ln + 1));
        let tok: Vec<&str> = trimmed.split_whitespace().collect();
        if tok.len() < 10 {
            return Err(bad());
        }
        let nums: Vec<f64> = tok[1..8]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let cam_id: u32 = tok[8].parse().map_err(|_| bad())?;
        let name = tok[9..].join(" ");
        // the 2D point list always follows, possibly as an empty line
        lines.next();

        let k = intr.get(&cam_id).ok_or_else(|| {
            Error::Reference(format!("image `{name}` references unknown camera {cam_id}"))
        })?;
        let q = Quat::new(nums[0], nums[1], nums[2], nums[3])
            .normalized()
            .ok_or_else(|| Error::Data(format!("image `{name}`: zero quaternion")))?;
        let rot: Mat3<f64> = q.to_mat3();
        let cam = CameraModel::new(
            name,
            T::lit(k.fx),
            T::lit(k.fy),
            T::lit(k.cx),
            T::lit(k.cy),
            k.width,
            k.height,
            rot.cast(),
            Vec3::new(T::lit(nums[4]), T::lit(nums[5]), T::lit(nums[6])),
        )?;
        cams.push(cam);
    }
    Ok(cams)
}

/// Reads `cameras.txt` and `images.txt` from a model directory.
pub fn load_cameras<T: Real>(dir: impl AsRef<Path>) -> Result<Vec<CameraModel<T>>> {
    let dir = dir.as_ref();
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
    };
    parse_cameras(&read("cameras.txt")?, &read("images.txt")?)
}

/// Rotation matrix → unit quaternion with non-negative `w`.
pub fn matrix_to_quat(m: &Mat3<f64>) -> Quat<f64> {
    let m = &m.m;
    let tr = m[0][0] + m[1][1] + m[2][2];
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        Quat::new(0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        Quat::new((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        Quat::new((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        Quat::new((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
    };
    let q = q.normalized().unwrap_or_else(Quat::identity);
    if q.w < 0.0 {
        Quat::new(-q.w, -q.x, -q.y, -q.z)
    } else {
        q
    }
}

/// Serializes cameras as `(cameras.txt, images.txt)`, one PINHOLE record per model.
pub fn format_cameras<T: Real>(cams: &[CameraModel<T>]) -> (String, String) {
    let mut c = String::from("# CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n");
    let mut i = String::from("# IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n# POINTS2D[] as (X, Y, POINT3D_ID)\n");
    for (k, cam) in cams.iter().enumerate() {
        let id = k + 1;
        let _ = writeln!(
            c,
            "{id} PINHOLE {} {} {} {} {} {}",
            cam.width,
            cam.height,
            cam.fx.to_f64_lossy(),
            cam.fy.to_f64_lossy(),
            cam.cx.to_f64_lossy(),
            cam.cy.to_f64_lossy()
        );
        let q = matrix_to_quat(&cam.rotation.cast());
        let t = cam.translation.cast::<f64>();
        let _ = writeln!(
            i,
            "{id} {} {} {} {} {} {} {} {id} {}\n",
            q.w, q.x, q.y, q.z, t.x, t.y, t.z, cam.id
        );
    }
    (c, i)
}

pub fn write_cameras<T: Real>(cams: &[CameraModel<T>], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (c, i) = format_cameras(cams);
    for (name, body) in [("cameras.txt", c), ("images.txt", i)] {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAMERAS: &str = "# comment\n1 PINHOLE 640 480 500 510 320 240\n2 SIMPLE_PINHOLE 320 240 300 160 120\n";

    #[test]
    fn identity_quaternion_gives_identity_rotation() {
        let images = "1 1 0 0 0 0 0 0 1 a.png\n\n";
        let cams: Vec<CameraModel<f64>> = parse_cameras(CAMERAS, images).unwrap();
        assert_eq!(cams[0].rotation, Mat3::identity());
        assert_eq!(cams[0].translation, Vec3::zero());
        assert_eq!(cams[0].id, "a.png");
    }

    #[test]
    fn x_quaternion_is_half_turn_about_x() {
        let images = "1 0 1 0 0 0 0 0 1 a.png\n\n";
        let cams: Vec<CameraModel<f64>> = parse_cameras(CAMERAS, images).unwrap();
        assert_eq!(cams[0].rotation.m, [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
    }

    #[test]
    fn three_camera_fixture() {
        let images = "\
# header
1 1 0 0 0 0 0 0 1 front.png
10.0 20.0 -1
2 0.7071067811865476 0 0.7071067811865476 0 1 2 3 2 left.png

3 1 0 0 0 0 0 5 1 rear.png
1 1 1 2 2 2
";
        let cams: Vec<CameraModel<f64>> = parse_cameras(CAMERAS, images).unwrap();
        let ids: Vec<_> = cams.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["front.png", "left.png", "rear.png"]);
        assert_eq!((cams[1].fx, cams[1].fy, cams[1].width), (300.0, 300.0, 320));
        assert!(cams.iter().all(|c| c.rotation.is_rotation(1e-12)));
        assert_eq!(cams[2].translation.z, 5.0);
    }

    #[test]
    fn unsupported_model_and_dangling_reference() {
        let r = parse_cameras::<f64>("1 OPENCV 10 10 1 1 5 5 0 0 0 0\n", "");
        assert!(matches!(r, Err(Error::UnsupportedModel(m)) if m == "OPENCV"));
        let r = parse_cameras::<f64>(CAMERAS, "1 1 0 0 0 0 0 0 9 x.png\n\n");
        assert!(matches!(r, Err(Error::Reference(_))));
    }

    #[test]
    fn format_parse_roundtrip() {
        let q = Quat::new(0.3, -0.5, 0.1, 0.8).normalized().unwrap();
        let cam = CameraModel::new("v0", 400.0, 410.0, 100.5, 80.25, 200, 160, q.to_mat3(), Vec3::new(1.0, -2.0, 0.5)).unwrap();
        let (c, i) = format_cameras(std::slice::from_ref(&cam));
        let back: Vec<CameraModel<f64>> = parse_cameras(&c, &i).unwrap();
        assert_eq!(back.len(), 1);
        for r in 0..3 {
            for k in 0..3 {
                assert!((back[0].rotation.m[r][k] - cam.rotation.m[r][k]).abs() < 1e-12);
            }
        }
        assert_eq!(back[0].translation, cam.translation);
        assert_eq!(back[0].id, "v0");
    }
}
