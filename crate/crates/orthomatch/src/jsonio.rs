//! Deterministic JSON writing shared by every file format in the crate.
//!
//! All floats are emitted with 17 significant digits (`{:.16e}`), which is
//! enough to round-trip any finite f64 exactly, and object keys are sorted,
//! so identical values always produce identical bytes.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::geometry::{GeometryError, Homography, Intrinsics, Mat3, Pose, Rotation, Vec3};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed JSON in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("non-finite number cannot be written as JSON")]
    NonFinite,
}

/// Format one f64 with 17 significant digits.
pub fn format_f64(x: f64) -> Result<String, JsonError> {
    if !x.is_finite() {
        return Err(JsonError::NonFinite);
    }
    Ok(format!("{x:.16e}"))
}

fn write_value(v: &Value, out: &mut String) -> Result<(), JsonError> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().ok_or(JsonError::NonFinite)?;
                out.push_str(&format_f64(f)?);
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serialization is infallible"));
                out.push(':');
                write_value(item, out)?;
            }
            out.push('}');
        }
    }
    Ok(())
}

/// Serialize any value to the deterministic JSON text form.
pub fn to_string<T: Serialize>(value: &T) -> Result<String, JsonError> {
    let v = serde_json::to_value(value).map_err(|e| JsonError::Parse {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    let mut out = String::new();
    write_value(&v, &mut out)?;
    out.push('\n');
    Ok(out)
}

pub fn write_file<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonError> {
    let text = to_string(value)?;
    fs::write(path, text).map_err(|e| JsonError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, JsonError> {
    let text = fs::read_to_string(path).map_err(|e| JsonError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| JsonError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

// Geometry exchange schemas: row-major number arrays under short keys.

#[derive(Serialize, serde::Deserialize)]
struct HomographyJson {
    h: Vec<f64>,
}

#[derive(Serialize, serde::Deserialize)]
struct IntrinsicsJson {
    k: Vec<f64>,
}

#[derive(Serialize, serde::Deserialize)]
struct PoseJson {
    r: Vec<f64>,
    t: Vec<f64>,
}

pub fn write_homography(path: &Path, h: &Homography) -> Result<(), JsonError> {
    write_file(
        path,
        &HomographyJson {
            h: h.to_row_major().to_vec(),
        },
    )
}

pub fn read_homography(path: &Path) -> Result<Homography, JsonError> {
    let parsed: HomographyJson = read_file(path)?;
    let arr: [f64; 9] = parsed.h.try_into().map_err(|v: Vec<f64>| JsonError::Schema {
        path: path.display().to_string(),
        message: format!("\"h\" must hold 9 numbers, got {}", v.len()),
    })?;
    Ok(Homography::from_row_major(&arr)?)
}

pub fn write_intrinsics(path: &Path, k: &Intrinsics) -> Result<(), JsonError> {
    let m = k.matrix();
    write_file(
        path,
        &IntrinsicsJson {
            k: vec![
                m[(0, 0)],
                m[(0, 1)],
                m[(0, 2)],
                m[(1, 0)],
                m[(1, 1)],
                m[(1, 2)],
                m[(2, 0)],
                m[(2, 1)],
                m[(2, 2)],
            ],
        },
    )
}

pub fn read_intrinsics(path: &Path) -> Result<Intrinsics, JsonError> {
    let parsed: IntrinsicsJson = read_file(path)?;
    intrinsics_from_array(&parsed.k).map_err(|message| JsonError::Schema {
        path: path.display().to_string(),
        message,
    })
}

pub fn intrinsics_from_array(k: &[f64]) -> Result<Intrinsics, String> {
    if k.len() != 9 {
        return Err(format!("\"k\" must hold 9 numbers, got {}", k.len()));
    }
    if k[1] != 0.0 || k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0 {
        return Err("\"k\" must be upper-triangular with k[2][2] = 1".into());
    }
    Intrinsics::new(k[0], k[4], k[2], k[5]).map_err(|e| e.to_string())
}

pub fn write_pose(path: &Path, pose: &Pose) -> Result<(), JsonError> {
    let m = pose.rotation.matrix();
    write_file(
        path,
        &PoseJson {
            r: vec![
                m[(0, 0)],
                m[(0, 1)],
                m[(0, 2)],
                m[(1, 0)],
                m[(1, 1)],
                m[(1, 2)],
                m[(2, 0)],
                m[(2, 1)],
                m[(2, 2)],
            ],
            t: vec![pose.translation.x, pose.translation.y, pose.translation.z],
        },
    )
}

pub fn read_pose(path: &Path) -> Result<Pose, JsonError> {
    let parsed: PoseJson = read_file(path)?;
    pose_from_arrays(&parsed.r, &parsed.t).map_err(|message| JsonError::Schema {
        path: path.display().to_string(),
        message,
    })
}

pub fn pose_from_arrays(r: &[f64], t: &[f64]) -> Result<Pose, String> {
    if r.len() != 9 {
        return Err(format!("\"r\" must hold 9 numbers, got {}", r.len()));
    }
    if t.len() != 3 {
        return Err(format!("\"t\" must hold 3 numbers, got {}", t.len()));
    }
    let m = Mat3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]);
    let rotation = Rotation::from_matrix(m).map_err(|e| e.to_string())?;
    Ok(Pose::new(rotation, Vec3::new(t[0], t[1], t[2])))
}

pub fn homography_to_array(h: &Homography) -> Vec<f64> {
    h.to_row_major().to_vec()
}

pub fn homography_from_array(v: &[f64]) -> Result<Homography, String> {
    let arr: [f64; 9] = v
        .try_into()
        .map_err(|_| format!("homography must hold 9 numbers, got {}", v.len()))?;
    Homography::from_row_major(&arr).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_homography;
    use nalgebra::Vector2;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            -4.9e-300,
            6.02214076e23,
        ] {
            let s = format_f64(x).unwrap();
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn homography_file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.json");
        let h = rotation_homography(33.7, Vector2::new(123.4, 56.0));
        write_homography(&path, &h).unwrap();
        let h2 = read_homography(&path).unwrap();
        assert_eq!(h.to_row_major(), h2.to_row_major());

        // Writing again must produce identical bytes.
        let first = std::fs::read(&path).unwrap();
        write_homography(&path, &h2).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn intrinsics_and_pose_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let kp = dir.path().join("k.json");
        let k = Intrinsics::new(500.0, 505.5, 320.25, 240.0).unwrap();
        write_intrinsics(&kp, &k).unwrap();
        assert_eq!(read_intrinsics(&kp).unwrap(), k);

        let pp = dir.path().join("p.json");
        let pose = Pose::new(Rotation::about_axis(2, 0.7), Vec3::new(0.1, -0.2, 0.3));
        write_pose(&pp, &pose).unwrap();
        let back = read_pose(&pp).unwrap();
        assert!((back.rotation.matrix() - pose.rotation.matrix()).norm() == 0.0);
        assert_eq!(back.translation, pose.translation);
    }

    #[test]
    fn schema_violations_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"h\": [1, 2, 3]}").unwrap();
        assert!(matches!(
            read_homography(&path),
            Err(JsonError::Schema { .. })
        ));
        std::fs::write(&path, "not json").unwrap();
        assert!(matches!(read_homography(&path), Err(JsonError::Parse { .. })));
    }
}
