//! Minimal Wavefront OBJ reader: vertex positions and faces only.

use std::path::Path;

use nalgebra::Point3;

use super::Mesh;
use crate::error::{Error, Result};

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_obj(&text)
}

/// Parses OBJ text. Polygons are fan-triangulated from their first corner,
/// so a quad `a b c d` becomes `a b c` and `a c d` (split along 0–2).
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        let mut tokens = line.split_whitespace();
        let err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                positions.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut corners = Vec::new();
                for t in tokens {
                    let head = t.split('/').next().unwrap_or_default();
                    let i: i64 = head
                        .parse()
                        .map_err(|_| err(format!("bad face index `{t}`")))?;
                    let idx = match i {
                        0 => return Err(err("face index 0 is invalid".into())),
                        i if i > 0 => (i - 1) as usize,
                        i => {
                            let back = (-i) as usize;
                            if back > positions.len() {
                                return Err(err(format!("relative index {i} out of range")));
                            }
                            positions.len() - back
                        }
                    };
                    corners.push(idx);
                }
                if corners.len() < 3 {
                    return Err(err("face needs at least three corners".into()));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Mesh::from_triangles(positions, faces)
}
