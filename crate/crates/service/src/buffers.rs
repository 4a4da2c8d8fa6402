//! Binary mesh buffers.
//!
//! Layout, all little-endian:
//!
//! ```text
//! u32            header length in bytes (a multiple of 4)
//! [u8]           JSON header, space padded
//! [f32; 3 * V]   vertex positions
//! [u32; 3 * F]   triangle indices
//! ```
//!
//! The header holds at least `vertices` and `faces`. Both arrays start on
//! 4-byte boundaries so a browser can view them as typed arrays without
//! copying.

use nalgebra::Point3;
use serde_json::Value;

pub fn encode(header: &Value, positions: &[Point3<f64>], faces: &[[usize; 3]]) -> Vec<u8> {
    let mut json = serde_json::to_vec(header).expect("header serializes");
    while !json.len().is_multiple_of(4) {
        json.push(b' ');
    }
    let mut out = Vec::with_capacity(4 + json.len() + 12 * (positions.len() + faces.len()));
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in positions {
        for c in p.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    for f in faces {
        for &i in f {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
    }
    out
}

/// Inverse of [`encode`]: header, positions and faces.
pub fn decode(bytes: &[u8]) -> Option<(Value, Vec<[f32; 3]>, Vec<[u32; 3]>)> {
    let word = |at: usize| -> Option<[u8; 4]> { bytes.get(at..at + 4)?.try_into().ok() };
    let n = u32::from_le_bytes(word(0)?) as usize;
    let header: Value = serde_json::from_slice(bytes.get(4..4 + n)?).ok()?;
    let v = header["vertices"].as_u64()? as usize;
    let f = header["faces"].as_u64()? as usize;
    let base = 4 + n;
    if bytes.len() != base + 12 * (v + f) {
        return None;
    }
    let positions = (0..v)
        .map(|i| Some([0, 1, 2].map(|k| f32::from_le_bytes(word(base + 12 * i + 4 * k).unwrap()))))
        .collect::<Option<Vec<_>>>()?;
    let base = base + 12 * v;
    let faces = (0..f)
        .map(|i| Some([0, 1, 2].map(|k| u32::from_le_bytes(word(base + 12 * i + 4 * k).unwrap()))))
        .collect::<Option<Vec<_>>>()?;
    Some((header, positions, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip_and_alignment() {
        let positions = [Point3::new(0.0, 1.0, 2.0), Point3::new(-1.5, 0.25, 3.0), Point3::new(1.0, 1.0, 1.0)];
        let faces = [[0, 1, 2]];
        for extra in ["", "x", "xy", "xyz"] {
            let header = json!({"vertices": 3, "faces": 1, "role": extra});
            let bytes = encode(&header, &positions, &faces);
            let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
            assert_eq!(n % 4, 0);
            let (h, p, f) = decode(&bytes).unwrap();
            assert_eq!(h, header);
            assert_eq!(p[1], [-1.5, 0.25, 3.0]);
            assert_eq!(f, vec![[0, 1, 2]]);
        }
    }
}
