//! Discrete parallel transport along geodesic paths.
//!
//! Within a face chart, and across an edge into the neighbouring chart, the
//! angle between a vector and the path direction is unchanged. At a vertex
//! the vertex basis itself is the transport frame, so the vector keeps its
//! local value while the path direction turns from `incoming` to `outgoing`.

use num_complex::Complex64;

use super::GeodesicPath;
use crate::error::Result;
use crate::mesh::Mesh;

/// Transports the tangent vector `v`, given in the basis of the start of
/// `path`, to the basis of its end. Zero-length paths return `v` unchanged.
pub fn parallel_transport(mesh: &Mesh, path: &GeodesicPath, v: Complex64) -> Result<Complex64> {
    for p in path.points() {
        mesh.validate_point(p)?;
    }
    if path.length() == 0.0 {
        return Ok(v);
    }
    let mut rel = v / path.initial_direction()?;
    for b in path.bends() {
        rel *= b.incoming / b.outgoing;
    }
    let out = rel * path.ending_direction()?;
    let n = out.norm();
    Ok(if n > 0.0 { out * (v.norm() / n) } else { out })
}
