use num_complex::Complex64;

use super::{parameterize_axis, reconstruct_axis, reconstruct_patch, Axis, Patch};
use crate::error::{Error, Result};
use crate::geodesic::{exact_geodesic, DistanceQuery};
use crate::mesh::{Mesh, SurfacePoint};

/// Outcome of a transfer: the new patch on the target mesh and the indices
/// of points that could not be placed.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub patch: Patch,
    pub skipped: Vec<usize>,
}

/// Transfers `patch` onto `target` as its mirror image, starting the axis
/// at `start` and leaving along `direction` (in the tangent basis of
/// `start`).
///
/// The mirror is baked into the returned patch (its turning angles and
/// log-map angles are conjugated), so later edits on the target reconstruct
/// it without mirroring.
pub fn transfer_patch(
    patch: &Patch,
    target: &Mesh,
    target_id: &str,
    start: &SurfacePoint,
    direction: Complex64,
) -> Result<Transfer> {
    let axis = reconstruct_axis(target, &patch.axis.turning, &patch.axis.lengths, start, direction, true)?;
    let param = patch.param.mirrored();
    let r = reconstruct_patch(target, &axis, &param, false)?;
    Ok(Transfer {
        patch: Patch {
            mesh: target_id.to_string(),
            points: r.points,
            axis,
            param,
        },
        skipped: r.skipped,
    })
}

/// Default axis for a set of patch points: the shortest geodesic between
/// the two points farthest apart, with all its crossings as axis points.
/// Among equally distant pairs the lexicographically smallest is used.
pub fn default_axis(mesh: &Mesh, points: &[SurfacePoint]) -> Result<Axis> {
    if points.len() < 2 {
        return Err(Error::AxisTooShort {
            needed: 2,
            got: points.len(),
        });
    }
    let (i, j) = farthest_pair(mesh, points)?;
    let g = exact_geodesic(mesh, &points[i], &points[j])?;
    parameterize_axis(mesh, g.points())
}

/// Indices of the geodesically farthest pair, by exhaustive search.
pub fn farthest_pair(mesh: &Mesh, points: &[SurfacePoint]) -> Result<(usize, usize)> {
    let tol = 1e-9 * mesh.length_scale();
    let mut best = (0.0, 0, 0);
    for i in 0..points.len() - 1 {
        let rest = &points[i + 1..];
        let reached = DistanceQuery::new(mesh, &points[i..=i])?.query(rest)?;
        for (k, r) in reached.iter().enumerate() {
            if r.distance > best.0 + tol {
                best = (r.distance, i, i + 1 + k);
            }
        }
    }
    if best.0 <= tol {
        return Err(Error::CoincidentPatch);
    }
    Ok((best.1, best.2))
}
