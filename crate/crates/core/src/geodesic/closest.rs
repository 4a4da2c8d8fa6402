use super::DistanceQuery;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint};

/// For each point of `points`, the index of the geodesically nearest entry
/// of `candidates`. Ties go to the lowest candidate index.
pub fn closest_axis_points(
    mesh: &Mesh,
    points: &[SurfacePoint],
    candidates: &[SurfacePoint],
) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let query = DistanceQuery::new(mesh, candidates)?;
    Ok(query.query(points)?.into_iter().map(|r| r.source).collect())
}
