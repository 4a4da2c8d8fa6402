use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Axis;
use crate::error::{Error, Result};
use crate::geodesic::{closest_axis_points, trace_geodesic, unit, DistanceQuery};
use crate::mesh::{Mesh, SurfacePoint};

/// Log-map coordinates of patch points: for point `i`, the index of its
/// closest axis point and `r·e^{iθ}` where `r` is the geodesic distance and
/// `θ` the departing angle relative to the axis tangent there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchParam {
    pub(crate) closest: Vec<usize>,
    #[serde(with = "crate::serde_cx::vec")]
    pub(crate) logs: Vec<Complex64>,
}

impl PatchParam {
    pub fn closest(&self) -> &[usize] {
        &self.closest
    }

    pub fn logs(&self) -> &[Complex64] {
        &self.logs
    }

    pub fn len(&self) -> usize {
        self.closest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closest.is_empty()
    }

    /// The parameterization of the mirror image.
    pub fn mirrored(&self) -> PatchParam {
        PatchParam {
            closest: self.closest.clone(),
            logs: self.logs.iter().map(|z| z.conj()).collect(),
        }
    }
}

/// Log-map parameterization of `points` against `axis`.
pub fn parameterize_patch(mesh: &Mesh, points: &[SurfacePoint], axis: &Axis) -> Result<PatchParam> {
    let closest = closest_axis_points(mesh, points, axis.points())?;
    let mut logs = vec![Complex64::new(0.0, 0.0); points.len()];
    // One propagation per axis point, reaching all the patch points it owns.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &j) in closest.iter().enumerate() {
        groups.entry(j).or_default().push(i);
    }
    for (j, members) in groups {
        let targets: Vec<SurfacePoint> = members.iter().map(|&i| points[i]).collect();
        let paths = DistanceQuery::new(mesh, &[axis.points[j]])?.paths_to(&targets)?;
        for (&i, h) in members.iter().zip(paths) {
            if h.length() > 0.0 {
                logs[i] = h.initial_direction()? / axis.tangents[j] * h.length();
            }
        }
    }
    Ok(PatchParam { closest, logs })
}

/// Patch points traced from an axis, aligned with the parameterization.
/// Points whose trace left the surface are `None` and listed in `skipped`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub points: Vec<Option<SurfacePoint>>,
    pub skipped: Vec<usize>,
}

/// Applies the exponential map at each point's closest axis point. With
/// `mirror`, the log-map angles are conjugated.
pub fn reconstruct_patch(mesh: &Mesh, axis: &Axis, param: &PatchParam, mirror: bool) -> Result<Reconstruction> {
    reconstruct_subset(mesh, axis, param, mirror, |_| true, None)
}

/// Reconstructs the points selected by `keep`, copying the others from
/// `previous`.
pub(crate) fn reconstruct_subset(
    mesh: &Mesh,
    axis: &Axis,
    param: &PatchParam,
    mirror: bool,
    select: impl Fn(usize) -> bool,
    previous: Option<&[Option<SurfacePoint>]>,
) -> Result<Reconstruction> {
    let n = param.len();
    let mut points = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for i in 0..n {
        let j = param.closest[i];
        if j >= axis.len() {
            return Err(Error::DimensionMismatch {
                expected: axis.len(),
                got: j + 1,
            });
        }
        if !select(i) {
            let p = previous.and_then(|prev| prev[i]);
            if p.is_none() {
                skipped.push(i);
            }
            points.push(p);
            continue;
        }
        let z = if mirror { param.logs[i].conj() } else { param.logs[i] };
        let r = z.norm();
        if r == 0.0 {
            points.push(Some(axis.points[j]));
            continue;
        }
        let dir = unit(z * axis.tangents[j]);
        match trace_geodesic(mesh, &axis.points[j], dir * r) {
            Ok(g) => points.push(Some(g.end())),
            Err(Error::Truncated { .. }) => {
                points.push(None);
                skipped.push(i);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Reconstruction { points, skipped })
}

/// A contact patch on one mesh together with its axis and parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    /// Identifier of the mesh the patch lives on.
    pub mesh: String,
    /// Current positions, aligned with the parameterization. `None` marks a
    /// point whose trace left the surface.
    pub points: Vec<Option<SurfacePoint>>,
    pub axis: Axis,
    pub param: PatchParam,
}

impl Patch {
    /// Parameterizes `points` on `mesh` against the axis through
    /// `axis_points`.
    pub fn new(mesh_id: &str, mesh: &Mesh, points: &[SurfacePoint], axis_points: &[SurfacePoint]) -> Result<Patch> {
        let points = points.iter().map(|p| mesh.validate_point(p)).collect::<Result<Vec<_>>>()?;
        let axis = super::parameterize_axis(mesh, axis_points)?;
        let param = parameterize_patch(mesh, &points, &axis)?;
        Ok(Patch {
            mesh: mesh_id.to_string(),
            points: points.into_iter().map(Some).collect(),
            axis,
            param,
        })
    }

    /// Points currently on the surface, with their indices.
    pub fn placed(&self) -> impl Iterator<Item = (usize, SurfacePoint)> + '_ {
        self.points.iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p)))
    }

    pub fn skipped(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.is_none().then_some(i))
            .collect()
    }

    /// Re-parameterizes the current points against a new axis.
    pub fn set_axis(&mut self, mesh: &Mesh, axis_points: &[SurfacePoint]) -> Result<()> {
        let points: Vec<SurfacePoint> = self.placed().map(|(_, p)| p).collect();
        if points.len() != self.points.len() {
            return Err(Error::InvalidContact {
                index: self.skipped()[0],
                reason: "cannot re-parameterize a patch with dropped points".into(),
            });
        }
        let axis = super::parameterize_axis(mesh, axis_points)?;
        self.param = parameterize_patch(mesh, &points, &axis)?;
        self.axis = axis;
        Ok(())
    }

    /// Recomputes every point from the axis.
    pub fn rebuild(&mut self, mesh: &Mesh) -> Result<Vec<usize>> {
        let r = reconstruct_patch(mesh, &self.axis, &self.param, false)?;
        self.points = r.points;
        Ok(r.skipped)
    }
}
