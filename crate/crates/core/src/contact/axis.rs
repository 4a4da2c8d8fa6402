use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{exact_geodesic, trace_geodesic, unit};
use crate::mesh::{Mesh, SurfacePoint};

/// Consecutive dense axis points closer than this (relative to the mesh
/// length scale) are merged.
const MERGE_TOL: f64 = 1e-9;

/// A piecewise-geodesic curve described intrinsically by its segment
/// lengths and the turning angles between consecutive segments.
///
/// All vectors have one entry per axis point. `lengths[i]` is the length of
/// the segment leaving point `i` (the last entry is unused and zero).
/// `turning[i]` is the unit rotation from the arriving direction to the
/// departing direction at point `i` (identity at the endpoints).
/// `tangents[i]` is the departing direction at point `i`, except at the last
/// point where it is the arriving direction of the final segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub(crate) points: Vec<SurfacePoint>,
    pub(crate) lengths: Vec<f64>,
    #[serde(with = "crate::serde_cx::vec")]
    pub(crate) turning: Vec<Complex64>,
    #[serde(with = "crate::serde_cx::vec")]
    pub(crate) tangents: Vec<Complex64>,
    /// Arriving direction at each point (the departing direction at the
    /// first point). Lets a suffix of the axis be retraced on its own.
    #[serde(with = "crate::serde_cx::vec")]
    pub(crate) arrivals: Vec<Complex64>,
}

impl Axis {
    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn turning_angles(&self) -> &[Complex64] {
        &self.turning
    }

    pub fn tangents(&self) -> &[Complex64] {
        &self.tangents
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn start(&self) -> SurfacePoint {
        self.points[0]
    }

    /// Departing direction at the first point.
    pub fn initial_direction(&self) -> Complex64 {
        self.tangents[0]
    }

    /// Retraces the axis from point `from` onwards, keeping every point and
    /// tangent before it. `from = 0` retraces from the first point and its
    /// stored departing direction.
    pub(crate) fn retrace_from(&mut self, mesh: &Mesh, from: usize) -> Result<()> {
        let m = self.lengths.len();
        self.points.truncate(from + 1);
        let mut arriving = self.arrivals[from];
        for i in from..m - 1 {
            let dir = if i == 0 {
                unit(self.tangents[0])
            } else {
                unit(arriving * self.turning[i])
            };
            let g = trace_geodesic(mesh, &self.points[i], dir * self.lengths[i]).map_err(|e| match e {
                Error::Truncated { .. } => Error::AxisTruncated {
                    segment: i,
                    partial: self.points.clone(),
                },
                other => other,
            })?;
            self.tangents[i] = dir;
            arriving = unit(g.ending_direction()?);
            self.points.push(g.end());
            self.arrivals[i + 1] = arriving;
        }
        self.tangents[m - 1] = arriving;
        if m > 1 && from == 0 {
            self.arrivals[0] = self.tangents[0];
        }
        Ok(())
    }
}

/// Computes segment lengths, turning angles and tangents of the axis
/// through `points`.
///
/// Each pair of consecutive points is joined by its shortest geodesic and
/// every edge or vertex crossing of that geodesic becomes an axis point, so
/// the stored quantities describe the dense axis.
pub fn parameterize_axis(mesh: &Mesh, points: &[SurfacePoint]) -> Result<Axis> {
    if points.len() < 2 {
        return Err(Error::AxisTooShort {
            needed: 2,
            got: points.len(),
        });
    }
    let tol = MERGE_TOL * mesh.length_scale();
    let mut dense: Vec<SurfacePoint> = vec![mesh.validate_point(&points[0])?];
    for i in 0..points.len() - 1 {
        let g = exact_geodesic(mesh, &points[i], &points[i + 1])?;
        if g.length() <= tol {
            return Err(Error::CoincidentAxisPoints { index: i });
        }
        let n = g.points().len();
        for (k, p) in g.points().iter().enumerate().skip(1) {
            let prev = dense.last().unwrap();
            let close = (mesh.position_of(p)? - mesh.position_of(prev)?).norm() <= tol;
            if close {
                if k + 1 == n {
                    // Keep the user-specified point rather than a crossing.
                    *dense.last_mut().unwrap() = *p;
                }
                continue;
            }
            dense.push(*p);
        }
    }
    let m = dense.len();
    let mut lengths = vec![0.0; m];
    let mut turning = vec![Complex64::new(1.0, 0.0); m];
    let mut tangents = vec![Complex64::new(1.0, 0.0); m];
    let mut arrivals = vec![Complex64::new(1.0, 0.0); m];
    for i in 0..m - 1 {
        let g = exact_geodesic(mesh, &dense[i], &dense[i + 1])?;
        let t = unit(g.initial_direction()?);
        let s = unit(g.ending_direction()?);
        lengths[i] = g.length();
        tangents[i] = t;
        if i > 0 {
            turning[i] = unit(t / arrivals[i]);
        } else {
            arrivals[0] = t;
        }
        arrivals[i + 1] = s;
    }
    tangents[m - 1] = arrivals[m - 1];
    Ok(Axis {
        points: dense,
        lengths,
        turning,
        tangents,
        arrivals,
    })
}

/// Traces an axis with the given lengths and turning angles from `start`,
/// leaving along `direction`. With `mirror`, turning angles are conjugated
/// so the result is the mirror image; the returned axis stores the angles
/// it was actually traced with.
pub fn reconstruct_axis(
    mesh: &Mesh,
    turning: &[Complex64],
    lengths: &[f64],
    start: &SurfacePoint,
    direction: Complex64,
    mirror: bool,
) -> Result<Axis> {
    let m = turning.len();
    if m < 2 {
        return Err(Error::AxisTooShort { needed: 2, got: m });
    }
    if lengths.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: lengths.len(),
        });
    }
    if direction.norm() == 0.0 || !direction.norm().is_finite() {
        return Err(Error::NonFinite);
    }
    let turning: Vec<Complex64> = turning
        .iter()
        .map(|&z| unit(if mirror { z.conj() } else { z }))
        .collect();
    let mut axis = Axis {
        points: vec![mesh.validate_point(start)?],
        lengths: lengths.to_vec(),
        turning,
        tangents: vec![unit(direction); m],
        arrivals: vec![unit(direction); m],
    };
    axis.retrace_from(mesh, 0)?;
    Ok(axis)
}
