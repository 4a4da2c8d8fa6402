use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{c2, unit};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint};

/// Change of direction at an interior vertex of a path, both directions
/// expressed in that vertex's tangent basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bend {
    pub index: usize,
    pub incoming: Complex64,
    pub outgoing: Complex64,
}

/// A piecewise-straight path over a mesh: its endpoints and every edge or
/// vertex it passes through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    points: Vec<SurfacePoint>,
    segment_lengths: Vec<f64>,
    length: f64,
    initial: Option<Complex64>,
    ending: Option<Complex64>,
    bends: Vec<Bend>,
}

impl GeodesicPath {
    /// The zero-length path sitting at `p`.
    pub fn degenerate(p: SurfacePoint) -> Self {
        GeodesicPath {
            points: vec![p],
            segment_lengths: Vec::new(),
            length: 0.0,
            initial: None,
            ending: None,
            bends: Vec::new(),
        }
    }

    /// Builds a path through consecutive points that pairwise share a face.
    pub(crate) fn from_points(mesh: &Mesh, points: Vec<SurfacePoint>) -> Result<Self> {
        let tol = 1e-14 * mesh.length_scale();
        let mut pts: Vec<SurfacePoint> = Vec::with_capacity(points.len());
        for p in points {
            if let Some(last) = pts.last() {
                if *last == p {
                    continue;
                }
                if let Some(f) = mesh.common_face(last, &p) {
                    let d = mesh.chart_position(f, &p).unwrap() - mesh.chart_position(f, last).unwrap();
                    if d.norm() <= tol {
                        continue;
                    }
                }
            }
            pts.push(p);
        }
        if pts.len() < 2 {
            return Ok(GeodesicPath::degenerate(pts[0]));
        }
        let mut lengths = Vec::with_capacity(pts.len() - 1);
        // (face, chart direction) of each segment
        let mut segs = Vec::with_capacity(pts.len() - 1);
        for w in pts.windows(2) {
            let f = mesh.common_face(&w[0], &w[1]).ok_or(Error::Disconnected)?;
            let d = c2(mesh.chart_position(f, &w[1]).unwrap() - mesh.chart_position(f, &w[0]).unwrap());
            lengths.push(d.norm());
            segs.push((f, unit(d)));
        }
        let (f0, d0) = segs[0];
        let initial = unit(mesh.face_direction_to_local(&pts[0], f0, d0));
        let n = pts.len() - 1;
        let (fl, dl) = segs[n - 1];
        let ending = -unit(mesh.face_direction_to_local(&pts[n], fl, -dl));
        let mut bends = Vec::new();
        for i in 1..n {
            if let SurfacePoint::Vertex { .. } = pts[i] {
                let (fi, di) = segs[i - 1];
                let (fo, dout) = segs[i];
                bends.push(Bend {
                    index: i,
                    incoming: -unit(mesh.face_direction_to_local(&pts[i], fi, -di)),
                    outgoing: unit(mesh.face_direction_to_local(&pts[i], fo, dout)),
                });
            }
        }
        let length = lengths.iter().sum();
        Ok(GeodesicPath {
            points: pts,
            segment_lengths: lengths,
            length,
            initial: Some(initial),
            ending: Some(ending),
            bends,
        })
    }

    pub(crate) fn from_trace(
        points: Vec<SurfacePoint>,
        segment_lengths: Vec<f64>,
        initial: Complex64,
        ending: Complex64,
    ) -> Self {
        let length = segment_lengths.iter().sum();
        GeodesicPath {
            points,
            segment_lengths,
            length,
            initial: Some(initial),
            ending: Some(ending),
            bends: Vec::new(),
        }
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    pub fn start(&self) -> SurfacePoint {
        self.points[0]
    }

    pub fn end(&self) -> SurfacePoint {
        *self.points.last().unwrap()
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Unit direction leaving the start point, in its tangent basis.
    pub fn initial_direction(&self) -> Result<Complex64> {
        self.initial.ok_or(Error::ZeroLength)
    }

    /// Unit direction of travel on arrival, in the end point's tangent basis.
    pub fn ending_direction(&self) -> Result<Complex64> {
        self.ending.ok_or(Error::ZeroLength)
    }

    /// Direction changes at interior vertices.
    pub fn bends(&self) -> &[Bend] {
        &self.bends
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        let mut segment_lengths = self.segment_lengths.clone();
        segment_lengths.reverse();
        let last = points.len().saturating_sub(1);
        GeodesicPath {
            points,
            segment_lengths,
            length: self.length,
            initial: self.ending.map(|d| -d),
            ending: self.initial.map(|d| -d),
            bends: self
                .bends
                .iter()
                .rev()
                .map(|b| Bend {
                    index: last - b.index,
                    incoming: -b.outgoing,
                    outgoing: -b.incoming,
                })
                .collect(),
        }
    }
}
