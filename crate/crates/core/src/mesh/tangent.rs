//! Tangent spaces at surface points.
//!
//! Directions are unit complex numbers in a local basis:
//! * face points use the face chart (reference = first edge of the face);
//! * edge points use the unfolded pair of faces, with the canonical halfedge
//!   along +x and its face on the +y side;
//! * vertex points use polar angles around the vertex, with corner angles
//!   rescaled so that the full turn is 2π (π at boundary vertices). The
//!   reference direction is the first outgoing halfedge of the fan.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use super::{Mesh, SurfacePoint};
use crate::error::{Error, Result};
use crate::geodesic::GeodesicPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Vertex,
    Edge,
    Face,
}

/// Extrinsic description of the tangent basis at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentBasis {
    pub kind: BasisKind,
    /// Unit 3-vector of the local +x direction.
    pub reference: Vector3<f64>,
    /// Unit normal of the plane holding the reference direction.
    pub normal: Vector3<f64>,
    /// Factor applied to corner angles (1 for faces and edges).
    pub angle_scale: f64,
}

impl Mesh {
    fn face_frame(&self, f: usize) -> (Vector3<f64>, Vector3<f64>) {
        let [a, b, _] = self.faces()[f].map(|v| self.positions()[v]);
        let x = (b - a).normalize();
        let n = self.face_normal(f);
        (x, n.cross(&x))
    }

    pub(crate) fn require_manifold(&self, p: &SurfacePoint) -> Result<()> {
        if let SurfacePoint::Vertex { index } = *p {
            if self.is_nonmanifold_vertex(index) {
                return Err(Error::NonManifoldVertex { vertex: index });
            }
        }
        Ok(())
    }

    pub fn tangent_basis_at(&self, p: &SurfacePoint) -> Result<TangentBasis> {
        let p = self.validate_point(p)?;
        self.require_manifold(&p)?;
        Ok(match p {
            SurfacePoint::Face { index, .. } => {
                let (x, _) = self.face_frame(index);
                TangentBasis {
                    kind: BasisKind::Face,
                    reference: x,
                    normal: self.face_normal(index),
                    angle_scale: 1.0,
                }
            }
            SurfacePoint::Edge { index, .. } => {
                let h = self.edge(index).halfedge;
                let d = self.positions()[self.tip(h)] - self.positions()[self.origin(h)];
                TangentBasis {
                    kind: BasisKind::Edge,
                    reference: d.normalize(),
                    normal: self.face_normal(h / 3),
                    angle_scale: 1.0,
                }
            }
            SurfacePoint::Vertex { index } => {
                let h = self.fan(index)[0];
                let d = self.positions()[self.tip(h)] - self.positions()[index];
                TangentBasis {
                    kind: BasisKind::Vertex,
                    reference: d.normalize(),
                    normal: self.face_normal(h / 3),
                    angle_scale: self.angle_scale(index),
                }
            }
        })
    }

    /// Expresses a direction given in the chart of face `f` in the local
    /// basis at `p`. Magnitude is preserved.
    pub fn face_direction_to_local(&self, p: &SurfacePoint, f: usize, d: Complex64) -> Complex64 {
        match *p {
            SurfacePoint::Face { .. } => d,
            SurfacePoint::Edge { index, .. } => {
                let e = self.edge(index);
                if e.halfedge / 3 == f {
                    d / self.halfedge_direction(e.halfedge)
                } else {
                    let t = e.twin.expect("edge point used with a face it does not touch");
                    -d / self.halfedge_direction(t)
                }
            }
            SurfacePoint::Vertex { index } => {
                let fan = self.fan(index);
                let k = fan
                    .iter()
                    .position(|&h| h / 3 == f)
                    .expect("vertex point used with a face it does not touch");
                let alpha = (d / self.halfedge_direction(fan[k])).arg();
                let theta = self.fan_angles(index)[k] + self.angle_scale(index) * alpha;
                Complex64::from_polar(d.norm(), theta)
            }
        }
    }

    /// Inverse of [`Mesh::face_direction_to_local`]: returns a face around
    /// `p` and the direction in its chart, or `None` when the direction
    /// points off the surface.
    pub fn local_to_face_direction(
        &self,
        p: &SurfacePoint,
        z: Complex64,
    ) -> Option<(usize, Complex64)> {
        match *p {
            SurfacePoint::Face { index, .. } => Some((index, z)),
            SurfacePoint::Edge { index, .. } => {
                let e = self.edge(index);
                let unit = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
                if unit.im >= -1e-14 {
                    Some((e.halfedge / 3, z * self.halfedge_direction(e.halfedge)))
                } else {
                    let t = e.twin?;
                    Some((t / 3, -z * self.halfedge_direction(t)))
                }
            }
            SurfacePoint::Vertex { index } => {
                let fan = self.fan(index);
                let angles = self.fan_angles(index);
                let scale = self.angle_scale(index);
                let mut theta = if z.norm() > 0.0 { z.arg() } else { 0.0 };
                if self.is_boundary_vertex(index) {
                    let span = std::f64::consts::PI;
                    if theta < -1e-12 || theta > span + 1e-12 {
                        return None;
                    }
                    theta = theta.clamp(0.0, span);
                } else {
                    theta = theta.rem_euclid(TAU);
                }
                let k = angles.iter().rposition(|&a| a <= theta).unwrap_or(0);
                let alpha = (theta - angles[k]) / scale;
                let h = fan[k];
                Some((h / 3, Complex64::from_polar(z.norm(), alpha) * self.halfedge_direction(h)))
            }
        }
    }

    /// Encodes an extrinsic tangent vector at `p` as a local complex value.
    pub fn encode_tangent(&self, p: &SurfacePoint, v: &Vector3<f64>) -> Result<Complex64> {
        let p = self.validate_point(p)?;
        self.require_manifold(&p)?;
        let in_face = |f: usize| {
            let (x, y) = self.face_frame(f);
            Complex64::new(v.dot(&x), v.dot(&y))
        };
        Ok(match p {
            SurfacePoint::Face { index, .. } => in_face(index),
            SurfacePoint::Edge { index, .. } => {
                let f = self.edge(index).halfedge / 3;
                self.face_direction_to_local(&p, f, in_face(f))
            }
            SurfacePoint::Vertex { index } => {
                // Pick the incident face whose sector and plane best hold v.
                let mut best: Option<(f64, usize)> = None;
                for &h in self.fan(index) {
                    let f = h / 3;
                    let d = in_face(f);
                    let alpha = (d / self.halfedge_direction(h)).arg();
                    let outside = if alpha < 0.0 {
                        -alpha
                    } else if alpha > self.corner_angle(h) {
                        alpha - self.corner_angle(h)
                    } else {
                        0.0
                    };
                    let off_plane = v.dot(&self.face_normal(f)).abs() / v.norm().max(1e-300);
                    let score = outside + off_plane;
                    if best.is_none_or(|(s, _)| score < s) {
                        best = Some((score, f));
                    }
                }
                let f = best.map(|(_, f)| f).unwrap_or(self.fan(index)[0] / 3);
                self.face_direction_to_local(&p, f, in_face(f))
            }
        })
    }

    /// Decodes a local complex value at `p` into an extrinsic 3-vector.
    pub fn decode_tangent(&self, p: &SurfacePoint, z: Complex64) -> Result<Vector3<f64>> {
        let p = self.validate_point(p)?;
        self.require_manifold(&p)?;
        let (f, d) = match p {
            // Edge charts are embedded in the plane of the canonical face.
            SurfacePoint::Edge { index, .. } => {
                let h = self.edge(index).halfedge;
                (h / 3, z * self.halfedge_direction(h))
            }
            _ => self
                .local_to_face_direction(&p, z)
                .ok_or_else(|| Error::Truncated {
                    traveled: 0.0,
                    requested: z.norm(),
                    partial: Box::new(GeodesicPath::degenerate(p)),
                })?,
        };
        let (x, y) = self.face_frame(f);
        Ok(x * d.re + y * d.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn flat_interior_vertex_has_unit_scale() {
        let m = primitives::grid(4, 4, 1.0, 1.0);
        let v = (0..m.num_vertices())
            .find(|&v| !m.is_boundary_vertex(v))
            .unwrap();
        assert!((m.angle_sum(v) - TAU).abs() < 1e-12);
        assert!((m.tangent_basis_at(&SurfacePoint::vertex(v)).unwrap().angle_scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_corner_scaled_by_four_thirds() {
        let m = primitives::cube(1.0);
        for v in 0..m.num_vertices() {
            assert!((m.angle_sum(v) - 3.0 * FRAC_PI_2).abs() < 1e-12);
            assert!((m.angle_scale(v) - 4.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn face_basis_follows_first_edge() {
        let m = primitives::unit_square();
        let b = m.tangent_basis_at(&SurfacePoint::face(0, [1.0 / 3.0; 3])).unwrap();
        let [a, c, _] = m.faces()[0].map(|v| m.positions()[v]);
        assert!((b.reference - (c - a).normalize()).norm() < 1e-15);
    }

    #[test]
    fn vertex_edge_directions_step_by_scaled_corners() {
        let m = primitives::cube(1.0);
        let v = 0;
        let p = SurfacePoint::vertex(v);
        let fan = m.fan(v).to_vec();
        let mut prev = 0.0;
        for (k, &h) in fan.iter().enumerate() {
            let z = m.face_direction_to_local(&p, h / 3, m.halfedge_direction(h));
            let ang = z.arg().rem_euclid(TAU);
            if k > 0 {
                let expected = m.corner_angle(fan[k - 1]) * 4.0 / 3.0;
                assert!((ang - prev - expected).abs() < 1e-12);
            } else {
                assert!(ang.abs() < 1e-12);
            }
            prev = ang;
        }
        // The full turn closes at exactly 2π.
        let last = *fan.last().unwrap();
        assert!((prev + m.corner_angle(last) * 4.0 / 3.0 - TAU).abs() < 1e-12);
    }

    #[test]
    fn encode_decode_round_trip() {
        let m = primitives::cylinder(16, 4, 1.0, 1.0);
        for f in [0, 7, 20] {
            let n = m.face_normal(f);
            let (x, _) = m.face_frame(f);
            let v = n.cross(&x) * 0.3 + x * 0.7;
            let p = SurfacePoint::face(f, [0.2, 0.3, 0.5]);
            let z = m.encode_tangent(&p, &v).unwrap();
            assert!((m.decode_tangent(&p, z).unwrap() - v).norm() < 1e-9 * v.norm());
        }
        // Edge point: vectors in the canonical face plane.
        for e in 0..m.num_edges() {
            let h = m.edge(e).halfedge;
            let p = SurfacePoint::edge(e, [0.4, 0.6]);
            let (x, y) = m.face_frame(h / 3);
            let v = x * 0.5 - y * 1.3;
            let z = m.encode_tangent(&p, &v).unwrap();
            assert!((m.decode_tangent(&p, z).unwrap() - v).norm() < 1e-9 * v.norm());
        }
        // Vertex point: vectors inside an incident corner.
        let cube = primitives::cube(2.0);
        let p = SurfacePoint::vertex(3);
        for &h in cube.fan(3) {
            let d = cube.halfedge_direction(h) * Complex64::from_polar(2.0, 0.4 * cube.corner_angle(h));
            let (x, y) = cube.face_frame(h / 3);
            let v = x * d.re + y * d.im;
            let z = cube.encode_tangent(&p, &v).unwrap();
            assert!((cube.decode_tangent(&p, z).unwrap() - v).norm() < 1e-9 * v.norm());
        }
    }

    #[test]
    fn local_face_round_trip_at_vertex() {
        let m = primitives::cube(1.0);
        let p = SurfacePoint::vertex(5);
        for k in 0..32 {
            let z = Complex64::from_polar(1.0, k as f64 * TAU / 32.0 + 0.01);
            let (f, d) = m.local_to_face_direction(&p, z).unwrap();
            let back = m.face_direction_to_local(&p, f, d);
            assert!((back - z).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_vertex_rejects_outward_directions() {
        let m = primitives::unit_square();
        let p = SurfacePoint::vertex(0);
        assert!(m.local_to_face_direction(&p, Complex64::from_polar(1.0, 0.5 * PI)).is_some());
        assert!(m.local_to_face_direction(&p, Complex64::from_polar(1.0, 1.5 * PI)).is_none());
    }
}
