//! Straightest geodesics: walk a ray across unfolded faces. Through a vertex
//! the ray leaves so that the rescaled angle on either side is equal.

use num_complex::Complex64;

use super::{c2, cross, unit, v2, GeodesicPath};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint, VERTEX_SNAP};

/// Traces a straightest geodesic from `p` along `arg(z)` (in the tangent
/// basis of `p`) for a distance `|z|`.
///
/// Leaving the surface through a boundary yields [`Error::Truncated`]
/// carrying the partial path.
pub fn trace_geodesic(mesh: &Mesh, p: &SurfacePoint, z: Complex64) -> Result<GeodesicPath> {
    let p = mesh.validate_point(p)?;
    mesh.require_manifold(&p)?;
    let requested = z.norm();
    if !requested.is_finite() {
        return Err(Error::NonFinite);
    }
    if requested == 0.0 {
        return Ok(GeodesicPath::degenerate(p));
    }
    let initial = z / requested;
    let Some((face, dir)) = mesh.local_to_face_direction(&p, initial) else {
        return Err(Error::Truncated {
            traveled: 0.0,
            requested,
            partial: Box::new(GeodesicPath::degenerate(p)),
        });
    };
    let mut tracer = Tracer {
        mesh,
        points: vec![p],
        lengths: Vec::new(),
        face,
        dir: unit(dir),
        pos: c2(mesh.chart_position(face, &p).expect("start touches face")),
        skip: skip_for(mesh, face, &p),
    };
    tracer.run(requested, initial)
}

struct Tracer<'m> {
    mesh: &'m Mesh,
    points: Vec<SurfacePoint>,
    lengths: Vec<f64>,
    face: usize,
    dir: Complex64,
    pos: Complex64,
    /// Local edges of `face` the walk must not exit through.
    skip: [bool; 3],
}

/// Edges of `f` that contain the point `p` (the walk starts on them).
fn skip_for(mesh: &Mesh, f: usize, p: &SurfacePoint) -> [bool; 3] {
    let mut skip = [false; 3];
    match *p {
        SurfacePoint::Vertex { index } => {
            let c = mesh.corner_of(f, index).unwrap();
            skip[c] = true;
            skip[(c + 2) % 3] = true;
        }
        SurfacePoint::Edge { index, .. } => {
            for (k, s) in skip.iter_mut().enumerate() {
                *s = mesh.edge_of(3 * f + k) == index;
            }
        }
        SurfacePoint::Face { .. } => {}
    }
    skip
}

impl Tracer<'_> {
    fn run(&mut self, requested: f64, initial: Complex64) -> Result<GeodesicPath> {
        let mesh = self.mesh;
        let mut remaining = requested;
        let limit = 16 * mesh.num_faces() + 64;
        for _ in 0..limit {
            let layout = mesh.layout(self.face).map(c2);
            // Exit edge: smallest ray parameter among admissible edges.
            let mut exit: Option<(usize, f64, f64)> = None;
            let mut fallback: Option<(usize, f64, f64, f64)> = None;
            for k in 0..3 {
                if self.skip[k] {
                    continue;
                }
                let a = layout[k];
                let e = layout[(k + 1) % 3] - a;
                let denom = cross(self.dir, e);
                if denom.abs() < 1e-300 {
                    continue;
                }
                let s = cross(a - self.pos, e) / denom;
                let u = cross(a - self.pos, self.dir) / denom;
                let violation = (-u).max(u - 1.0).max(0.0) + (-s).max(0.0);
                if violation <= 1e-9 {
                    if exit.is_none_or(|(_, s0, _)| s < s0) {
                        exit = Some((k, s.max(0.0), u.clamp(0.0, 1.0)));
                    }
                } else if fallback.is_none_or(|(_, _, _, v)| violation < v) {
                    fallback = Some((k, s.max(0.0), u.clamp(0.0, 1.0), violation));
                }
            }
            let (k, s, u) = match (exit, fallback) {
                (Some(x), _) => x,
                (None, Some((k, s, u, _))) => (k, s, u),
                (None, None) => unreachable!("a ray inside a triangle must exit"),
            };

            if remaining <= s {
                let end_chart = self.pos + self.dir * remaining;
                let end = mesh.point_at_chart(self.face, v2(end_chart));
                self.push(end, remaining);
                return Ok(self.finish(initial));
            }

            let h = 3 * self.face + k;
            remaining -= s;
            let crossing = mesh.point_on_halfedge(h, u);
            self.push(crossing, s);
            let traveled = requested - remaining;

            if let SurfacePoint::Vertex { index } = crossing {
                if mesh.is_boundary_vertex(index) || mesh.is_nonmanifold_vertex(index) {
                    return Err(self.truncated(traveled, requested, initial));
                }
                let back = mesh.face_direction_to_local(&crossing, self.face, -self.dir);
                let Some((f, d)) = mesh.local_to_face_direction(&crossing, -back) else {
                    return Err(self.truncated(traveled, requested, initial));
                };
                self.face = f;
                self.dir = unit(d);
                self.pos = c2(mesh.chart_position(f, &crossing).unwrap());
                self.skip = skip_for(mesh, f, &crossing);
                continue;
            }

            let Some(twin) = mesh.twin(h) else {
                return Err(self.truncated(traveled, requested, initial));
            };
            self.dir = unit(self.dir * mesh.chart_transition(h).unwrap());
            self.face = twin / 3;
            let tl = mesh.layout(self.face).map(c2);
            let (o, t) = (tl[twin % 3], tl[(twin % 3 + 1) % 3]);
            self.pos = o + (t - o) * (1.0 - u);
            self.skip = [false; 3];
            self.skip[twin % 3] = true;
        }
        Err(self.truncated(requested - remaining, requested, initial))
    }

    fn push(&mut self, p: SurfacePoint, len: f64) {
        if len <= VERTEX_SNAP * 1e-3 * self.mesh.length_scale() && self.points.last() == Some(&p) {
            if let Some(l) = self.lengths.last_mut() {
                *l += len;
            }
            return;
        }
        self.points.push(p);
        self.lengths.push(len);
    }

    fn ending(&self) -> Complex64 {
        let end = *self.points.last().unwrap();
        match end {
            SurfacePoint::Vertex { .. } => {
                -unit(self.mesh.face_direction_to_local(&end, self.face, -self.dir))
            }
            _ => unit(self.mesh.face_direction_to_local(&end, self.face, self.dir)),
        }
    }

    fn finish(&mut self, initial: Complex64) -> GeodesicPath {
        let ending = self.ending();
        GeodesicPath::from_trace(
            std::mem::take(&mut self.points),
            std::mem::take(&mut self.lengths),
            initial,
            ending,
        )
    }

    fn truncated(&mut self, traveled: f64, requested: f64, initial: Complex64) -> Error {
        let partial = if self.points.len() > 1 {
            self.finish(initial)
        } else {
            GeodesicPath::degenerate(self.points[0])
        };
        Error::Truncated {
            traveled,
            requested,
            partial: Box::new(partial),
        }
    }
}
