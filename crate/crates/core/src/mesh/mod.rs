//! Halfedge triangle meshes with intrinsic face charts.
//!
//! Halfedges are implicit: halfedge `3 * f + k` runs from corner `k` to
//! corner `k + 1` of face `f`, with the face on its left. Boundary edges
//! simply have no twin.

mod closest;
mod obj;
pub mod primitives;
mod surface_point;
mod tangent;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use obj::{load_obj, parse_obj};
pub use surface_point::SurfacePoint;
pub use tangent::{BasisKind, TangentBasis};

/// Relative barycentric distance under which points are snapped to a vertex.
pub(crate) const VERTEX_SNAP: f64 = 1e-9;
/// Relative barycentric distance under which face points are snapped to an edge.
pub(crate) const EDGE_SNAP: f64 = 1e-12;
/// Tolerance used when validating barycentric coordinates.
pub const BARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Canonical halfedge: the lower-indexed of the pair.
    pub halfedge: usize,
    pub twin: Option<usize>,
}

/// Immutable triangle mesh with halfedge connectivity.
#[derive(Debug, Clone)]
pub struct Mesh {
    positions: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    twins: Vec<Option<usize>>,
    edge_of: Vec<usize>,
    edges: Vec<Edge>,
    lengths: Vec<f64>,
    /// Interior angle at the origin of each halfedge.
    corner_angles: Vec<f64>,
    /// Face chart coordinates of the three corners.
    layouts: Vec<[Vector2<f64>; 3]>,
    /// Outgoing halfedges in counterclockwise order.
    fans: Vec<Vec<usize>>,
    /// Scaled polar angle of each fan halfedge in the vertex basis.
    fan_angles: Vec<Vec<f64>>,
    angle_sums: Vec<f64>,
    boundary: Vec<bool>,
    nonmanifold: Vec<bool>,
    warnings: Vec<String>,
    scale: f64,
}

impl Mesh {
    /// Builds a mesh from positions and counterclockwise triangles.
    pub fn from_triangles(positions: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = positions.len();
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::VertexOutOfRange {
                        face: f,
                        vertex: v,
                        count: nv,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(Error::DegenerateFace {
                    face: f,
                    reason: "repeated vertex".into(),
                });
            }
            let [a, b, c] = tri.map(|v| positions[v]);
            let e0 = b - a;
            let e1 = c - a;
            let double_area = e0.cross(&e1).norm();
            let longest = e0.norm().max(e1.norm()).max((c - b).norm());
            if !(double_area > 1e-12 * longest * longest) {
                return Err(Error::DegenerateFace {
                    face: f,
                    reason: "zero area".into(),
                });
            }
        }

        let nh = faces.len() * 3;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        let mut undirected: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(nh);
        for h in 0..nh {
            let (a, b) = (faces[h / 3][h % 3], faces[h / 3][(h % 3 + 1) % 3]);
            if directed.insert((a, b), h).is_some() {
                return Err(Error::NonManifoldEdge {
                    a: a.min(b),
                    b: a.max(b),
                    reason: "two faces traverse the edge in the same direction".into(),
                });
            }
            undirected.entry((a.min(b), a.max(b))).or_default().push(h);
        }
        let mut twins = vec![None; nh];
        let mut edge_of = vec![usize::MAX; nh];
        let mut edges = Vec::with_capacity(undirected.len());
        let mut keys: Vec<_> = undirected.keys().copied().collect();
        keys.sort_unstable();
        // Edges are numbered by their canonical halfedge for determinism.
        let mut canonical: Vec<(usize, (usize, usize))> = Vec::with_capacity(keys.len());
        for key in keys {
            let hs = &undirected[&key];
            if hs.len() > 2 {
                return Err(Error::NonManifoldEdge {
                    a: key.0,
                    b: key.1,
                    reason: format!("shared by {} faces", hs.len()),
                });
            }
            canonical.push((*hs.iter().min().unwrap(), key));
        }
        canonical.sort_unstable();
        for (h, key) in canonical {
            let hs = &undirected[&key];
            let twin = hs.iter().copied().find(|&g| g != h);
            let e = edges.len();
            edges.push(Edge { halfedge: h, twin });
            edge_of[h] = e;
            if let Some(t) = twin {
                edge_of[t] = e;
                twins[h] = Some(t);
                twins[t] = Some(h);
            }
        }

        let mut lengths = vec![0.0; nh];
        for h in 0..nh {
            let (a, b) = (faces[h / 3][h % 3], faces[h / 3][(h % 3 + 1) % 3]);
            lengths[h] = (positions[b] - positions[a]).norm();
        }
        let mut layouts = Vec::with_capacity(faces.len());
        let mut corner_angles = vec![0.0; nh];
        for f in 0..faces.len() {
            let l01 = lengths[3 * f];
            let l12 = lengths[3 * f + 1];
            let l20 = lengths[3 * f + 2];
            let x = (l01 * l01 + l20 * l20 - l12 * l12) / (2.0 * l01);
            let y = (l20 * l20 - x * x).max(0.0).sqrt();
            let layout = [Vector2::zeros(), Vector2::new(l01, 0.0), Vector2::new(x, y)];
            for k in 0..3 {
                let o = layout[k];
                let u = layout[(k + 1) % 3] - o;
                let w = layout[(k + 2) % 3] - o;
                corner_angles[3 * f + k] = u.perp(&w).atan2(u.dot(&w));
            }
            layouts.push(layout);
        }

        let mut out: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for h in 0..nh {
            out[faces[h / 3][h % 3]].push(h);
        }
        let mut fans = Vec::with_capacity(nv);
        let mut fan_angles = Vec::with_capacity(nv);
        let mut angle_sums = vec![0.0; nv];
        let mut boundary = vec![false; nv];
        let mut nonmanifold = vec![false; nv];
        let mut warnings = Vec::new();
        for v in 0..nv {
            let outgoing = &out[v];
            if outgoing.is_empty() {
                fans.push(Vec::new());
                fan_angles.push(Vec::new());
                continue;
            }
            let start = outgoing
                .iter()
                .copied()
                .find(|&h| twins[h].is_none())
                .unwrap_or_else(|| *outgoing.iter().min().unwrap());
            let is_boundary = twins[start].is_none();
            let mut fan = vec![start];
            let mut h = start;
            loop {
                let prev = prev_halfedge(h);
                match twins[prev] {
                    Some(next) if next != start => {
                        if fan.len() > outgoing.len() {
                            break;
                        }
                        fan.push(next);
                        h = next;
                    }
                    _ => break,
                }
            }
            let sum: f64 = fan.iter().map(|&h| corner_angles[h]).sum();
            if fan.len() != outgoing.len() {
                nonmanifold[v] = true;
                warnings.push(format!(
                    "vertex {v} is nonmanifold: one fan reaches {} of {} incident faces",
                    fan.len(),
                    outgoing.len()
                ));
            }
            let full = if is_boundary { PI } else { TAU };
            let s = full / sum;
            let mut acc = 0.0;
            let mut angles = Vec::with_capacity(fan.len());
            for &h in &fan {
                angles.push(acc * s);
                acc += corner_angles[h];
            }
            angle_sums[v] = sum;
            boundary[v] = is_boundary;
            fans.push(fan);
            fan_angles.push(angles);
        }

        let mean_len = if nh > 0 {
            lengths.iter().sum::<f64>() / nh as f64
        } else {
            1.0
        };

        Ok(Mesh {
            positions,
            faces,
            twins,
            edge_of,
            edges,
            lengths,
            corner_angles,
            layouts,
            fans,
            fan_angles,
            angle_sums,
            boundary,
            nonmanifold,
            warnings,
            scale: mean_len,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_halfedges(&self) -> usize {
        self.faces.len() * 3
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global manifoldness problems that did not prevent construction.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Mean edge length, used to scale numerical tolerances.
    pub fn length_scale(&self) -> f64 {
        self.scale
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    // --- halfedge navigation -------------------------------------------

    pub fn face_of(&self, h: usize) -> usize {
        h / 3
    }

    pub fn next(&self, h: usize) -> usize {
        next_halfedge(h)
    }

    pub fn prev(&self, h: usize) -> usize {
        prev_halfedge(h)
    }

    pub fn twin(&self, h: usize) -> Option<usize> {
        self.twins[h]
    }

    pub fn origin(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    pub fn tip(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }

    pub fn edge_of(&self, h: usize) -> usize {
        self.edge_of[h]
    }

    pub fn halfedge_length(&self, h: usize) -> f64 {
        self.lengths[h]
    }

    /// Interior angle of face `face_of(h)` at the origin of `h`.
    pub fn corner_angle(&self, h: usize) -> f64 {
        self.corner_angles[h]
    }

    /// Face chart coordinates of the corners of `f`.
    pub fn layout(&self, f: usize) -> &[Vector2<f64>; 3] {
        &self.layouts[f]
    }

    /// Unit direction of halfedge `h` in the chart of its face.
    pub fn halfedge_direction(&self, h: usize) -> Complex64 {
        let l = &self.layouts[h / 3];
        let d = l[(h % 3 + 1) % 3] - l[h % 3];
        Complex64::new(d.x, d.y) / d.norm()
    }

    /// Outgoing halfedges around `v`, counterclockwise from the reference.
    pub fn fan(&self, v: usize) -> &[usize] {
        &self.fans[v]
    }

    pub fn angle_sum(&self, v: usize) -> f64 {
        self.angle_sums[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn is_nonmanifold_vertex(&self, v: usize) -> bool {
        self.nonmanifold[v]
    }

    /// Factor mapping corner angles at `v` to the vertex basis.
    pub fn angle_scale(&self, v: usize) -> f64 {
        let full = if self.boundary[v] { PI } else { TAU };
        full / self.angle_sums[v]
    }

    pub(crate) fn fan_angles(&self, v: usize) -> &[f64] {
        &self.fan_angles[v]
    }

    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f].map(|v| self.positions[v]);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Local corner index of vertex `v` in face `f`.
    pub fn corner_of(&self, f: usize, v: usize) -> Option<usize> {
        self.faces[f].iter().position(|&w| w == v)
    }

    /// Faces incident to a surface point.
    pub fn faces_around(&self, p: &SurfacePoint) -> Vec<usize> {
        match *p {
            SurfacePoint::Vertex { index } => self.fans[index].iter().map(|&h| h / 3).collect(),
            SurfacePoint::Edge { index, .. } => {
                let e = self.edges[index];
                let mut fs = vec![e.halfedge / 3];
                if let Some(t) = e.twin {
                    fs.push(t / 3);
                }
                fs
            }
            SurfacePoint::Face { index, .. } => vec![index],
        }
    }

    /// Barycentric coordinates of `p` with respect to face `f`, if `p` lies
    /// on its closure.
    pub fn face_barycentric(&self, f: usize, p: &SurfacePoint) -> Option<[f64; 3]> {
        match *p {
            SurfacePoint::Face { index, bary } => (index == f).then_some(bary),
            SurfacePoint::Vertex { index } => {
                let k = self.corner_of(f, index)?;
                let mut b = [0.0; 3];
                b[k] = 1.0;
                Some(b)
            }
            SurfacePoint::Edge { index, bary } => {
                let e = self.edges[index];
                let h = if e.halfedge / 3 == f {
                    e.halfedge
                } else if e.twin.map(|t| t / 3) == Some(f) {
                    e.twin.unwrap()
                } else {
                    return None;
                };
                // Coordinates are stored relative to the canonical halfedge.
                let (wo, wt) = if h == e.halfedge {
                    (bary[0], bary[1])
                } else {
                    (bary[1], bary[0])
                };
                let mut b = [0.0; 3];
                b[h % 3] = wo;
                b[(h % 3 + 1) % 3] = wt;
                Some(b)
            }
        }
    }

    /// Position of `p` in the chart of face `f`.
    pub fn chart_position(&self, f: usize, p: &SurfacePoint) -> Option<Vector2<f64>> {
        let b = self.face_barycentric(f, p)?;
        let l = &self.layouts[f];
        Some(l[0] * b[0] + l[1] * b[1] + l[2] * b[2])
    }

    /// A face containing both points, preferring the lowest index.
    pub fn common_face(&self, p: &SurfacePoint, q: &SurfacePoint) -> Option<usize> {
        let fq = self.faces_around(q);
        let mut fp = self.faces_around(p);
        fp.sort_unstable();
        fp.into_iter().find(|f| fq.contains(f))
    }

    /// Checks element ranges and barycentric validity, clamping coordinates
    /// that are within tolerance of the simplex.
    pub fn validate_point(&self, p: &SurfacePoint) -> Result<SurfacePoint> {
        match *p {
            SurfacePoint::Vertex { index } => {
                self.check_range("vertex", index, self.num_vertices())?;
                Ok(*p)
            }
            SurfacePoint::Edge { index, bary } => {
                self.check_range("edge", index, self.num_edges())?;
                let b = clamp_bary(&bary)?;
                Ok(SurfacePoint::Edge {
                    index,
                    bary: [b[0], b[1]],
                })
            }
            SurfacePoint::Face { index, bary } => {
                self.check_range("face", index, self.num_faces())?;
                let b = clamp_bary(&bary)?;
                Ok(SurfacePoint::Face {
                    index,
                    bary: [b[0], b[1], b[2]],
                })
            }
        }
    }

    fn check_range(&self, kind: &'static str, index: usize, count: usize) -> Result<()> {
        if index >= count {
            return Err(Error::ElementOutOfRange { kind, index, count });
        }
        Ok(())
    }

    /// Barycentric interpolation of vertex positions.
    pub fn position_of(&self, p: &SurfacePoint) -> Result<Point3<f64>> {
        let p = self.validate_point(p)?;
        Ok(self.position_unchecked(&p))
    }

    pub(crate) fn position_unchecked(&self, p: &SurfacePoint) -> Point3<f64> {
        match *p {
            SurfacePoint::Vertex { index } => self.positions[index],
            SurfacePoint::Edge { index, bary } => {
                let h = self.edges[index].halfedge;
                let a = self.positions[self.origin(h)].coords;
                let b = self.positions[self.tip(h)].coords;
                Point3::from(a * bary[0] + b * bary[1])
            }
            SurfacePoint::Face { index, bary } => {
                let [a, b, c] = self.faces[index].map(|v| self.positions[v].coords);
                Point3::from(a * bary[0] + b * bary[1] + c * bary[2])
            }
        }
    }

    /// Vertices and weights whose combination gives the position of `p`.
    pub fn vertex_weights(&self, p: &SurfacePoint) -> Vec<(usize, f64)> {
        match *p {
            SurfacePoint::Vertex { index } => vec![(index, 1.0)],
            SurfacePoint::Edge { index, bary } => {
                let h = self.edges[index].halfedge;
                vec![(self.origin(h), bary[0]), (self.tip(h), bary[1])]
            }
            SurfacePoint::Face { index, bary } => {
                let f = self.faces[index];
                vec![(f[0], bary[0]), (f[1], bary[1]), (f[2], bary[2])]
            }
        }
    }

    /// Unit normal at `p`. On edges and vertices the incident face normals
    /// are averaged with area weights.
    pub fn normal_at(&self, p: &SurfacePoint) -> Result<Vector3<f64>> {
        let p = self.validate_point(p)?;
        let n = self
            .faces_around(&p)
            .into_iter()
            .map(|f| {
                let [a, b, c] = self.faces[f].map(|v| self.positions[v]);
                (b - a).cross(&(c - a))
            })
            .fold(Vector3::zeros(), |acc, n| acc + n);
        Ok(n.normalize())
    }

    /// Surface point at barycentric coordinates `b` of face `f`, snapped to
    /// an edge or vertex when it lies (numerically) on one.
    pub fn point_in_face(&self, f: usize, b: [f64; 3]) -> SurfacePoint {
        let mut b = b.map(|x| x.max(0.0));
        let s: f64 = b.iter().sum();
        for x in &mut b {
            *x /= s;
        }
        if let Some(k) = (0..3).find(|&k| b[k] >= 1.0 - VERTEX_SNAP) {
            return SurfacePoint::Vertex {
                index: self.faces[f][k],
            };
        }
        if let Some(k) = (0..3).find(|&k| b[k] <= EDGE_SNAP) {
            // Opposite corner k: the edge runs from corner k+1 to k+2.
            let h = 3 * f + (k + 1) % 3;
            let (wo, wt) = (b[(k + 1) % 3], b[(k + 2) % 3]);
            return self.point_on_halfedge(h, wt / (wo + wt));
        }
        SurfacePoint::Face { index: f, bary: b }
    }

    /// Point at fraction `t` along halfedge `h`, snapped to its endpoints.
    pub fn point_on_halfedge(&self, h: usize, t: f64) -> SurfacePoint {
        let t = t.clamp(0.0, 1.0);
        if t <= VERTEX_SNAP {
            return SurfacePoint::Vertex {
                index: self.origin(h),
            };
        }
        if t >= 1.0 - VERTEX_SNAP {
            return SurfacePoint::Vertex {
                index: self.tip(h),
            };
        }
        let e = self.edge_of[h];
        let bary = if self.edges[e].halfedge == h {
            [1.0 - t, t]
        } else {
            [t, 1.0 - t]
        };
        SurfacePoint::Edge { index: e, bary }
    }

    /// Surface point at chart position `x` of face `f`.
    pub fn point_at_chart(&self, f: usize, x: Vector2<f64>) -> SurfacePoint {
        self.point_in_face(f, self.chart_barycentric(f, x))
    }

    pub(crate) fn chart_barycentric(&self, f: usize, x: Vector2<f64>) -> [f64; 3] {
        let [a, b, c] = self.layouts[f];
        let area = (b - a).perp(&(c - a));
        let wa = (b - x).perp(&(c - x)) / area;
        let wb = (c - x).perp(&(a - x)) / area;
        [wa, wb, 1.0 - wa - wb]
    }

    /// Rotation taking directions in the chart of `face_of(h)` to the chart
    /// of `face_of(twin(h))`, across the shared edge.
    pub(crate) fn chart_transition(&self, h: usize) -> Option<Complex64> {
        let t = self.twins[h]?;
        Some(-self.halfedge_direction(t) / self.halfedge_direction(h))
    }
}

pub(crate) fn next_halfedge(h: usize) -> usize {
    3 * (h / 3) + (h % 3 + 1) % 3
}

pub(crate) fn prev_halfedge(h: usize) -> usize {
    3 * (h / 3) + (h % 3 + 2) % 3
}

fn clamp_bary(b: &[f64]) -> Result<Vec<f64>> {
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidBarycentric(format!("{b:?} is not finite")));
    }
    let sum: f64 = b.iter().sum();
    if (sum - 1.0).abs() > BARY_TOLERANCE {
        return Err(Error::InvalidBarycentric(format!(
            "{b:?} sums to {sum}, not 1"
        )));
    }
    if b.iter().any(|&x| x < -BARY_TOLERANCE || x > 1.0 + BARY_TOLERANCE) {
        return Err(Error::InvalidBarycentric(format!("{b:?} outside [0, 1]")));
    }
    let mut out: Vec<f64> = b.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let s: f64 = out.iter().sum();
    for x in &mut out {
        *x /= s;
    }
    Ok(out)
}
