//! Exact polyhedral distances by window propagation.
//!
//! A window is an interval of a halfedge through which a family of straight
//! rays, emanating from a (pseudo-)source unfolded into the plane of that
//! edge, enters the face on the left of the halfedge. Windows are processed
//! in order of their minimum distance. Saddle vertices (angle sum above 2π)
//! and reflex boundary vertices become pseudo-sources of their own, since
//! shortest paths may bend around them.
//!
//! A window is discarded when one of the endpoints of its edge reaches the
//! far end of the window more cheaply than the window does: every ray
//! through it is then beaten by the path through that vertex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::{c2, unit, GeodesicPath};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint};

/// Distance from the nearest source to a target, and that source's index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reached {
    pub distance: f64,
    pub source: usize,
}

/// Multi-source geodesic distance queries with early termination.
pub struct DistanceQuery<'m> {
    mesh: &'m Mesh,
    sources: Vec<SurfacePoint>,
}

impl<'m> DistanceQuery<'m> {
    pub fn new(mesh: &'m Mesh, sources: &[SurfacePoint]) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let sources = sources
            .iter()
            .map(|s| {
                let s = mesh.validate_point(s)?;
                mesh.require_manifold(&s)?;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceQuery { mesh, sources })
    }

    /// Distance from each target to its nearest source. Equidistant sources
    /// resolve to the lowest index.
    pub fn query(&self, targets: &[SurfacePoint]) -> Result<Vec<Reached>> {
        let prop = self.propagate(targets)?;
        Ok(prop
            .best
            .iter()
            .map(|b| Reached {
                distance: b.distance,
                source: b.label,
            })
            .collect())
    }

    /// Shortest path from the nearest source to `target`.
    pub fn path_to(&self, target: &SurfacePoint) -> Result<GeodesicPath> {
        let prop = self.propagate(std::slice::from_ref(target))?;
        prop.backtrace(&prop.best[0], prop.targets[0])
    }

    /// Shortest paths from the nearest source to each target, computed in
    /// a single propagation.
    pub fn paths_to(&self, targets: &[SurfacePoint]) -> Result<Vec<GeodesicPath>> {
        let prop = self.propagate(targets)?;
        prop.best
            .iter()
            .zip(&prop.targets)
            .map(|(b, t)| prop.backtrace(b, *t))
            .collect()
    }

    fn propagate(&self, targets: &[SurfacePoint]) -> Result<Propagation<'m>> {
        let targets = targets
            .iter()
            .map(|t| {
                let t = self.mesh.validate_point(t)?;
                self.mesh.require_manifold(&t)?;
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut prop = Propagation::new(self.mesh, self.sources.clone(), targets);
        prop.run();
        if prop.best.iter().any(|b| !b.distance.is_finite()) {
            return Err(Error::Disconnected);
        }
        Ok(prop)
    }
}

/// Globally shortest path from `p` to `q`.
pub fn exact_geodesic(mesh: &Mesh, p: &SurfacePoint, q: &SurfacePoint) -> Result<GeodesicPath> {
    let p = mesh.validate_point(p)?;
    let q = mesh.validate_point(q)?;
    mesh.require_manifold(&p)?;
    mesh.require_manifold(&q)?;
    // Points sharing a face: the mesh is flat there, and a segment inside a
    // convex region cannot be beaten.
    if mesh.common_face(&p, &q).is_some() {
        return GeodesicPath::from_points(mesh, vec![p, q]);
    }
    DistanceQuery::new(mesh, &[p])?.path_to(&q)
}

/// Geodesic distances from `source` to each target.
pub fn geodesic_distances(
    mesh: &Mesh,
    source: &SurfacePoint,
    targets: &[SurfacePoint],
) -> Result<Vec<f64>> {
    let q = DistanceQuery::new(mesh, std::slice::from_ref(source))?;
    Ok(q.query(targets)?.into_iter().map(|r| r.distance).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Parent {
    Root(usize),
    Window(usize),
    Vertex(usize),
}

#[derive(Debug, Clone)]
struct Window {
    halfedge: usize,
    b0: f64,
    b1: f64,
    /// Pseudo-source in the halfedge frame: origin at 0, tip on +x, the
    /// face being entered on +y.
    source: Complex64,
    sigma: f64,
    label: usize,
    parent: Parent,
}

impl Window {
    fn min_distance(&self) -> f64 {
        let s = self.source;
        let x = s.re.clamp(self.b0, self.b1);
        self.sigma + (s - Complex64::new(x, 0.0)).norm()
    }

    fn distance_at(&self, x: f64) -> f64 {
        self.sigma + (self.source - Complex64::new(x, 0.0)).norm()
    }

    /// Where the ray from the pseudo-source through `p` (halfedge frame,
    /// `p.im >= 0`) crosses the edge.
    fn intercept(&self, p: Complex64) -> f64 {
        let s = self.source;
        s.re + (p.re - s.re) * (-s.im) / (p.im - s.im)
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    distance: f64,
    label: usize,
    via: Parent,
}

const UNREACHED: Best = Best {
    distance: f64::INFINITY,
    label: usize::MAX,
    via: Parent::Root(usize::MAX),
};

#[derive(Debug, Clone, Copy)]
enum Event {
    Window(usize),
    Vertex(usize),
}

struct Entry {
    key: f64,
    seq: usize,
    event: Event,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed so that the max-heap pops the smallest key first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Propagation<'m> {
    mesh: &'m Mesh,
    sources: Vec<SurfacePoint>,
    targets: Vec<SurfacePoint>,
    windows: Vec<Window>,
    vertex: Vec<Best>,
    best: Vec<Best>,
    /// Targets touching each face, with their chart position there.
    watch: Vec<Vec<(usize, Complex64)>>,
    heap: BinaryHeap<Entry>,
    seq: usize,
    tol: f64,
}

impl<'m> Propagation<'m> {
    fn new(mesh: &'m Mesh, sources: Vec<SurfacePoint>, targets: Vec<SurfacePoint>) -> Self {
        let mut watch = vec![Vec::new(); mesh.num_faces()];
        for (i, t) in targets.iter().enumerate() {
            for f in mesh.faces_around(t) {
                watch[f].push((i, c2(mesh.chart_position(f, t).unwrap())));
            }
        }
        Propagation {
            mesh,
            sources,
            best: vec![UNREACHED; targets.len()],
            targets,
            windows: Vec::new(),
            vertex: vec![UNREACHED; mesh.num_vertices()],
            watch,
            heap: BinaryHeap::new(),
            seq: 0,
            tol: 1e-10 * mesh.length_scale(),
        }
    }

    fn push(&mut self, key: f64, event: Event) {
        self.seq += 1;
        self.heap.push(Entry {
            key,
            seq: self.seq,
            event,
        });
    }

    fn offer_target(&mut self, i: usize, distance: f64, label: usize, via: Parent) {
        let b = &mut self.best[i];
        let better = distance < b.distance - self.tol
            || ((distance - b.distance).abs() <= self.tol && label < b.label)
            || (b.label == label && distance < b.distance);
        if better {
            *b = Best {
                distance,
                label,
                via,
            };
        }
    }

    fn offer_vertex(&mut self, v: usize, distance: f64, label: usize, via: Parent) {
        let b = self.vertex[v];
        let better = distance < b.distance - self.tol
            || ((distance - b.distance).abs() <= self.tol && label < b.label)
            || (b.label == label && distance < b.distance);
        if !better {
            return;
        }
        self.vertex[v] = Best {
            distance,
            label,
            via,
        };
        let mesh = self.mesh;
        for &h in mesh.fan(v) {
            let f = h / 3;
            let pv = c2(mesh.layout(f)[h % 3]);
            for k in 0..self.watch[f].len() {
                let (i, q) = self.watch[f][k];
                self.offer_target(i, distance + (q - pv).norm(), label, Parent::Vertex(v));
            }
        }
        if self.is_pseudo_source(v) {
            self.push(distance, Event::Vertex(v));
        }
    }

    fn is_pseudo_source(&self, v: usize) -> bool {
        let m = self.mesh;
        if m.is_nonmanifold_vertex(v) || m.fan(v).is_empty() {
            return false;
        }
        let limit = if m.is_boundary_vertex(v) { PI } else { TAU };
        m.angle_sum(v) > limit + 1e-9
    }

    /// Halfedge frame: origin(h) at 0, tip(h) on the +x axis.
    fn frame(&self, h: usize) -> (Complex64, Complex64) {
        let o = c2(self.mesh.layout(h / 3)[h % 3]);
        (o, self.mesh.halfedge_direction(h))
    }

    fn to_frame(&self, h: usize, x: Complex64) -> Complex64 {
        let (o, d) = self.frame(h);
        (x - o) / d
    }

    fn add_window(&mut self, w: Window) {
        let len = self.mesh.halfedge_length(w.halfedge);
        if !(w.b1 - w.b0 > 1e-12 * len) || self.dominated(&w) {
            return;
        }
        let id = self.windows.len();
        let key = w.min_distance();
        let f = w.halfedge / 3;
        for k in 0..self.watch[f].len() {
            let (i, q) = self.watch[f][k];
            let q = self.to_frame(w.halfedge, q);
            let x = w.intercept(q);
            let slack = 1e-9 * len;
            if x >= w.b0 - slack && x <= w.b1 + slack {
                self.offer_target(i, w.sigma + (q - w.source).norm(), w.label, Parent::Window(id));
            }
        }
        self.windows.push(w);
        self.push(key, Event::Window(id));
    }

    /// True when an endpoint vertex of the window's edge reaches the far end
    /// of the window more cheaply than the window itself.
    fn dominated(&self, w: &Window) -> bool {
        let h = w.halfedge;
        let len = self.mesh.halfedge_length(h);
        let da = self.vertex[self.mesh.origin(h)].distance;
        let db = self.vertex[self.mesh.tip(h)].distance;
        da + w.b1 < w.distance_at(w.b1) - self.tol || db + (len - w.b0) < w.distance_at(w.b0) - self.tol
    }

    fn run(&mut self) {
        if self.targets.is_empty() {
            return;
        }
        self.seed();
        while let Some(entry) = self.heap.pop() {
            let bound = self.best.iter().map(|b| b.distance).fold(0.0, f64::max);
            if entry.key > bound + self.tol {
                break;
            }
            match entry.event {
                Event::Window(id) => {
                    if !self.dominated(&self.windows[id]) {
                        self.propagate_window(id);
                    }
                }
                Event::Vertex(v) => {
                    if self.vertex[v].distance == entry.key {
                        self.expand_vertex(v);
                    }
                }
            }
        }
    }

    fn seed(&mut self) {
        let mesh = self.mesh;
        for label in 0..self.sources.len() {
            let s = self.sources[label];
            // Targets sharing a face with the source see it directly.
            for f in mesh.faces_around(&s) {
                let ps = c2(mesh.chart_position(f, &s).unwrap());
                for k in 0..self.watch[f].len() {
                    let (i, q) = self.watch[f][k];
                    self.offer_target(i, (q - ps).norm(), label, Parent::Root(label));
                }
            }
            match s {
                SurfacePoint::Vertex { index } => {
                    self.vertex[index] = Best {
                        distance: 0.0,
                        label,
                        via: Parent::Root(label),
                    };
                    self.expand_vertex(index);
                }
                _ => {
                    let skip = match s {
                        SurfacePoint::Edge { index, .. } => Some(index),
                        _ => None,
                    };
                    for f in mesh.faces_around(&s) {
                        let ps = c2(mesh.chart_position(f, &s).unwrap());
                        for k in 0..3 {
                            let h = 3 * f + k;
                            let pv = c2(mesh.layout(f)[k]);
                            self.offer_vertex(mesh.origin(h), (pv - ps).norm(), label, Parent::Root(label));
                            if Some(mesh.edge_of(h)) == skip {
                                continue;
                            }
                            self.window_across(h, ps, 0.0, label, Parent::Root(label));
                        }
                    }
                }
            }
        }
    }

    /// Full-edge window on the twin of `h` (a halfedge of the face holding
    /// the source point `ps`, given in that face's chart).
    fn window_across(&mut self, h: usize, ps: Complex64, sigma: f64, label: usize, parent: Parent) {
        let Some(g) = self.mesh.twin(h) else {
            return;
        };
        let f = h / 3;
        let l = self.mesh.layout(f);
        let (p, q) = (c2(l[h % 3]), c2(l[(h % 3 + 1) % 3]));
        // The twin runs from q to p, with the neighbour face on its left.
        let source = (ps - q) / unit(p - q);
        self.add_window(Window {
            halfedge: g,
            b0: 0.0,
            b1: self.mesh.halfedge_length(g),
            source,
            sigma,
            label,
            parent,
        });
    }

    fn expand_vertex(&mut self, v: usize) {
        let mesh = self.mesh;
        let Best { distance, label, .. } = self.vertex[v];
        for &h in mesh.fan(v) {
            let f = h / 3;
            let l = mesh.layout(f);
            let pv = c2(l[h % 3]);
            for k in 0..3 {
                if k != h % 3 {
                    let u = mesh.faces()[f][k];
                    self.offer_vertex(u, distance + (c2(l[k]) - pv).norm(), label, Parent::Vertex(v));
                }
            }
            self.window_across(mesh.next(h), pv, distance, label, Parent::Vertex(v));
        }
    }

    fn propagate_window(&mut self, id: usize) {
        let mesh = self.mesh;
        let w = self.windows[id].clone();
        let h = w.halfedge;
        let len = mesh.halfedge_length(h);
        let f = h / 3;
        let c = self.to_frame(h, c2(mesh.layout(f)[(h % 3 + 2) % 3]));
        let xc = w.intercept(c);
        let slack = 1e-9 * len;
        if xc >= w.b0 - slack && xc <= w.b1 + slack {
            let vc = mesh.origin(mesh.prev(h));
            self.offer_vertex(vc, w.sigma + (c - w.source).norm(), w.label, Parent::Window(id));
        }
        let a = Complex64::new(0.0, 0.0);
        let b = Complex64::new(len, 0.0);
        // Rays left of C cross the edge C→A, rays right of it the edge B→C.
        if w.b0 < xc {
            self.child(&w, id, mesh.prev(h), c, a, w.b0, w.b1.min(xc));
        }
        if w.b1 > xc {
            self.child(&w, id, mesh.next(h), b, c, w.b0.max(xc), w.b1);
        }
    }

    /// Window on the twin of `hc` (running from `p` to `q` in the frame of
    /// `w`) covering rays of `w` through `[x0, x1]`.
    #[allow(clippy::too_many_arguments)]
    fn child(&mut self, w: &Window, id: usize, hc: usize, p: Complex64, q: Complex64, x0: f64, x1: f64) {
        let Some(g) = self.mesh.twin(hc) else {
            return;
        };
        let e = q - p;
        let hit = |x: f64| {
            let xp = Complex64::new(x, 0.0);
            let d = xp - w.source;
            let denom = super::cross(e, d);
            if denom.abs() <= 1e-14 * e.norm() * d.norm() {
                // The ray runs along the edge line, which meets the axis
                // only at one of its endpoints.
                return ((xp - p).re * e.re + (xp - p).im * e.im) / e.norm_sqr();
            }
            (super::cross(w.source - p, d) / denom).clamp(0.0, 1.0)
        };
        let (t0, t1) = (hit(x0).clamp(0.0, 1.0), hit(x1).clamp(0.0, 1.0));
        let len = self.mesh.halfedge_length(g);
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        self.add_window(Window {
            halfedge: g,
            b0: (1.0 - hi) * len,
            b1: (1.0 - lo) * len,
            source: (w.source - q) / unit(p - q),
            sigma: w.sigma,
            label: w.label,
            parent: Parent::Window(id),
        });
    }

    /// Walks back from `target` to the source along `best`, returning the
    /// path in source-to-target order.
    fn backtrace(&self, best: &Best, target: SurfacePoint) -> Result<GeodesicPath> {
        let mesh = self.mesh;
        let mut points = vec![target];
        let mut via = best.via;
        // Current position for window walks, in the frame of the window.
        let mut cursor: Option<Complex64> = match (via, target) {
            (Parent::Window(id), _) => {
                let w = &self.windows[id];
                let f = w.halfedge / 3;
                Some(self.to_frame(w.halfedge, c2(mesh.chart_position(f, &target).unwrap())))
            }
            _ => None,
        };
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > 4 * (self.windows.len() + mesh.num_vertices()) + 16 {
                return Err(Error::Disconnected);
            }
            match via {
                Parent::Root(label) => {
                    points.push(self.sources[label]);
                    break;
                }
                Parent::Vertex(v) => {
                    points.push(SurfacePoint::vertex(v));
                    let b = self.vertex[v];
                    via = b.via;
                    cursor = match via {
                        Parent::Window(id) => {
                            let w = &self.windows[id];
                            let h = w.halfedge;
                            let c = c2(mesh.layout(h / 3)[(h % 3 + 2) % 3]);
                            Some(self.to_frame(h, c))
                        }
                        _ => None,
                    };
                }
                Parent::Window(id) => {
                    let w = &self.windows[id];
                    let h = w.halfedge;
                    let len = mesh.halfedge_length(h);
                    let x = w.intercept(cursor.expect("window walk has a cursor"));
                    let x = x.clamp(w.b0, w.b1);
                    points.push(mesh.point_on_halfedge(h, x / len));
                    via = w.parent;
                    cursor = match via {
                        Parent::Window(pid) => {
                            let pw = &self.windows[pid];
                            let hc = mesh.twin(h).expect("child windows sit on interior edges");
                            let hp = pw.halfedge;
                            let f = hp / 3;
                            let l = mesh.layout(f);
                            let p = self.to_frame(hp, c2(l[hc % 3]));
                            let q = self.to_frame(hp, c2(l[(hc % 3 + 1) % 3]));
                            // Position x along h (from its origin = q) in the parent frame.
                            Some(q + (p - q) * (x / len))
                        }
                        _ => None,
                    };
                }
            }
        }
        points.reverse();
        GeodesicPath::from_points(mesh, points)
    }
}
