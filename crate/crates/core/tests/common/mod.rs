//! Fixtures and oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use contactkit::mesh::primitives;
use contactkit::pose::{ContactPair, Joint, PoseProblem, SkinBinding, Skeleton};
use contactkit::{Mesh, SurfacePoint};
use nalgebra::{Point3, UnitQuaternion, Vector2, Vector3};
use rand::Rng;

pub fn pos(m: &Mesh, p: &SurfacePoint) -> Point3<f64> {
    m.position_of(p).unwrap()
}

pub fn joint(name: &str, parent: Option<usize>, t: [f64; 3]) -> Joint {
    Joint {
        name: name.into(),
        parent,
        rotation: UnitQuaternion::identity(),
        translation: Vector3::from(t),
        rest: [0.0; 3],
        lower: [-PI; 3],
        upper: [PI; 3],
    }
}

/// A planar chain of `links` joints along +x with a flat strip for skin.
///
/// The strip lies in z = 0 with normals +z and each vertex is bound to the
/// link it sits on. Returns the skeleton, binding, mesh and the surface
/// point at the tip of the centerline.
pub fn strip_arm(links: usize, len: f64) -> (Skeleton, SkinBinding, Mesh, SurfacePoint) {
    let mut joints = vec![joint("root", None, [0.0; 3])];
    for k in 1..links {
        joints.push(joint(&format!("j{k}"), Some(k - 1), [len, 0.0, 0.0]));
    }
    let skeleton = Skeleton::new(joints, None).unwrap();
    let per = 4;
    let n = links * per;
    let mut positions = Vec::new();
    let mut bind = Vec::new();
    for i in 0..=n {
        let x = len * i as f64 / per as f64;
        let k = (i / per).min(links - 1);
        // Vertices on a joint belong to the child link, except the tip.
        for y in [-0.05, 0.05] {
            positions.push(Point3::new(x, y, 0.0));
            bind.push(k);
        }
    }
    let mut faces = Vec::new();
    for i in 0..n {
        let (a, b, c, d) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        faces.push([a, c, d]);
        faces.push([a, d, b]);
    }
    let mesh = Mesh::from_triangles(positions, faces).unwrap();
    let tip = mesh.closest_point(&Point3::new(len * links as f64, 0.0, 0.0));
    (skeleton, SkinBinding::rigid(&bind), mesh, tip)
}

/// Freezes everything except the in-plane rotation (z) of every joint.
pub fn planar_frozen(s: &Skeleton) -> Vec<usize> {
    let mut frozen: Vec<usize> = (0..5).collect();
    for k in 1..s.joints().len() {
        let o = s.dof_offset(k);
        frozen.extend([o, o + 1]);
    }
    frozen
}

/// A contact pulling the arm tip onto `target` with opposed normals.
pub fn tip_contact(tip: SurfacePoint, target: [f64; 3]) -> Vec<ContactPair> {
    vec![ContactPair {
        hand: tip,
        target: Point3::from(target),
        normal: -Vector3::z(),
        weight: 1.0,
    }]
}

fn pad(positions: &mut Vec<Point3<f64>>, faces: &mut Vec<[usize; 3]>, center: Point3<f64>, u: Vector3<f64>, v: Vector3<f64>) {
    // Quad spanned by u, v; the face normal is u × v.
    let b = positions.len();
    for (s, t) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        positions.push(center + u * s + v * t);
    }
    faces.push([b, b + 1, b + 2]);
    faces.push([b, b + 2, b + 3]);
}

/// A standing lower body above a chair: pelvis (root), hips and knees.
///
/// Pads under the pelvis, behind the thighs and under the feet are paired
/// with the chair seat and the floor, so sitting down satisfies every
/// contact.
pub fn chair_sit() -> (PoseProblem, Skeleton) {
    let h = 1.0;
    let joints = vec![
        joint("pelvis", None, [0.0, 0.0, h]),
        joint("hip_l", Some(0), [0.0, 0.15, 0.0]),
        joint("knee_l", Some(1), [0.0, 0.0, -0.45]),
        joint("hip_r", Some(0), [0.0, -0.15, 0.0]),
        joint("knee_r", Some(3), [0.0, 0.0, -0.45]),
    ];
    let skeleton = Skeleton::new(joints, None).unwrap();
    let (mut positions, mut faces, mut bind) = (Vec::new(), Vec::new(), Vec::new());
    let e = 0.04;
    let down = (Vector3::new(0.0, e, 0.0), Vector3::new(e, 0.0, 0.0));
    let back = (Vector3::new(0.0, 0.0, e), Vector3::new(0.0, e, 0.0));
    pad(&mut positions, &mut faces, Point3::new(0.0, 0.0, h - 0.05), down.0, down.1);
    bind.extend([0; 4]);
    let mut contacts = vec![(Point3::new(0.0, 0.0, h - 0.05), Point3::new(0.0, 0.0, 0.45))];
    for (side, hip, knee) in [(0.15, 1, 2), (-0.15, 3, 4)] {
        let thigh = Point3::new(-0.05, side, h - 0.225);
        pad(&mut positions, &mut faces, thigh, back.0, back.1);
        bind.extend([hip; 4]);
        contacts.push((thigh, Point3::new(0.225, side, 0.45)));
        let foot = Point3::new(0.0, side, h - 0.95);
        pad(&mut positions, &mut faces, foot, down.0, down.1);
        bind.extend([knee; 4]);
        contacts.push((foot, Point3::new(0.45, side, 0.0)));
    }
    let mesh = Mesh::from_triangles(positions, faces).unwrap();
    let pairs: Vec<ContactPair> = contacts
        .into_iter()
        .map(|(h, t)| ContactPair {
            hand: mesh.closest_point(&h),
            target: t,
            normal: Vector3::z(),
            weight: 1.0,
        })
        .collect();
    let problem = PoseProblem::new(skeleton.clone(), SkinBinding::rigid(&bind), &mesh, &pairs).unwrap();
    (problem, skeleton)
}

/// A random three-joint rig over a crumpled strip with blended weights and
/// contacts on faces, edges and vertices. Returns the problem and a random
/// pose inside the bounds.
pub fn random_rig(rng: &mut impl Rng) -> (PoseProblem, Vec<f64>) {
    let mut joints = vec![joint("root", None, [rng.gen_range(-0.5..0.5), 0.1, 0.2])];
    for k in 1..3 {
        let mut j = joint(&format!("j{k}"), Some(k - 1), [0.6, rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]);
        j.rotation = UnitQuaternion::from_euler_angles(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        j.rest = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        joints.push(j);
    }
    let skeleton = Skeleton::new(joints, None).unwrap();
    let n = 12;
    let mut positions = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=n {
        let x = 1.8 * i as f64 / n as f64;
        for y in [-0.1, 0.1] {
            positions.push(Point3::new(x, y, rng.gen_range(-0.05..0.05)));
            let a = rng.gen_range(0.0..1.0);
            let k = ((x / 0.6) as usize).min(2);
            let other = if k == 2 { 1 } else { k + 1 };
            weights.push(vec![(k, a), (other, 1.0 - a)]);
        }
    }
    let mut faces = Vec::new();
    for i in 0..n {
        let (a, b, c, d) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        faces.push([a, c, d]);
        faces.push([a, d, b]);
    }
    let mesh = Mesh::from_triangles(positions, faces).unwrap();
    let mut contacts = Vec::new();
    for i in 0..6 {
        let hand = match i % 3 {
            0 => {
                let b = [rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)];
                let s: f64 = b.iter().sum();
                SurfacePoint::face(rng.gen_range(0..mesh.num_faces()), b.map(|x| x / s))
            }
            1 => {
                let t = rng.gen_range(0.1..0.9);
                SurfacePoint::edge(rng.gen_range(0..mesh.num_edges()), [t, 1.0 - t])
            }
            _ => SurfacePoint::vertex(rng.gen_range(0..mesh.num_vertices())),
        };
        let normal = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        contacts.push(ContactPair {
            hand,
            target: Point3::new(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            normal,
            weight: rng.gen_range(0.5..2.0),
        });
    }
    let binding = SkinBinding {
        weights,
        bind_inverse: None,
    };
    let problem = PoseProblem::new(skeleton, binding, &mesh, &contacts).unwrap();
    let theta: Vec<f64> = (0..problem.dof_count())
        .map(|j| {
            let (lo, hi) = (problem.lower()[j], problem.upper()[j]);
            let r = problem.rest_pose()[j];
            (r + rng.gen_range(-0.8..0.8)).clamp(lo, hi)
        })
        .collect();
    (problem, theta)
}

/// Points uniformly in a disc on the z = 0 plane.
pub fn planar_patch(m: &Mesh, rng: &mut impl Rng, center: (f64, f64), radius: f64, n: usize) -> Vec<SurfacePoint> {
    (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..TAU);
            m.closest_point(&Point3::new(center.0 + r * a.cos(), center.1 + r * a.sin(), 0.0))
        })
        .collect()
}

/// Two to four control points roughly along a random line through the
/// patch.
pub fn planar_axis(m: &Mesh, rng: &mut impl Rng, center: (f64, f64), radius: f64) -> Vec<SurfacePoint> {
    let k = rng.gen_range(2..=4);
    let a0 = rng.gen_range(0.0..TAU);
    (0..k)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (k - 1) as f64;
            let along = s * radius * 0.9;
            let side = rng.gen_range(-0.3..0.3) * radius;
            let (c, d) = (a0.cos(), a0.sin());
            m.closest_point(&Point3::new(center.0 + along * c - side * d, center.1 + along * d + side * c, 0.0))
        })
        .collect()
}

/// Reflection of `p` across the line through `a` with direction `d`.
pub fn reflect(p: Vector2<f64>, a: Vector2<f64>, d: Vector2<f64>) -> Vector2<f64> {
    let d = d.normalize();
    let r = p - a;
    a + d * (2.0 * r.dot(&d)) - r
}

/// The 64 × 32 unit cylinder used by the geodesic fixtures.
pub fn unit_cylinder() -> Mesh {
    primitives::cylinder(64, 32, 1.0, 1.0)
}

/// Shortest distance between two points of a unit-radius cylinder about
/// the z axis, measured on the unrolled smooth cylinder.
pub fn cylinder_unrolled(m: &Mesh, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
    let (a, b) = (pos(m, p), pos(m, q));
    let dt = (a.y.atan2(a.x) - b.y.atan2(b.x)).rem_euclid(TAU);
    let dt = dt.min(TAU - dt);
    (dt * dt + (a.z - b.z).powi(2)).sqrt()
}

/// A uniformly random point inside a random face.
pub fn random_point(m: &Mesh, rng: &mut impl Rng) -> SurfacePoint {
    let f = rng.gen_range(0..m.num_faces());
    let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
    if a + b > 1.0 {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    SurfacePoint::face(f, [1.0 - a - b, a, b])
}

/// Vertex-to-vertex shortest paths along mesh edges.
pub fn dijkstra(m: &Mesh, src: usize) -> Vec<f64> {
    let mut adj = vec![Vec::new(); m.num_vertices()];
    for f in m.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let l = (m.positions()[a] - m.positions()[b]).norm();
            adj[a].push((b, l));
            adj[b].push((a, l));
        }
    }
    let mut dist = vec![f64::INFINITY; m.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push((std::cmp::Reverse(0u64), src));
    while let Some((std::cmp::Reverse(key), v)) = heap.pop() {
        let d = f64::from_bits(key);
        if d > dist[v] {
            continue;
        }
        for &(u, l) in &adj[v] {
            if d + l < dist[u] {
                dist[u] = d + l;
                heap.push((std::cmp::Reverse((d + l).to_bits()), u));
            }
        }
    }
    dist
}

/// Upper bound on the geodesic distance: walk straight to a corner of the
/// containing face, then along edges, then straight to the target.
pub fn dijkstra_bound(m: &Mesh, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
    let pp = m.position_of(p).unwrap();
    let pq = m.position_of(q).unwrap();
    let corners = |s: &SurfacePoint| -> Vec<usize> {
        match *s {
            SurfacePoint::Face { index, .. } => m.faces()[index].to_vec(),
            SurfacePoint::Vertex { index } => vec![index],
            SurfacePoint::Edge { index, .. } => {
                let h = m.edge(index).halfedge;
                vec![m.origin(h), m.tip(h)]
            }
        }
    };
    let mut best = f64::INFINITY;
    for a in corners(p) {
        let d = dijkstra(m, a);
        for b in corners(q) {
            let total = (m.positions()[a] - pp).norm() + d[b] + (m.positions()[b] - pq).norm();
            best = best.min(total);
        }
    }
    best
}
