//! Procedural meshes used as fixtures and demo geometry.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::Point3;

use super::Mesh;

/// Two triangles covering [0,1]², split along the (0,0)–(1,1) diagonal.
pub fn unit_square() -> Mesh {
    let positions = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
    ];
    Mesh::from_triangles(positions, vec![[0, 1, 2], [0, 2, 3]]).expect("valid fixture")
}

/// Regular grid in the z = 0 plane with `nx` × `ny` quads spanning
/// [0, width] × [0, height], each split along its rising diagonal.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> Mesh {
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Point3::new(
                width * i as f64 / nx as f64,
                height * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::from_triangles(positions, faces).expect("valid fixture")
}

/// Open cylinder around the z axis with `segments` around and `rings`
/// quads along its height, normals pointing outward.
pub fn cylinder(segments: usize, rings: usize, radius: f64, height: f64) -> Mesh {
    let mut positions = Vec::with_capacity(segments * (rings + 1));
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        for k in 0..segments {
            let a = TAU * k as f64 / segments as f64;
            positions.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let id = |k: usize, r: usize| r * segments + k % segments;
    let mut faces = Vec::with_capacity(2 * segments * rings);
    for r in 0..rings {
        for k in 0..segments {
            faces.push([id(k, r), id(k + 1, r), id(k + 1, r + 1)]);
            faces.push([id(k, r), id(k + 1, r + 1), id(k, r + 1)]);
        }
    }
    Mesh::from_triangles(positions, faces).expect("valid fixture")
}

/// Closed axis-aligned cube with corner at the origin.
pub fn cube(size: f64) -> Mesh {
    let s = size;
    let positions = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(s, 0.0, 0.0),
        Point3::new(s, s, 0.0),
        Point3::new(0.0, s, 0.0),
        Point3::new(0.0, 0.0, s),
        Point3::new(s, 0.0, s),
        Point3::new(s, s, s),
        Point3::new(0.0, s, s),
    ];
    let quads = [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    Mesh::from_triangles(positions, faces).expect("valid fixture")
}

/// Subdivided icosahedron projected onto a sphere centered at the origin.
pub fn icosphere(subdivisions: usize, radius: f64) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Point3::from(nalgebra::Vector3::new(p[0], p[1], p[2]).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Point3<f64>>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (verts[a].coords + verts[b].coords).normalize();
                verts.push(Point3::from(m));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut verts {
        v.coords *= radius;
    }
    Mesh::from_triangles(verts, faces).expect("valid fixture")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_oriented_outward() {
        let c = cylinder(8, 2, 1.0, 1.0);
        for f in 0..c.num_faces() {
            let [a, b, d] = c.faces()[f].map(|v| c.positions()[v].coords);
            let centroid = (a + b + d) / 3.0;
            let radial = nalgebra::Vector3::new(centroid.x, centroid.y, 0.0);
            assert!(c.face_normal(f).dot(&radial) > 0.0);
        }
        let s = icosphere(1, 2.0);
        assert_eq!(s.num_faces(), 80);
        for f in 0..s.num_faces() {
            let [a, b, d] = s.faces()[f].map(|v| s.positions()[v].coords);
            assert!(s.face_normal(f).dot(&(a + b + d)) > 0.0);
        }
        let k = cube(1.0);
        assert!(k.warnings().is_empty());
        assert!((0..8).all(|v| !k.is_boundary_vertex(v)));
    }
}
