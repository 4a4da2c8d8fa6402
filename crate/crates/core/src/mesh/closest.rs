//! Projection of ambient points onto the surface.

use nalgebra::{Point3, Vector3};

use super::{Mesh, SurfacePoint};

impl Mesh {
    /// Surface point nearest to `x` in Euclidean distance. Ties go to the
    /// lowest face index. Runs in time linear in the number of faces.
    pub fn closest_point(&self, x: &Point3<f64>) -> SurfacePoint {
        let mut best = (f64::INFINITY, 0, [1.0, 0.0, 0.0]);
        for (f, tri) in self.faces().iter().enumerate() {
            let [a, b, c] = tri.map(|v| self.positions()[v]);
            let bary = closest_on_triangle(x, &a, &b, &c);
            let q = a.coords * bary[0] + b.coords * bary[1] + c.coords * bary[2];
            let d = (q - x.coords).norm_squared();
            if d < best.0 {
                best = (d, f, bary);
            }
        }
        self.point_in_face(best.1, best.2)
    }
}

/// Barycentric coordinates of the point of triangle `abc` closest to `p`.
fn closest_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> [f64; 3] {
    let ab: Vector3<f64> = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [1.0 - v - w, v, w]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn projects_onto_plane() {
        let m = primitives::grid(3, 3, 1.0, 1.0);
        let p = m.closest_point(&Point3::new(0.4, 0.7, 2.0));
        let x = m.position_of(&p).unwrap();
        assert!((x - Point3::new(0.4, 0.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn snaps_to_vertex_outside_corner() {
        let m = primitives::unit_square();
        assert_eq!(m.closest_point(&Point3::new(-1.0, -1.0, 0.0)), SurfacePoint::vertex(0));
    }
}
