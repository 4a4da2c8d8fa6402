//! Geodesics on triangle meshes.
//!
//! * [`exact_geodesic`]: globally shortest polyhedral paths by window
//!   propagation over unfolded faces.
//! * [`trace_geodesic`]: straightest geodesics (the discrete exponential map).
//! * [`parallel_transport`]: transport of tangent vectors along a path.
//! * [`closest_axis_points`]: nearest candidate point by exact geodesic distance.
//!
//! When a shortest path is not unique (cut locus), the propagation order
//! decides deterministically which one is returned.

mod closest;
mod exact;
mod path;
mod trace;
mod transport;

pub use closest::closest_axis_points;
pub use exact::{exact_geodesic, geodesic_distances, DistanceQuery, Reached};
pub use path::{Bend, GeodesicPath};
pub use trace::trace_geodesic;
pub use transport::parallel_transport;

use nalgebra::Vector2;
use num_complex::Complex64;

#[inline]
pub(crate) fn c2(v: Vector2<f64>) -> Complex64 {
    Complex64::new(v.x, v.y)
}

#[inline]
pub(crate) fn v2(z: Complex64) -> Vector2<f64> {
    Vector2::new(z.re, z.im)
}

/// 2D cross product of complex numbers viewed as vectors.
#[inline]
pub(crate) fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

#[inline]
pub(crate) fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}
