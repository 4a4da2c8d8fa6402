//! Axis-based contact patches.
//!
//! A patch is a set of surface points. It is parameterized against an
//! axis, a piecewise-geodesic curve, by storing for every point the log map
//! at its closest axis point, measured relative to the axis tangent there.
//! The axis itself is stored intrinsically as segment lengths and turning
//! angles, so it can be retraced from any start point and direction on any
//! mesh, after which the patch is rebuilt with the exponential map.

mod axis;
mod patch;
mod transfer;

pub use axis::{parameterize_axis, reconstruct_axis, Axis};
pub use patch::{parameterize_patch, reconstruct_patch, Patch, PatchParam, Reconstruction};
#[allow(unused_imports)]
pub(crate) use patch::reconstruct_subset;
pub use transfer::{default_axis, farthest_pair, transfer_patch, Transfer};
