//! Axis-based contact patches on triangle meshes.
//!
//! The crate covers exact polyhedral geodesics and straightest-geodesic
//! tracing, log-map parameterization and transfer of contact patches,
//! interactive patch editing, and a box-constrained pose solver that fits a
//! skinned, articulated manipulator to paired contacts.

pub mod contact;
pub mod editing;
pub mod error;
pub mod geodesic;
pub mod mesh;
pub mod pose;
pub mod scene;
mod serde_cx;

pub use error::{Error, Result};
pub use mesh::{Mesh, SurfacePoint};
