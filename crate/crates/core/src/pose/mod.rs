//! Articulated pose fitting.
//!
//! A manipulator mesh is deformed by linear blend skinning over a joint tree
//! and posed by minimizing
//!
//! ```text
//! Σ_i w_i (λ_d ‖x_i − y_i‖² + λ_n ‖n_i + m_i‖²) + λ_p Σ_{j non-root} (θ_j − rest_j)²
//! ```
//!
//! where `x_i`, `n_i` are a contact point and its normal on the deformed
//! manipulator and `y_i`, `m_i` the paired object point and outward normal.
//! The root joint is left out of the pose prior.

mod objective;
mod skeleton;
mod skin;
mod solver;

pub use objective::{contact_pairs, Breakdown, ContactPair, PoseProblem};
pub use skeleton::{Joint, Kinematics, Skeleton, TransformSpec, ROOT_DOFS};
pub use skin::{skin_mesh, SkinBinding, WEIGHT_TOLERANCE};
pub use solver::{solve, solve_observed, staged_solve, Progress, SolveConfig, SolveResult, SolveStatus, StagedResult};
