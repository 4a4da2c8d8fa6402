use nalgebra::{Isometry3, Point3};
use serde::{Deserialize, Serialize};

use super::skeleton::{Skeleton, TransformSpec};
use crate::error::{Error, Result};

/// Tolerance on the sum of a vertex's skinning weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-6;

/// Linear blend skinning weights.
///
/// `weights[v]` lists `(joint, weight)` pairs for vertex `v`. Bind-pose
/// inverse transforms default to the inverse of the rest-pose joint frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkinBinding {
    pub weights: Vec<Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bind_inverse: Option<Vec<TransformSpec>>,
}

impl SkinBinding {
    /// Every vertex fully bound to a single joint.
    pub fn rigid(joints: &[usize]) -> Self {
        SkinBinding {
            weights: joints.iter().map(|&j| vec![(j, 1.0)]).collect(),
            bind_inverse: None,
        }
    }

    /// Checks the binding against a skeleton and vertex count.
    pub fn validate(&self, skeleton: &Skeleton, vertices: usize) -> Result<()> {
        if self.weights.len() != vertices {
            return Err(Error::InvalidBinding(format!(
                "{} weight lists for {vertices} vertices",
                self.weights.len()
            )));
        }
        let joints = skeleton.joints().len();
        for (v, ws) in self.weights.iter().enumerate() {
            let mut sum = 0.0;
            for &(j, w) in ws {
                if j >= joints {
                    return Err(Error::InvalidBinding(format!("vertex {v} references joint {j} of {joints}")));
                }
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::InvalidBinding(format!("vertex {v} has weight {w}")));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(Error::InvalidBinding(format!("vertex {v} weights sum to {sum}")));
            }
        }
        if let Some(b) = &self.bind_inverse {
            if b.len() != joints {
                return Err(Error::InvalidBinding(format!("{} bind transforms for {joints} joints", b.len())));
            }
        }
        Ok(())
    }

    /// Bind-pose inverse transform of every joint.
    pub fn bind_inverses(&self, skeleton: &Skeleton) -> Result<Vec<Isometry3<f64>>> {
        match &self.bind_inverse {
            Some(b) => b.iter().map(|t| t.to_isometry().map_err(|e| Error::InvalidBinding(e.to_string()))).collect(),
            None => Ok(skeleton
                .forward_kinematics(&skeleton.rest_pose())?
                .iter()
                .map(|t| t.inverse())
                .collect()),
        }
    }
}

/// Deformed vertex positions `Σ_k w_k · T_k · B_k⁻¹ · v`.
pub fn skin_mesh(
    rest: &[Point3<f64>],
    binding: &SkinBinding,
    bind_inverse: &[Isometry3<f64>],
    transforms: &[Isometry3<f64>],
) -> Result<Vec<Point3<f64>>> {
    if binding.weights.len() != rest.len() {
        return Err(Error::InvalidBinding(format!(
            "{} weight lists for {} vertices",
            binding.weights.len(),
            rest.len()
        )));
    }
    rest.iter()
        .zip(&binding.weights)
        .enumerate()
        .map(|(v, (p, ws))| {
            let sum: f64 = ws.iter().map(|w| w.1).sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(Error::InvalidBinding(format!("vertex {v} weights sum to {sum}")));
            }
            let mut acc = Point3::origin().coords;
            for &(k, w) in ws {
                acc += (transforms[k] * (bind_inverse[k] * p)).coords * w;
            }
            Ok(Point3::from(acc))
        })
        .collect()
}
