use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of root degrees of freedom: translation then rotation.
pub const ROOT_DOFS: usize = 6;

/// One joint of a [`Skeleton`].
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Rest rotation relative to the parent frame.
    pub rotation: UnitQuaternion<f64>,
    /// Rest translation relative to the parent frame, in model units.
    pub translation: Vector3<f64>,
    /// Euler angles (intrinsic XYZ) of the rest pose.
    pub rest: [f64; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

/// An articulated joint tree.
///
/// The pose vector θ holds the root translation offset (3), the root Euler
/// angles (3), then three Euler angles per non-root joint in joint order.
/// Euler angles are intrinsic XYZ and applied after the joint's rest
/// rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkeletonSpec", into = "SkeletonSpec")]
pub struct Skeleton {
    joints: Vec<Joint>,
    root: usize,
    /// Joints sorted so that parents precede children.
    order: Vec<usize>,
    /// First DOF index of each joint.
    offsets: Vec<usize>,
    /// Joint owning each DOF.
    dof_joint: Vec<usize>,
    /// `ancestry[k]` lists the DOFs that move joint `k`.
    ancestry: Vec<Vec<usize>>,
    translation_limit: Option<f64>,
}

/// World frames and per-DOF motion axes at one pose.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub world: Vec<Isometry3<f64>>,
    /// World axis of each DOF: the translation direction for root
    /// translations, the rotation axis otherwise.
    pub axes: Vec<Vector3<f64>>,
    /// World point each rotational DOF turns about.
    pub origins: Vec<Point3<f64>>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>, translation_limit: Option<f64>) -> Result<Self> {
        let n = joints.len();
        if n == 0 {
            return Err(Error::InvalidSkeleton("no joints".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&k| joints[k].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidSkeleton(format!("expected one root joint, found {}", roots.len())));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for (k, j) in joints.iter().enumerate() {
            if let Some(p) = j.parent {
                if p >= n {
                    return Err(Error::InvalidSkeleton(format!("joint `{}` has unknown parent {p}", j.name)));
                }
                children[p].push(k);
            }
        }
        let mut order = vec![root];
        let mut i = 0;
        while i < order.len() {
            order.extend(children[order[i]].iter().copied());
            i += 1;
        }
        if order.len() != n {
            return Err(Error::InvalidSkeleton("joint tree contains a cycle".into()));
        }
        let mut offsets = vec![0; n];
        let mut dof_joint = vec![root; ROOT_DOFS];
        for (k, _) in joints.iter().enumerate().filter(|&(k, _)| k != root) {
            offsets[k] = dof_joint.len();
            dof_joint.extend([k; 3]);
        }
        offsets[root] = 0;
        let mut ancestry = vec![Vec::new(); n];
        for &k in &order {
            let mut dofs = match joints[k].parent {
                Some(p) => ancestry[p].clone(),
                None => Vec::new(),
            };
            if k == root {
                dofs.extend(0..ROOT_DOFS);
            } else {
                dofs.extend(offsets[k]..offsets[k] + 3);
            }
            ancestry[k] = dofs;
        }
        for j in &joints {
            for a in 0..3 {
                if !(j.lower[a] <= j.rest[a] && j.rest[a] <= j.upper[a]) {
                    return Err(Error::InvalidSkeleton(format!(
                        "joint `{}` axis {a}: rest {} outside [{}, {}]",
                        j.name, j.rest[a], j.lower[a], j.upper[a]
                    )));
                }
            }
        }
        if let Some(t) = translation_limit {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidSkeleton(format!("translation limit {t} must be positive")));
            }
        }
        Ok(Skeleton {
            joints,
            root,
            order,
            offsets,
            dof_joint,
            ancestry,
            translation_limit,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Total number of degrees of freedom.
    pub fn dof_count(&self) -> usize {
        self.dof_joint.len()
    }

    /// First DOF index of joint `k`.
    pub fn dof_offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn dof_joint(&self, j: usize) -> usize {
        self.dof_joint[j]
    }

    /// DOFs that move joint `k` (its own and those of its ancestors).
    pub fn dofs_moving(&self, k: usize) -> &[usize] {
        &self.ancestry[k]
    }

    pub fn root_dofs(&self) -> std::ops::Range<usize> {
        0..ROOT_DOFS
    }

    pub fn non_root_dofs(&self) -> std::ops::Range<usize> {
        ROOT_DOFS..self.dof_count()
    }

    pub fn translation_limit(&self) -> Option<f64> {
        self.translation_limit
    }

    /// Rest pose vector: zero root translation offset, rest Euler angles.
    pub fn rest_pose(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.dof_count()];
        for (k, j) in self.joints.iter().enumerate() {
            let o = if k == self.root { 3 } else { self.offsets[k] };
            theta[o..o + 3].copy_from_slice(&j.rest);
        }
        theta
    }

    /// Per-DOF bounds. Root translations get `±translation_limit` about
    /// zero, using the skeleton's own limit when it has one.
    pub fn bounds(&self, translation_limit: f64) -> (Vec<f64>, Vec<f64>) {
        let t = self.translation_limit.unwrap_or(translation_limit);
        let mut lower = vec![-t; self.dof_count()];
        let mut upper = vec![t; self.dof_count()];
        for (k, j) in self.joints.iter().enumerate() {
            let o = if k == self.root { 3 } else { self.offsets[k] };
            lower[o..o + 3].copy_from_slice(&j.lower);
            upper[o..o + 3].copy_from_slice(&j.upper);
        }
        (lower, upper)
    }

    pub fn check_pose(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: self.dof_count(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// World transform of every joint at pose `theta`.
    pub fn forward_kinematics(&self, theta: &[f64]) -> Result<Vec<Isometry3<f64>>> {
        Ok(self.kinematics(theta)?.world)
    }

    /// World transforms together with the motion axis of every DOF.
    pub fn kinematics(&self, theta: &[f64]) -> Result<Kinematics> {
        self.check_pose(theta)?;
        let n = self.joints.len();
        let mut world = vec![Isometry3::identity(); n];
        let mut axes = vec![Vector3::zeros(); self.dof_count()];
        let mut origins = vec![Point3::origin(); self.dof_count()];
        for &k in &self.order {
            let j = &self.joints[k];
            let parent = j.parent.map_or_else(Isometry3::identity, |p| world[p]);
            let (t, o) = if k == self.root {
                for (a, axis) in axes.iter_mut().take(3).enumerate() {
                    *axis = parent.rotation * Vector3::ith(a, 1.0);
                }
                (j.translation + Vector3::new(theta[0], theta[1], theta[2]), 3)
            } else {
                (j.translation, self.offsets[k])
            };
            let pre = parent * Isometry3::from_parts(Translation3::from(t), j.rotation);
            let origin = Point3::from(pre.translation.vector);
            let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), theta[o]);
            let ry = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), theta[o + 1]);
            let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta[o + 2]);
            axes[o] = pre.rotation * Vector3::x();
            axes[o + 1] = pre.rotation * (rx * Vector3::y());
            axes[o + 2] = pre.rotation * (rx * ry * Vector3::z());
            origins[o..o + 3].fill(origin);
            world[k] = pre * UnitQuaternion::from_quaternion((rx * ry * rz).into_inner());
        }
        Ok(Kinematics { world, axes, origins })
    }
}

/// Rigid transform in JSON: quaternion `[w, x, y, z]` and translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl TransformSpec {
    pub fn to_isometry(&self) -> Result<Isometry3<f64>> {
        Ok(Isometry3::from_parts(
            Translation3::new(self.translation[0], self.translation[1], self.translation[2]),
            quaternion(self.rotation)?,
        ))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let q = iso.rotation.quaternion();
        let t = iso.translation.vector;
        TransformSpec {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [t.x, t.y, t.z],
        }
    }
}

fn quaternion(q: [f64; 4]) -> Result<UnitQuaternion<f64>> {
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    let norm = raw.norm();
    if !norm.is_finite() || norm < 1e-12 {
        return Err(Error::InvalidSkeleton(format!("degenerate quaternion {q:?}")));
    }
    Ok(UnitQuaternion::from_quaternion(raw))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JointSpec {
    name: String,
    #[serde(default)]
    parent: Option<String>,
    #[serde(default = "identity_quaternion")]
    rotation: [f64; 4],
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default, skip_serializing_if = "is_zero")]
    rest: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper: Option<[f64; 3]>,
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn is_zero(v: &[f64; 3]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

/// JSON form of a skeleton. Parents are referenced by name; rotation bounds
/// default to the rest angles ± π.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SkeletonSpec {
    joints: Vec<JointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translation_limit: Option<f64>,
}

impl TryFrom<SkeletonSpec> for Skeleton {
    type Error = Error;

    fn try_from(spec: SkeletonSpec) -> Result<Self> {
        let names: Vec<&str> = spec.joints.iter().map(|j| j.name.as_str()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidSkeleton(format!("duplicate joint name `{n}`")));
            }
        }
        let joints = spec
            .joints
            .iter()
            .map(|j| {
                let parent = match &j.parent {
                    None => None,
                    Some(p) => Some(
                        names
                            .iter()
                            .position(|n| n == p)
                            .ok_or_else(|| Error::InvalidSkeleton(format!("joint `{}`: unknown parent `{p}`", j.name)))?,
                    ),
                };
                let pi = std::f64::consts::PI;
                Ok(Joint {
                    name: j.name.clone(),
                    parent,
                    rotation: quaternion(j.rotation)?,
                    translation: Vector3::from(j.translation),
                    rest: j.rest,
                    lower: j.lower.unwrap_or(j.rest.map(|r| r - pi)),
                    upper: j.upper.unwrap_or(j.rest.map(|r| r + pi)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Skeleton::new(joints, spec.translation_limit)
    }
}

impl From<Skeleton> for SkeletonSpec {
    fn from(s: Skeleton) -> Self {
        let pi = std::f64::consts::PI;
        let joints = s
            .joints
            .iter()
            .map(|j| {
                let q = j.rotation.quaternion();
                let default_lower = j.rest.map(|r| r - pi);
                let default_upper = j.rest.map(|r| r + pi);
                JointSpec {
                    name: j.name.clone(),
                    parent: j.parent.map(|p| s.joints[p].name.clone()),
                    rotation: [q.w, q.i, q.j, q.k],
                    translation: [j.translation.x, j.translation.y, j.translation.z],
                    rest: j.rest,
                    lower: (j.lower != default_lower).then_some(j.lower),
                    upper: (j.upper != default_upper).then_some(j.upper),
                }
            })
            .collect();
        SkeletonSpec {
            joints,
            translation_limit: s.translation_limit,
        }
    }
}
