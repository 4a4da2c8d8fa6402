use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::skeleton::Skeleton;
use super::skin::{skin_mesh, SkinBinding};
use super::SolveConfig;
use crate::contact::Patch;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, SurfacePoint};

/// A point on the manipulator paired with a target on the object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPair {
    /// Point on the rest-pose manipulator mesh, followed through skinning.
    pub hand: SurfacePoint,
    pub target: Point3<f64>,
    /// Outward unit normal of the object at the target.
    pub normal: Vector3<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Index-aligned pairs from a manipulator patch and an object patch.
/// Points dropped from either patch are skipped.
pub fn contact_pairs(
    hand_mesh: &Mesh,
    hand: &Patch,
    object_mesh: &Mesh,
    object: &Patch,
    weights: Option<&[f64]>,
) -> Result<Vec<ContactPair>> {
    if hand.points.len() != object.points.len() {
        return Err(Error::DimensionMismatch {
            expected: hand.points.len(),
            got: object.points.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != hand.points.len() {
            return Err(Error::DimensionMismatch {
                expected: hand.points.len(),
                got: w.len(),
            });
        }
    }
    let mut pairs = Vec::new();
    for (i, (h, o)) in hand.points.iter().zip(&object.points).enumerate() {
        if let (Some(h), Some(o)) = (h, o) {
            pairs.push(ContactPair {
                hand: hand_mesh.validate_point(h)?,
                target: object_mesh.position_of(o)?,
                normal: object_mesh.normal_at(o)?,
                weight: weights.map_or(1.0, |w| w[i]),
            });
        }
    }
    Ok(pairs)
}

/// Rest-pose data of one vertex touched by a contact.
#[derive(Debug, Clone)]
struct Tracked {
    /// `(joint, weight, B⁻¹·v)` for each influence.
    influences: Vec<(usize, f64, Point3<f64>)>,
}

/// A contact expressed over the tracked vertices.
#[derive(Debug, Clone)]
struct Term {
    /// Tracked vertex slots and barycentric weights.
    point: Vec<(usize, f64)>,
    /// Incident faces as tracked vertex slots, for the normal.
    faces: Vec<[usize; 3]>,
    target: Vector3<f64>,
    normal: Vector3<f64>,
    weight: f64,
}

/// The fitting problem: a rigged manipulator and its contact pairs.
#[derive(Debug, Clone)]
pub struct PoseProblem {
    skeleton: Skeleton,
    binding: SkinBinding,
    bind_inverse: Vec<nalgebra::Isometry3<f64>>,
    rest_positions: Vec<Point3<f64>>,
    tracked: Vec<Tracked>,
    terms: Vec<Term>,
    rest: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Objective value split by term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    pub distance: f64,
    pub normal: f64,
    pub prior: f64,
    pub total: f64,
}

impl PoseProblem {
    pub fn new(skeleton: Skeleton, binding: SkinBinding, mesh: &Mesh, contacts: &[ContactPair]) -> Result<Self> {
        binding.validate(&skeleton, mesh.num_vertices())?;
        let bind_inverse = binding.bind_inverses(&skeleton)?;
        let mut slots: BTreeMap<usize, usize> = BTreeMap::new();
        let mut tracked = Vec::new();
        let mut slot = |v: usize, tracked: &mut Vec<Tracked>| -> usize {
            *slots.entry(v).or_insert_with(|| {
                let p = mesh.positions()[v];
                tracked.push(Tracked {
                    influences: binding.weights[v]
                        .iter()
                        .filter(|&&(_, w)| w != 0.0)
                        .map(|&(k, w)| (k, w, bind_inverse[k] * p))
                        .collect(),
                });
                tracked.len() - 1
            })
        };
        let mut terms = Vec::with_capacity(contacts.len());
        for (i, c) in contacts.iter().enumerate() {
            let bad = |reason: String| Error::InvalidContact { index: i, reason };
            let hand = mesh.validate_point(&c.hand).map_err(|e| bad(e.to_string()))?;
            let n = c.normal.norm();
            if !((n - 1.0).abs() <= 1e-6) {
                return Err(bad(format!("object normal has length {n}")));
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(bad(format!("weight {} must be non-negative", c.weight)));
            }
            if !c.target.coords.iter().all(|x| x.is_finite()) {
                return Err(bad("target is not finite".into()));
            }
            let point = mesh
                .vertex_weights(&hand)
                .into_iter()
                .map(|(v, w)| (slot(v, &mut tracked), w))
                .collect();
            let faces = mesh
                .faces_around(&hand)
                .into_iter()
                .map(|f| mesh.faces()[f].map(|v| slot(v, &mut tracked)))
                .collect();
            terms.push(Term {
                point,
                faces,
                target: c.target.coords,
                normal: c.normal / n,
                weight: c.weight,
            });
        }
        // Root translations may roam twice the size of the scene.
        let (mut lo, mut hi) = mesh.bounding_box();
        for c in contacts {
            lo = lo.inf(&c.target);
            hi = hi.sup(&c.target);
        }
        let limit = 2.0 * (hi - lo).norm().max(1e-9);
        let (lower, upper) = skeleton.bounds(limit);
        Ok(PoseProblem {
            rest: skeleton.rest_pose(),
            rest_positions: mesh.positions().to_vec(),
            skeleton,
            binding,
            bind_inverse,
            tracked,
            terms,
            lower,
            upper,
        })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn dof_count(&self) -> usize {
        self.skeleton.dof_count()
    }

    pub fn contact_count(&self) -> usize {
        self.terms.len()
    }

    pub fn rest_pose(&self) -> &[f64] {
        &self.rest
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Overrides the bounds of one DOF.
    pub fn set_bounds(&mut self, dof: usize, lower: f64, upper: f64) -> Result<()> {
        if dof >= self.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: self.dof_count(),
                got: dof + 1,
            });
        }
        if !(lower <= self.rest[dof] && self.rest[dof] <= upper) {
            return Err(Error::InvalidSkeleton(format!("bounds [{lower}, {upper}] exclude rest of DOF {dof}")));
        }
        self.lower[dof] = lower;
        self.upper[dof] = upper;
        Ok(())
    }

    /// Clamps `theta` into the bounds.
    pub fn project(&self, theta: &mut [f64]) {
        for (i, t) in theta.iter_mut().enumerate() {
            *t = t.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Deformed positions of every mesh vertex at `theta`.
    pub fn skinned_positions(&self, theta: &[f64]) -> Result<Vec<Point3<f64>>> {
        let fk = self.skeleton.forward_kinematics(theta)?;
        skin_mesh(&self.rest_positions, &self.binding, &self.bind_inverse, &fk)
    }

    /// World position of every contact's manipulator point at `theta`.
    pub fn contact_positions(&self, theta: &[f64]) -> Result<Vec<Point3<f64>>> {
        let (pos, _) = self.deform(theta, false)?;
        Ok(self
            .terms
            .iter()
            .map(|t| Point3::from(t.point.iter().map(|&(s, w)| pos[s] * w).sum::<Vector3<f64>>()))
            .collect())
    }

    /// Distance from each contact's manipulator point to its target.
    pub fn contact_distances(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .contact_positions(theta)?
            .iter()
            .zip(&self.terms)
            .map(|(x, t)| (x.coords - t.target).norm())
            .collect())
    }

    /// Tracked vertex positions and, with `derivatives`, their derivative
    /// with respect to every DOF (row-major, slot × DOF).
    fn deform(&self, theta: &[f64], derivatives: bool) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>)> {
        let kin = self.skeleton.kinematics(theta)?;
        let dofs = self.dof_count();
        let mut pos = vec![Vector3::zeros(); self.tracked.len()];
        let mut d = if derivatives {
            vec![Vector3::zeros(); self.tracked.len() * dofs]
        } else {
            Vec::new()
        };
        for (s, tr) in self.tracked.iter().enumerate() {
            for &(k, w, ph) in &tr.influences {
                let q = kin.world[k] * ph;
                pos[s] += q.coords * w;
                if derivatives {
                    for &j in self.skeleton.dofs_moving(k) {
                        let dq = if j < 3 {
                            kin.axes[j]
                        } else {
                            kin.axes[j].cross(&(q - kin.origins[j]))
                        };
                        d[s * dofs + j] += dq * w;
                    }
                }
            }
        }
        Ok((pos, d))
    }

    /// Objective value at `theta`, filling `grad` when given.
    pub fn evaluate(&self, theta: &[f64], config: &SolveConfig, grad: Option<&mut [f64]>) -> Result<f64> {
        Ok(self.evaluate_parts(theta, config, grad)?.total)
    }

    pub fn evaluate_parts(&self, theta: &[f64], config: &SolveConfig, mut grad: Option<&mut [f64]>) -> Result<Breakdown> {
        let dofs = self.dof_count();
        if let Some(g) = grad.as_deref_mut() {
            if g.len() != dofs {
                return Err(Error::DimensionMismatch {
                    expected: dofs,
                    got: g.len(),
                });
            }
            g.fill(0.0);
        }
        let want = grad.is_some();
        let (pos, d) = self.deform(theta, want)?;
        let mut out = Breakdown::default();
        let (ld, ln, lp) = (config.lambda_d, config.lambda_n, config.lambda_p);
        let mut dx = vec![Vector3::zeros(); if want { dofs } else { 0 }];
        let mut dn = vec![Vector3::zeros(); if want { dofs } else { 0 }];
        for t in &self.terms {
            let x: Vector3<f64> = t.point.iter().map(|&(s, w)| pos[s] * w).sum();
            let mut big_n = Vector3::zeros();
            for f in &t.faces {
                big_n += (pos[f[1]] - pos[f[0]]).cross(&(pos[f[2]] - pos[f[0]]));
            }
            let len = big_n.norm();
            let n = big_n / len;
            let r = x - t.target;
            let e = n + t.normal;
            out.distance += t.weight * ld * r.norm_squared();
            out.normal += t.weight * ln * e.norm_squared();
            if let Some(g) = grad.as_deref_mut() {
                dx.fill(Vector3::zeros());
                dn.fill(Vector3::zeros());
                for &(s, w) in &t.point {
                    for j in 0..dofs {
                        dx[j] += d[s * dofs + j] * w;
                    }
                }
                for f in &t.faces {
                    let (a, b) = (pos[f[1]] - pos[f[0]], pos[f[2]] - pos[f[0]]);
                    for j in 0..dofs {
                        let da = d[f[1] * dofs + j] - d[f[0] * dofs + j];
                        let db = d[f[2] * dofs + j] - d[f[0] * dofs + j];
                        dn[j] += da.cross(&b) + a.cross(&db);
                    }
                }
                for j in 0..dofs {
                    let dnj = (dn[j] - n * n.dot(&dn[j])) / len;
                    g[j] += t.weight * 2.0 * (ld * r.dot(&dx[j]) + ln * e.dot(&dnj));
                }
            }
        }
        // Root DOFs carry no pose prior.
        for j in self.skeleton.non_root_dofs() {
            let dev = theta[j] - self.rest[j];
            out.prior += lp * dev * dev;
            if let Some(g) = grad.as_deref_mut() {
                g[j] += 2.0 * lp * dev;
            }
        }
        out.total = out.distance + out.normal + out.prior;
        if !out.total.is_finite() || grad.as_deref().is_some_and(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(out)
    }
}
