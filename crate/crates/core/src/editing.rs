//! Interactive patch editing.
//!
//! Every edit is an edit of a patch axis followed by reconstruction of the
//! patch from its fixed parameterization. Child patches are linked to a
//! parent by a geodesic connector between the two axis start points; any
//! change to the parent re-derives the child's start point and direction
//! from the stored connector and rebuilds the child, recursively.
//!
//! Failed edits leave the session untouched. Successful edits push the
//! previous state onto an undo journal.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contact::{default_axis, reconstruct_subset, transfer_patch, Patch, Transfer};
use crate::error::{Error, Result};
use crate::geodesic::{exact_geodesic, parallel_transport, trace_geodesic, unit};
use crate::mesh::{Mesh, SurfacePoint};

/// Maximum number of undo steps kept.
const JOURNAL_DEPTH: usize = 128;

/// Placement of a child patch relative to its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub parent: String,
    /// Index of the parent axis point the connector leaves from. Always the
    /// first point.
    pub anchor: usize,
    /// Length of the connector from the parent's first axis point to the
    /// child's.
    pub length: f64,
    /// Connector departure direction relative to the parent's initial axis
    /// direction.
    #[serde(with = "crate::serde_cx")]
    pub departure: Complex64,
    /// Child's initial axis direction relative to the connector's arriving
    /// direction.
    #[serde(with = "crate::serde_cx")]
    pub child_angle: Complex64,
}

/// Patches and hierarchy links: the persistent part of a session.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EditState {
    pub patches: BTreeMap<String, Patch>,
    /// Child id to its connection record.
    pub links: BTreeMap<String, Connection>,
}

/// Single-writer editing session over a set of meshes.
#[derive(Debug, Clone)]
pub struct EditSession {
    meshes: BTreeMap<String, Arc<Mesh>>,
    state: EditState,
    journal: Vec<EditState>,
}

impl EditSession {
    pub fn new(meshes: BTreeMap<String, Arc<Mesh>>) -> Self {
        EditSession {
            meshes,
            state: EditState::default(),
            journal: Vec::new(),
        }
    }

    /// Restores a session from saved state, checking that every patch lives
    /// on a known mesh and that the links form a forest.
    pub fn with_state(meshes: BTreeMap<String, Arc<Mesh>>, state: EditState) -> Result<Self> {
        let session = EditSession {
            meshes,
            state,
            journal: Vec::new(),
        };
        for (id, p) in &session.state.patches {
            let mesh = session.mesh(&p.mesh)?;
            for q in p.points.iter().flatten().chain(p.axis.points()) {
                mesh.validate_point(q).map_err(|e| Error::InvalidScene(format!("patch `{id}`: {e}")))?;
            }
        }
        for (child, link) in &session.state.links {
            session.patch(child)?;
            session.patch(&link.parent)?;
            if session.ancestors(&link.parent).any(|a| a == child) {
                return Err(Error::HierarchyCycle {
                    parent: link.parent.clone(),
                    child: child.clone(),
                });
            }
        }
        Ok(session)
    }

    pub fn state(&self) -> &EditState {
        &self.state
    }

    pub fn mesh(&self, id: &str) -> Result<&Arc<Mesh>> {
        self.meshes
            .get(id)
            .ok_or_else(|| Error::InvalidScene(format!("unknown mesh `{id}`")))
    }

    pub fn meshes(&self) -> &BTreeMap<String, Arc<Mesh>> {
        &self.meshes
    }

    pub fn patch(&self, id: &str) -> Result<&Patch> {
        self.state
            .patches
            .get(id)
            .ok_or_else(|| Error::UnknownPatch(id.to_string()))
    }

    pub fn patches(&self) -> &BTreeMap<String, Patch> {
        &self.state.patches
    }

    pub fn links(&self) -> &BTreeMap<String, Connection> {
        &self.state.links
    }

    /// Number of edits that can be undone.
    pub fn undo_depth(&self) -> usize {
        self.journal.len()
    }

    /// Restores the state before the last successful edit.
    pub fn undo(&mut self) -> Result<()> {
        self.state = self.journal.pop().ok_or(Error::EmptyJournal)?;
        Ok(())
    }

    /// Runs `f` on a copy of the state, committing it only on success.
    fn commit<T>(&mut self, f: impl FnOnce(&Self, &mut EditState) -> Result<T>) -> Result<T> {
        let mut next = self.state.clone();
        let out = f(self, &mut next)?;
        let prev = std::mem::replace(&mut self.state, next);
        self.journal.push(prev);
        if self.journal.len() > JOURNAL_DEPTH {
            self.journal.remove(0);
        }
        Ok(out)
    }

    fn ancestors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let mut cur = Some(id);
        std::iter::from_fn(move || {
            let c = cur?;
            cur = self.state.links.get(c).map(|l| l.parent.as_str());
            Some(c)
        })
    }

    /// Adds a patch. Its axis defaults to the farthest-pair geodesic.
    pub fn create_patch(
        &mut self,
        id: &str,
        mesh_id: &str,
        points: &[SurfacePoint],
        axis: Option<&[SurfacePoint]>,
    ) -> Result<&Patch> {
        if self.state.patches.contains_key(id) {
            return Err(Error::DuplicatePatch(id.to_string()));
        }
        let mesh = self.mesh(mesh_id)?.clone();
        let axis_points = match axis {
            Some(a) => a.to_vec(),
            None => default_axis(&mesh, points)?.points().to_vec(),
        };
        let patch = Patch::new(mesh_id, &mesh, points, &axis_points)?;
        self.commit(|_, st| {
            st.patches.insert(id.to_string(), patch);
            Ok(())
        })?;
        self.patch(id)
    }

    /// Inserts an already parameterized patch.
    pub fn insert_patch(&mut self, id: &str, patch: Patch) -> Result<()> {
        if self.state.patches.contains_key(id) {
            return Err(Error::DuplicatePatch(id.to_string()));
        }
        self.mesh(&patch.mesh)?;
        self.commit(|_, st| {
            st.patches.insert(id.to_string(), patch);
            Ok(())
        })
    }

    /// Removes a patch along with its links; children become roots.
    pub fn remove_patch(&mut self, id: &str) -> Result<Patch> {
        self.patch(id)?;
        self.commit(|_, st| {
            st.links.remove(id);
            st.links.retain(|_, l| l.parent != id);
            Ok(st.patches.remove(id).unwrap())
        })
    }

    /// Replaces a patch's axis (the default axis when `axis` is `None`) and
    /// re-parameterizes it.
    pub fn set_axis(&mut self, id: &str, axis: Option<&[SurfacePoint]>) -> Result<&Patch> {
        self.commit(|s, st| {
            let patch = st.patches.get_mut(id).ok_or_else(|| Error::UnknownPatch(id.to_string()))?;
            let mesh = s.mesh(&patch.mesh)?;
            let axis_points = match axis {
                Some(a) => a.to_vec(),
                None => {
                    let pts: Vec<SurfacePoint> = patch.placed().map(|(_, p)| p).collect();
                    default_axis(mesh, &pts)?.points().to_vec()
                }
            };
            patch.set_axis(mesh, &axis_points)?;
            s.refresh_links(st, id)?;
            s.propagate_from(st, id)
        })?;
        self.patch(id)
    }

    /// Transfers patch `source` onto mesh `target_mesh` as the new patch
    /// `new_id`, mirrored, with its axis starting at `start` along
    /// `direction`. Re-transferring onto an existing id replaces it.
    pub fn transfer(
        &mut self,
        source: &str,
        new_id: &str,
        target_mesh: &str,
        start: &SurfacePoint,
        direction: Complex64,
    ) -> Result<Transfer> {
        let mesh = self.mesh(target_mesh)?.clone();
        let patch = self.patch(source)?;
        let t = transfer_patch(patch, &mesh, target_mesh, start, direction)?;
        let placed = t.patch.clone();
        self.commit(|s, st| {
            st.patches.insert(new_id.to_string(), placed);
            s.refresh_links(st, new_id)?;
            s.propagate_from(st, new_id)
        })?;
        Ok(t)
    }

    /// Moves a patch along the shortest geodesic from `from` to `to`.
    ///
    /// The first axis point keeps its offset from the drag handle, and the
    /// axis direction is parallel transported along the way. A zero drag
    /// leaves the session untouched.
    pub fn translate(&mut self, id: &str, from: &SurfacePoint, to: &SurfacePoint) -> Result<&Patch> {
        let patch = self.patch(id)?;
        let mesh = self.mesh(&patch.mesh)?.clone();
        let drag = exact_geodesic(&mesh, from, to)?;
        if drag.length() == 0.0 {
            return self.patch(id);
        }
        let a1 = patch.axis.start();
        let t1 = patch.axis.initial_direction();
        let offset = exact_geodesic(&mesh, from, &a1)?;
        let (u, t_from) = if offset.length() > 0.0 {
            (
                offset.initial_direction()? * offset.length(),
                parallel_transport(&mesh, &offset.reversed(), t1)?,
            )
        } else {
            (Complex64::new(0.0, 0.0), t1)
        };
        let u = parallel_transport(&mesh, &drag, u)?;
        let t_to = parallel_transport(&mesh, &drag, t_from)?;
        let (start, dir) = if u.norm() > 0.0 {
            let g = trace_geodesic(&mesh, &drag.end(), u)?;
            (g.end(), parallel_transport(&mesh, &g, t_to)?)
        } else {
            (drag.end(), t_to)
        };
        self.commit(|s, st| s.restart(st, id, start, unit(dir)))?;
        self.patch(id)
    }

    /// Rotates a patch by `delta` radians about its first axis point. A
    /// zero angle leaves the session untouched.
    pub fn rotate(&mut self, id: &str, delta: f64) -> Result<&Patch> {
        let patch = self.patch(id)?;
        if delta == 0.0 {
            return self.patch(id);
        }
        let start = patch.axis.start();
        let dir = patch.axis.initial_direction() * Complex64::from_polar(1.0, delta);
        self.commit(|s, st| s.restart(st, id, start, unit(dir)))?;
        self.patch(id)
    }

    /// Bends the axis at interior point `pivot` by `delta` radians. Only the
    /// axis after the pivot, and the patch points attached to it, move.
    pub fn deform(&mut self, id: &str, pivot: usize, delta: f64) -> Result<&Patch> {
        let m = self.patch(id)?.axis.len();
        if pivot == 0 || pivot + 1 >= m {
            return Err(Error::InvalidPivot { index: pivot, len: m });
        }
        self.commit(|s, st| {
            let patch = st.patches.get_mut(id).unwrap();
            let mesh = s.mesh(&patch.mesh)?;
            patch.axis.turning[pivot] = unit(patch.axis.turning[pivot] * Complex64::from_polar(1.0, delta));
            patch.axis.retrace_from(mesh, pivot)?;
            let r = reconstruct_subset(
                mesh,
                &patch.axis,
                &patch.param,
                false,
                |i| patch.param.closest[i] >= pivot,
                Some(&patch.points),
            )?;
            patch.points = r.points;
            // Children hang off the first axis point, which did not move.
            Ok(())
        })?;
        self.patch(id)
    }

    /// Links `child` under `parent`, recording the connector between their
    /// first axis points. Re-attaching an existing child replaces its link.
    pub fn attach(&mut self, parent: &str, child: &str) -> Result<Connection> {
        let p = self.patch(parent)?;
        let c = self.patch(child)?;
        if p.mesh != c.mesh {
            return Err(Error::MeshMismatch {
                patch: child.to_string(),
                expected: p.mesh.clone(),
                found: c.mesh.clone(),
            });
        }
        if self.ancestors(parent).any(|a| a == child) {
            return Err(Error::HierarchyCycle {
                parent: parent.to_string(),
                child: child.to_string(),
            });
        }
        let mesh = self.mesh(&p.mesh)?;
        let link = connect(mesh, parent, p, c)?;
        self.commit(|_, st| {
            st.links.insert(child.to_string(), link.clone());
            Ok(())
        })?;
        Ok(link)
    }

    pub fn detach(&mut self, child: &str) -> Result<()> {
        self.patch(child)?;
        self.commit(|_, st| {
            st.links.remove(child);
            Ok(())
        })
    }

    /// Re-derives every descendant of `parent` from the stored connectors.
    /// Returns the ids of the patches that were rebuilt.
    pub fn propagate(&mut self, parent: &str) -> Result<Vec<String>> {
        self.patch(parent)?;
        self.commit(|s, st| s.propagate_from(st, parent))
    }

    /// Moves the axis start of `id`, retraces and rebuilds it, then its
    /// descendants.
    fn restart(&self, st: &mut EditState, id: &str, start: SurfacePoint, dir: Complex64) -> Result<Vec<String>> {
        let patch = st.patches.get_mut(id).ok_or_else(|| Error::UnknownPatch(id.to_string()))?;
        let mesh = self.mesh(&patch.mesh)?;
        place_axis(mesh, patch, start, dir)?;
        // A directly edited child keeps its new placement relative to its
        // parent.
        if let Some(link) = st.links.get(id) {
            let parent = link.parent.clone();
            let link = connect(mesh, &parent, &st.patches[&parent], &st.patches[id])?;
            st.links.insert(id.to_string(), link);
        }
        self.propagate_from(st, id)
    }

    fn propagate_from(&self, st: &mut EditState, parent: &str) -> Result<Vec<String>> {
        let mut done = Vec::new();
        let mut queue = vec![parent.to_string()];
        while let Some(pid) = queue.pop() {
            let children: Vec<(String, Connection)> = st
                .links
                .iter()
                .filter(|(_, l)| l.parent == pid)
                .map(|(c, l)| (c.clone(), l.clone()))
                .collect();
            for (cid, link) in children.into_iter().rev() {
                let p = &st.patches[&pid];
                let mesh = self.mesh(&p.mesh)?;
                let anchor = p.axis.start();
                let tp = p.axis.initial_direction();
                let (start, arriving) = if link.length > 0.0 {
                    let g = trace_geodesic(mesh, &anchor, unit(link.departure * tp) * link.length)?;
                    (g.end(), g.ending_direction()?)
                } else {
                    (anchor, tp)
                };
                let child = st.patches.get_mut(&cid).unwrap();
                place_axis(mesh, child, start, unit(arriving * link.child_angle))?;
                done.push(cid.clone());
                queue.push(cid);
            }
        }
        Ok(done)
    }

    /// Recomputes the connector records touching `id` after its axis was
    /// replaced wholesale.
    fn refresh_links(&self, st: &mut EditState, id: &str) -> Result<()> {
        let touched: Vec<String> = st
            .links
            .iter()
            .filter(|(c, l)| c.as_str() == id || l.parent == id)
            .map(|(c, _)| c.clone())
            .collect();
        for child in touched {
            let parent = st.links[&child].parent.clone();
            let (p, c) = (&st.patches[&parent], &st.patches[&child]);
            let link = connect(self.mesh(&p.mesh)?, &parent, p, c)?;
            st.links.insert(child, link);
        }
        Ok(())
    }
}

fn connect(mesh: &Mesh, parent_id: &str, parent: &Patch, child: &Patch) -> Result<Connection> {
    let tp = parent.axis.initial_direction();
    let tc = child.axis.initial_direction();
    let g = exact_geodesic(mesh, &parent.axis.start(), &child.axis.start())?;
    let (departure, child_angle) = if g.length() > 0.0 {
        (unit(g.initial_direction()? / tp), unit(tc / g.ending_direction()?))
    } else {
        (Complex64::new(1.0, 0.0), unit(tc / tp))
    };
    Ok(Connection {
        parent: parent_id.to_string(),
        anchor: 0,
        length: g.length(),
        departure,
        child_angle,
    })
}

fn place_axis(mesh: &Mesh, patch: &mut Patch, start: SurfacePoint, dir: Complex64) -> Result<()> {
    patch.axis.points[0] = mesh.validate_point(&start)?;
    patch.axis.tangents[0] = dir;
    patch.axis.arrivals[0] = dir;
    patch.axis.retrace_from(mesh, 0)?;
    patch.rebuild(mesh)?;
    Ok(())
}
