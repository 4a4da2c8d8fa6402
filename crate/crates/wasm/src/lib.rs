//! Browser bindings for the demo page in `www/`.
//!
//! The page shows the demo hand from above (it is a flat sheet at z = 0)
//! and offers three operations on a single patch: paint it with a click,
//! drag it across the surface, and rotate it about its first axis point.
//! Everything runs through [`EditSession`], so failed edits leave the patch
//! as it was and `undo` walks back through the history.
//!
//! Errors cross the boundary as strings, which keeps the type usable from
//! native tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use contactkit::editing::EditSession;
use contactkit::mesh::parse_obj;
use contactkit::{Mesh, SurfacePoint};
use nalgebra::Point3;
use wasm_bindgen::prelude::*;

const HAND: &str = include_str!("../../../data/demo/hand.obj");
const MESH: &str = "hand";
const PATCH: &str = "patch";

fn text(e: contactkit::Error) -> String {
    format!("{}: {e}", e.code())
}

#[wasm_bindgen]
pub struct Editor {
    mesh: Arc<Mesh>,
    session: EditSession,
}

#[wasm_bindgen]
impl Editor {
    /// An editor over the bundled demo hand.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Editor, String> {
        Editor::from_obj(HAND)
    }

    /// An editor over any OBJ text.
    pub fn from_obj(obj: &str) -> Result<Editor, String> {
        let mesh = Arc::new(parse_obj(obj).map_err(text)?);
        let session = EditSession::new(BTreeMap::from([(MESH.to_string(), mesh.clone())]));
        Ok(Editor { mesh, session })
    }

    /// Vertex positions as `x, y, z` triples.
    pub fn positions(&self) -> Vec<f32> {
        self.mesh.positions().iter().flat_map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect()
    }

    /// Triangle vertex indices.
    pub fn indices(&self) -> Vec<u32> {
        self.mesh.faces().iter().flatten().map(|&i| i as u32).collect()
    }

    pub fn has_patch(&self) -> bool {
        self.session.patch(PATCH).is_ok()
    }

    /// Replaces the patch with the surface points inside a disc around the
    /// point closest to `(x, y, z)`, with the default axis.
    pub fn paint(&mut self, x: f64, y: f64, z: f64, radius: f64) -> Result<usize, String> {
        let center = Point3::new(x, y, z);
        let mut points: Vec<SurfacePoint> = Vec::new();
        let steps = 6;
        for i in -steps..=steps {
            for j in -steps..=steps {
                let (u, v) = (i as f64 / steps as f64, j as f64 / steps as f64);
                if u * u + v * v > 1.0 {
                    continue;
                }
                let q = center + nalgebra::Vector3::new(u * radius, v * radius, 0.0);
                let p = self.mesh.closest_point(&q);
                let at = self.mesh.position_of(&p).map_err(text)?;
                if (at - q).norm() < 1e-6 * radius.max(1.0) && !points.contains(&p) {
                    points.push(p);
                }
            }
        }
        if points.len() < 2 {
            return Err("paint inside the surface".into());
        }
        if self.has_patch() {
            self.session.remove_patch(PATCH).map_err(text)?;
        }
        if let Err(e) = self.session.create_patch(PATCH, MESH, &points, None) {
            self.session.undo().ok();
            return Err(text(e));
        }
        Ok(points.len())
    }

    /// Drags the patch along the shortest path between two surface
    /// positions.
    pub fn translate(&mut self, x0: f64, y0: f64, z0: f64, x1: f64, y1: f64, z1: f64) -> Result<(), String> {
        let from = self.mesh.closest_point(&Point3::new(x0, y0, z0));
        let to = self.mesh.closest_point(&Point3::new(x1, y1, z1));
        self.session.translate(PATCH, &from, &to).map_err(text)?;
        Ok(())
    }

    /// Rotates the patch by `delta` radians about its first axis point.
    pub fn rotate(&mut self, delta: f64) -> Result<(), String> {
        self.session.rotate(PATCH, delta).map_err(text)?;
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), String> {
        self.session.undo().map_err(text)
    }

    /// Patch point positions as `x, y, z` triples. Points that left the
    /// surface are NaN.
    pub fn patch_points(&self) -> Vec<f32> {
        let Ok(patch) = self.session.patch(PATCH) else {
            return Vec::new();
        };
        patch
            .points
            .iter()
            .flat_map(|p| match p.and_then(|p| self.mesh.position_of(&p).ok()) {
                Some(q) => [q.x as f32, q.y as f32, q.z as f32],
                None => [f32::NAN; 3],
            })
            .collect()
    }

    /// Axis polyline as `x, y, z` triples.
    pub fn axis_points(&self) -> Vec<f32> {
        let Ok(patch) = self.session.patch(PATCH) else {
            return Vec::new();
        };
        patch
            .axis
            .points()
            .iter()
            .filter_map(|p| self.mesh.position_of(p).ok())
            .flat_map(|q| [q.x as f32, q.y as f32, q.z as f32])
            .collect()
    }

    pub fn axis_length(&self) -> f64 {
        self.session.patch(PATCH).map_or(0.0, |p| p.axis.total_length())
    }
}
