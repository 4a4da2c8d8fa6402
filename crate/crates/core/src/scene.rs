//! Versioned scene files.
//!
//! A scene names the manipulator and object meshes, the manipulator rig,
//! the patch registry with its hierarchy, the contact pairings between
//! manipulator and object patches, solver settings and the current pose.
//! Referenced files are resolved relative to the scene file, or through any
//! other [`Resolver`].
//!
//! Serialization is deterministic: maps are ordered and no timestamps are
//! written.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contact::Patch;
use crate::editing::{Connection, EditSession, EditState};
use crate::error::{Error, Result};
use crate::mesh::{parse_obj, Mesh};
use crate::pose::{contact_pairs, ContactPair, PoseProblem, SkinBinding, Skeleton, SolveConfig};

/// Current scene format version.
pub const FORMAT_VERSION: u32 = 1;

/// Which side of the contact a mesh is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Manipulator,
    Object,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Manipulator => "manipulator",
            Role::Object => "object",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manipulator" => Ok(Role::Manipulator),
            "object" => Ok(Role::Object),
            other => Err(Error::InvalidScene(format!("unknown mesh role `{other}`"))),
        }
    }
}

/// Files describing the manipulator's skeleton and skin weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigRef {
    pub skeleton: String,
    pub binding: String,
}

/// A manipulator patch paired point-for-point with an object patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub manipulator: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// The on-disk scene document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format: u32,
    /// Mesh file per role.
    pub meshes: BTreeMap<Role, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rig: Option<RigRef>,
    #[serde(default)]
    pub patches: BTreeMap<String, Patch>,
    #[serde(default)]
    pub links: BTreeMap<String, Connection>,
    #[serde(default)]
    pub contacts: Vec<Pairing>,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Vec<f64>>,
}

impl SceneFile {
    pub fn new(meshes: BTreeMap<Role, String>) -> Self {
        SceneFile {
            format: FORMAT_VERSION,
            meshes,
            rig: None,
            patches: BTreeMap::new(),
            links: BTreeMap::new(),
            contacts: Vec::new(),
            solve: SolveConfig::default(),
            pose: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::InvalidScene(e.to_string()))?;
        if file.format != FORMAT_VERSION {
            return Err(Error::InvalidScene(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                file.format
            )));
        }
        Ok(file)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }
}

/// Supplies the contents of files referenced by a scene.
pub trait Resolver {
    fn read(&self, reference: &str) -> Result<String>;
}

/// Resolves references as paths relative to a directory.
#[derive(Debug, Clone)]
pub struct DirResolver(pub PathBuf);

impl Resolver for DirResolver {
    fn read(&self, reference: &str) -> Result<String> {
        let path = self.0.join(reference);
        std::fs::read_to_string(&path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Resolves references from an in-memory map.
impl Resolver for BTreeMap<String, String> {
    fn read(&self, reference: &str) -> Result<String> {
        self.get(reference).cloned().ok_or_else(|| Error::Io {
            path: reference.to_string(),
            message: "not provided".into(),
        })
    }
}

/// A scene with its meshes and rig loaded.
#[derive(Debug, Clone)]
pub struct Scene {
    pub file: SceneFile,
    pub meshes: BTreeMap<String, Arc<Mesh>>,
    pub rig: Option<(Skeleton, SkinBinding)>,
}

impl Scene {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scene::resolve(SceneFile::from_json(&text)?, &DirResolver(dir))
    }

    /// Loads every referenced file and checks cross references.
    pub fn resolve(file: SceneFile, resolver: &impl Resolver) -> Result<Self> {
        let mut meshes = BTreeMap::new();
        for (role, reference) in &file.meshes {
            let mesh = parse_obj(&resolver.read(reference)?).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{reference}: {message}"),
                },
                other => other,
            })?;
            meshes.insert(role.to_string(), Arc::new(mesh));
        }
        let rig = match &file.rig {
            None => None,
            Some(r) => {
                let skeleton: Skeleton = serde_json::from_str(&resolver.read(&r.skeleton)?)
                    .map_err(|e| Error::InvalidSkeleton(format!("{}: {e}", r.skeleton)))?;
                let binding: SkinBinding = serde_json::from_str(&resolver.read(&r.binding)?)
                    .map_err(|e| Error::InvalidBinding(format!("{}: {e}", r.binding)))?;
                let manipulator = meshes
                    .get(Role::Manipulator.as_str())
                    .ok_or_else(|| Error::InvalidScene("a rig needs a manipulator mesh".into()))?;
                binding.validate(&skeleton, manipulator.num_vertices())?;
                Some((skeleton, binding))
            }
        };
        let scene = Scene { file, meshes, rig };
        // Validates patches and links against the meshes.
        scene.session()?;
        for (i, c) in scene.file.contacts.iter().enumerate() {
            for (id, role) in [(&c.manipulator, Role::Manipulator), (&c.object, Role::Object)] {
                let p = scene
                    .file
                    .patches
                    .get(id)
                    .ok_or_else(|| Error::InvalidScene(format!("contact {i}: unknown patch `{id}`")))?;
                if p.mesh != role.as_str() {
                    return Err(Error::MeshMismatch {
                        patch: id.clone(),
                        expected: role.to_string(),
                        found: p.mesh.clone(),
                    });
                }
            }
        }
        if let (Some(pose), Some((s, _))) = (&scene.file.pose, &scene.rig) {
            s.check_pose(pose)?;
        }
        Ok(scene)
    }

    pub fn mesh(&self, role: Role) -> Result<&Arc<Mesh>> {
        self.meshes
            .get(role.as_str())
            .ok_or_else(|| Error::InvalidScene(format!("scene has no {role} mesh")))
    }

    /// An editing session over the scene's patches.
    pub fn session(&self) -> Result<EditSession> {
        EditSession::with_state(
            self.meshes.clone(),
            EditState {
                patches: self.file.patches.clone(),
                links: self.file.links.clone(),
            },
        )
    }

    /// Stores an editing state back into the scene.
    pub fn set_state(&mut self, state: &EditState) {
        self.file.patches = state.patches.clone();
        self.file.links = state.links.clone();
    }

    /// Contact pairs from every pairing, in order.
    pub fn contact_pairs(&self) -> Result<Vec<ContactPair>> {
        let hand = self.mesh(Role::Manipulator)?;
        let object = self.mesh(Role::Object)?;
        let mut out = Vec::new();
        for c in &self.file.contacts {
            let h = &self.file.patches[&c.manipulator];
            let o = &self.file.patches[&c.object];
            out.extend(contact_pairs(hand, h, object, o, c.weights.as_deref())?);
        }
        Ok(out)
    }

    /// The pose-fitting problem defined by the rig and the pairings.
    pub fn problem(&self) -> Result<PoseProblem> {
        let (skeleton, binding) = self
            .rig
            .clone()
            .ok_or_else(|| Error::InvalidScene("scene has no rig".into()))?;
        PoseProblem::new(skeleton, binding, self.mesh(Role::Manipulator)?, &self.contact_pairs()?)
    }

    /// The stored pose, or the rest pose.
    pub fn current_pose(&self) -> Result<Vec<f64>> {
        match (&self.file.pose, &self.rig) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some((s, _))) => Ok(s.rest_pose()),
            (None, None) => Err(Error::InvalidScene("scene has no rig".into())),
        }
    }
}
