use serde::Serialize;
use thiserror::Error;

use crate::geodesic::GeodesicPath;
use crate::mesh::SurfacePoint;

/// Errors raised by mesh construction, geodesic queries, contact operations
/// and pose solving.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("OBJ parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("face {face} references vertex {vertex} but the mesh has {count} vertices")]
    VertexOutOfRange {
        face: usize,
        vertex: usize,
        count: usize,
    },

    #[error("face {face} is degenerate: {reason}")]
    DegenerateFace { face: usize, reason: String },

    #[error("nonmanifold edge ({a}, {b}): {reason}")]
    NonManifoldEdge { a: usize, b: usize, reason: String },

    #[error("nonmanifold vertex {vertex}")]
    NonManifoldVertex { vertex: usize },

    #[error("{kind} index {index} out of range (count {count})")]
    ElementOutOfRange {
        kind: &'static str,
        index: usize,
        count: usize,
    },

    #[error("invalid barycentric coordinates: {0}")]
    InvalidBarycentric(String),

    #[error("surface points are on disconnected components")]
    Disconnected,

    #[error("path has zero length; direction is undefined")]
    ZeroLength,

    #[error("trace left the surface at a boundary after {traveled} of {requested}")]
    Truncated {
        traveled: f64,
        requested: f64,
        /// The path up to the point where it left the surface.
        partial: Box<GeodesicPath>,
    },

    #[error("axis segment {segment} left the surface at a boundary")]
    AxisTruncated {
        segment: usize,
        /// Axis points placed before the failing segment.
        partial: Vec<SurfacePoint>,
    },

    #[error("axis needs at least {needed} points, got {got}")]
    AxisTooShort { needed: usize, got: usize },

    #[error("consecutive axis points {index} and {next} coincide", next = index + 1)]
    CoincidentAxisPoints { index: usize },

    #[error("no candidate points supplied")]
    EmptyCandidates,

    #[error("all patch points coincide")]
    CoincidentPatch,

    #[error("pivot index {index} must be interior to an axis of {len} points")]
    InvalidPivot { index: usize, len: usize },

    #[error("unknown patch `{0}`")]
    UnknownPatch(String),

    #[error("patch `{0}` already exists")]
    DuplicatePatch(String),

    #[error("attaching `{child}` to `{parent}` would create a cycle")]
    HierarchyCycle { parent: String, child: String },

    #[error("patch `{patch}` lives on mesh `{found}`, expected `{expected}`")]
    MeshMismatch {
        patch: String,
        expected: String,
        found: String,
    },

    #[error("patch `{0}` has no axis")]
    MissingAxis(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("invalid skin binding: {0}")]
    InvalidBinding(String),

    #[error("contact pair {index}: {reason}")]
    InvalidContact { index: usize, reason: String },

    #[error("objective is not finite")]
    NonFinite,

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("nothing to undo")]
    EmptyJournal,
}

impl Error {
    /// Stable machine-readable code for structured error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::DegenerateFace { .. } => "degenerate_face",
            Error::NonManifoldEdge { .. } => "nonmanifold_edge",
            Error::NonManifoldVertex { .. } => "nonmanifold_vertex",
            Error::ElementOutOfRange { .. } => "element_out_of_range",
            Error::InvalidBarycentric(_) => "invalid_barycentric",
            Error::Disconnected => "disconnected",
            Error::ZeroLength => "zero_length",
            Error::Truncated { .. } => "truncated",
            Error::AxisTruncated { .. } => "axis_truncated",
            Error::AxisTooShort { .. } => "axis_too_short",
            Error::CoincidentAxisPoints { .. } => "coincident_axis_points",
            Error::EmptyCandidates => "empty_candidates",
            Error::CoincidentPatch => "coincident_patch",
            Error::InvalidPivot { .. } => "invalid_pivot",
            Error::UnknownPatch(_) => "unknown_patch",
            Error::DuplicatePatch(_) => "duplicate_patch",
            Error::HierarchyCycle { .. } => "hierarchy_cycle",
            Error::MeshMismatch { .. } => "mesh_mismatch",
            Error::MissingAxis(_) => "missing_axis",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidSkeleton(_) => "invalid_skeleton",
            Error::InvalidBinding(_) => "invalid_binding",
            Error::InvalidContact { .. } => "invalid_contact",
            Error::NonFinite => "non_finite",
            Error::InvalidScene(_) => "invalid_scene",
            Error::EmptyJournal => "empty_journal",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            code: self.code(),
            message: self.to_string(),
        }
    }
}

/// Serializable form of an [`Error`], used by the CLI and the HTTP service.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub code: &'static str,
    pub message: String,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
