//! HTTP sessions over the contact editing and pose fitting library.
//!
//! A session owns one uploaded scene and an editing session over its
//! patches. Every committed mutation increments the session revision and
//! returns it. A mutating request may carry the revision it was based on;
//! a mismatch is rejected with 409 so a confused client fails loudly.
//!
//! Solves run on a blocking worker against a snapshot of the scene and are
//! polled. A finished solve stores its pose only if nothing else changed
//! the session in the meantime.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | upload `{scene, files}`, returns `{id, revision}` |
//! | GET | `/sessions/{id}` | scene file and revision |
//! | DELETE | `/sessions/{id}` | drop the session, cancelling any solve |
//! | GET | `/sessions/{id}/mesh/{role}` | binary mesh buffers, see [`buffers`] |
//! | POST | `/sessions/{id}/patches` | create a patch from a point list |
//! | GET | `/sessions/{id}/patches/{pid}` | patch with world positions |
//! | POST | `/sessions/{id}/patches/{pid}/axis` | set the axis, or the default axis |
//! | POST | `/sessions/{id}/patches/{pid}/transfer` | transfer to the other mesh |
//! | POST | `/sessions/{id}/patches/{pid}/translate` | drag along a geodesic |
//! | POST | `/sessions/{id}/patches/{pid}/rotate` | rotate about the first axis point |
//! | POST | `/sessions/{id}/patches/{pid}/deform` | bend the axis at a pivot |
//! | POST | `/sessions/{id}/undo` | revert the last edit |
//! | POST | `/sessions/{id}/solve` | start a solve, returns `{solve_id}` |
//! | GET | `/sessions/{id}/solve/{sid}` | `{status, iteration, objective, pose?}` |
//! | DELETE | `/sessions/{id}/solve/{sid}` | request cancellation |
//!
//! Points in request bodies are either surface points (`"f:12:0.2,0.3,0.5"`
//! or the record form) or `[x, y, z]` positions, which snap to the closest
//! surface point.

pub mod buffers;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use contactkit::contact::Patch;
use contactkit::pose::{solve_observed, SolveConfig, SolveStatus};
use contactkit::scene::{Pairing, Role, Scene, SceneFile};
use contactkit::{Error, Mesh, SurfacePoint};
use nalgebra::Point3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

/// Called with the iteration number from inside every running solve.
pub type SolveHook = Arc<dyn Fn(usize) + Send + Sync>;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
    hook: Option<SolveHook>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    /// State whose solves call `hook` at every iteration.
    pub fn with_solve_hook(hook: SolveHook) -> Self {
        AppState {
            hook: Some(hook),
            ..Self::default()
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

struct Session {
    scene: Scene,
    edit: contactkit::editing::EditSession,
    revision: u64,
    solves: BTreeMap<u64, Arc<SolveSlot>>,
}

impl Session {
    fn check(&self, expected: Option<u64>) -> Result<(), ApiError> {
        match expected {
            Some(r) if r != self.revision => Err(ApiError::Conflict {
                code: "stale_revision",
                message: format!("request is based on revision {r}, session is at {}", self.revision),
                revision: self.revision,
            }),
            _ => Ok(()),
        }
    }

    fn mesh(&self, role: Role) -> Result<Arc<Mesh>, ApiError> {
        self.scene
            .mesh(role)
            .cloned()
            .map_err(|_| ApiError::NotFound(format!("session has no {role} mesh")))
    }

    fn patch_view(&self, id: &str) -> Result<Value, ApiError> {
        let patch = self.edit.patch(id).map_err(ApiError::from)?;
        let mesh = self.edit.mesh(&patch.mesh).map_err(ApiError::from)?;
        Ok(patch_view(id, patch, mesh))
    }

    fn running(&self) -> bool {
        self.solves.values().any(|s| lock(&s.view).status == SolveState::Running)
    }
}

fn patch_view(id: &str, patch: &Patch, mesh: &Mesh) -> Value {
    let at = |p: &SurfacePoint| mesh.position_of(p).ok().map(|x| [x.x, x.y, x.z]);
    json!({
        "id": id,
        "mesh": patch.mesh,
        "positions": patch.points.iter().map(|p| p.as_ref().and_then(at)).collect::<Vec<_>>(),
        "axis_positions": patch.axis.points().iter().map(at).collect::<Vec<_>>(),
        "skipped": patch.skipped(),
        "patch": patch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveState {
    Running,
    Converged,
    IterationLimit,
    Cancelled,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
struct SolveView {
    status: SolveState,
    iteration: usize,
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pose: Option<Vec<f64>>,
    /// Whether the pose was stored in the session.
    committed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    revision: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<contactkit::error::ErrorReport>,
}

struct SolveSlot {
    view: Mutex<SolveView>,
    cancel: AtomicBool,
}

/// Request failures and their status codes.
#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict {
        code: &'static str,
        message: String,
        revision: u64,
    },
    Domain(Error),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownPatch(id) => ApiError::NotFound(format!("no patch {id}")),
            e => ApiError::Domain(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(message) => (StatusCode::NOT_FOUND, json!({"code": "not_found", "message": message})),
            ApiError::Conflict { code, message, revision } => (
                StatusCode::CONFLICT,
                json!({"code": code, "message": message, "revision": revision}),
            ),
            ApiError::Domain(e) => (StatusCode::UNPROCESSABLE_ENTITY, serde_json::to_value(e.report()).expect("report serializes")),
        };
        (status, Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult<T = Json<Value>> = Result<T, ApiError>;

/// A point in a request: a surface point or a position to snap.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointInput {
    Position([f64; 3]),
    Surface(SurfacePoint),
}

impl PointInput {
    fn resolve(&self, mesh: &Mesh) -> Result<SurfacePoint, Error> {
        match self {
            PointInput::Position(x) => Ok(mesh.closest_point(&Point3::from(*x))),
            PointInput::Surface(p) => mesh.validate_point(p),
        }
    }
}

fn resolve_all(points: &[PointInput], mesh: &Mesh) -> Result<Vec<SurfacePoint>, Error> {
    points.iter().map(|p| p.resolve(mesh)).collect()
}

#[derive(Deserialize)]
struct CreateSession {
    scene: SceneFile,
    /// File contents keyed by the references in `scene`.
    #[serde(default)]
    files: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreatePatch {
    revision: Option<u64>,
    id: String,
    #[serde(default = "manipulator")]
    mesh: Role,
    points: Vec<PointInput>,
    axis: Option<Vec<PointInput>>,
}

fn manipulator() -> Role {
    Role::Manipulator
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetAxis {
    revision: Option<u64>,
    /// Axis control points. Omitted or null selects the default axis.
    points: Option<Vec<PointInput>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferRequest {
    revision: Option<u64>,
    /// Id of the new patch. Defaults to `<pid>_<target mesh>`.
    id: Option<String>,
    target_mesh: Option<Role>,
    start: PointInput,
    /// Initial axis direction as an angle in the tangent basis at `start`.
    angle: f64,
    /// Register the pair of patches as a contact. Defaults to true.
    #[serde(default = "yes")]
    pair: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TranslateRequest {
    revision: Option<u64>,
    from: PointInput,
    to: PointInput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RotateRequest {
    revision: Option<u64>,
    angle: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeformRequest {
    revision: Option<u64>,
    pivot: usize,
    angle: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Revision {
    revision: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolveRequest {
    revision: Option<u64>,
    /// Solve the root alone before every joint.
    #[serde(default)]
    staged: bool,
    #[serde(default)]
    from_rest: bool,
    /// Replaces the scene's solve settings.
    config: Option<SolveConfig>,
}

#[derive(Deserialize)]
struct MeshQuery {
    /// `rest` for the undeformed manipulator.
    pose: Option<String>,
}

/// The service routes with permissive CORS.
pub fn router(state: AppState) -> Router {
    app(state, CorsLayer::permissive())
}

pub fn app(state: AppState, cors: CorsLayer) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/mesh/{role}", get(get_mesh))
        .route("/sessions/{id}/patches", post(create_patch))
        .route("/sessions/{id}/patches/{pid}", get(get_patch))
        .route("/sessions/{id}/patches/{pid}/axis", post(set_axis))
        .route("/sessions/{id}/patches/{pid}/transfer", post(transfer))
        .route("/sessions/{id}/patches/{pid}/translate", post(translate))
        .route("/sessions/{id}/patches/{pid}/rotate", post(rotate))
        .route("/sessions/{id}/patches/{pid}/deform", post(deform))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/solve", post(start_solve))
        .route("/sessions/{id}/solve/{sid}", get(get_solve).delete(cancel_solve))
        .layer(DefaultBodyLimit::max(256 << 20))
        .layer(cors)
        .with_state(state)
}

async fn create_session(State(state): State<AppState>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<Value>)> {
    let scene = Scene::resolve(req.scene, &req.files)?;
    let edit = scene.session()?;
    let meshes: serde_json::Map<String, Value> = scene
        .meshes
        .iter()
        .map(|(k, m)| (k.clone(), json!({"vertices": m.num_vertices(), "faces": m.num_faces()})))
        .collect();
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session {
        scene,
        edit,
        revision: 0,
        solves: BTreeMap::new(),
    };
    lock(&state.sessions).insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({"id": id, "revision": 0, "meshes": meshes}))))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let session = state.session(&id)?;
    let s = lock(&session);
    Ok(Json(json!({"id": id, "revision": s.revision, "scene": s.scene.file})))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let session = lock(&state.sessions)
        .remove(&id)
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))?;
    for slot in lock(&session).solves.values() {
        slot.cancel.store(true, Ordering::Relaxed);
    }
    Ok(StatusCode::NO_CONTENT)
}

async fn get_mesh(
    State(state): State<AppState>,
    Path((id, role)): Path<(String, String)>,
    Query(q): Query<MeshQuery>,
) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let s = lock(&session);
    let role: Role = role.parse().map_err(|_| ApiError::NotFound(format!("no mesh role {role}")))?;
    let mesh = s.mesh(role)?;
    let posed = role == Role::Manipulator && q.pose.as_deref() != Some("rest") && s.scene.file.pose.is_some();
    let positions = match (&s.scene.rig, &s.scene.file.pose) {
        (Some((skeleton, binding)), Some(theta)) if posed => {
            let fk = skeleton.forward_kinematics(theta)?;
            contactkit::pose::skin_mesh(mesh.positions(), binding, &binding.bind_inverses(skeleton)?, &fk)?
        }
        _ => mesh.positions().to_vec(),
    };
    let header = json!({
        "role": role,
        "vertices": mesh.num_vertices(),
        "faces": mesh.num_faces(),
        "revision": s.revision,
        "posed": posed,
    });
    let body = buffers::encode(&header, &positions, mesh.faces());
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], body).into_response())
}

/// Runs one edit under the session lock and commits it with a new revision.
fn mutate(
    state: &AppState,
    id: &str,
    expected: Option<u64>,
    f: impl FnOnce(&mut Session) -> Result<Value, ApiError>,
) -> ApiResult {
    let session = state.session(id)?;
    let mut s = lock(&session);
    s.check(expected)?;
    let mut body = f(&mut s)?;
    let st = s.edit.state().clone();
    s.scene.set_state(&st);
    s.revision += 1;
    body["revision"] = json!(s.revision);
    Ok(Json(body))
}

async fn create_patch(State(state): State<AppState>, Path(id): Path<String>, Json(req): Json<CreatePatch>) -> ApiResult {
    mutate(&state, &id, req.revision, |s| {
        let mesh = s.mesh(req.mesh)?;
        let points = resolve_all(&req.points, &mesh)?;
        let axis = req.axis.as_deref().map(|a| resolve_all(a, &mesh)).transpose()?;
        s.edit.create_patch(&req.id, req.mesh.as_str(), &points, axis.as_deref())?;
        Ok(json!({ "patch": s.patch_view(&req.id)? }))
    })
}

async fn get_patch(State(state): State<AppState>, Path((id, pid)): Path<(String, String)>) -> ApiResult {
    let session = state.session(&id)?;
    let s = lock(&session);
    Ok(Json(json!({"revision": s.revision, "patch": s.patch_view(&pid)?})))
}

fn patch_mesh(s: &Session, pid: &str) -> Result<(Role, Arc<Mesh>), ApiError> {
    let role: Role = s.edit.patch(pid)?.mesh.parse()?;
    Ok((role, s.mesh(role)?))
}

async fn set_axis(State(state): State<AppState>, Path((id, pid)): Path<(String, String)>, Json(req): Json<SetAxis>) -> ApiResult {
    mutate(&state, &id, req.revision, |s| {
        let (_, mesh) = patch_mesh(s, &pid)?;
        let axis = req.points.as_deref().map(|a| resolve_all(a, &mesh)).transpose()?;
        s.edit.set_axis(&pid, axis.as_deref())?;
        Ok(json!({ "patch": s.patch_view(&pid)? }))
    })
}

async fn transfer(
    State(state): State<AppState>,
    Path((id, pid)): Path<(String, String)>,
    Json(req): Json<TransferRequest>,
) -> ApiResult {
    mutate(&state, &id, req.revision, |s| {
        let (source, _) = patch_mesh(s, &pid)?;
        let target = req.target_mesh.unwrap_or(match source {
            Role::Manipulator => Role::Object,
            Role::Object => Role::Manipulator,
        });
        let new_id = req.id.unwrap_or_else(|| format!("{pid}_{target}"));
        let mesh = s.mesh(target)?;
        let start = req.start.resolve(&mesh)?;
        s.edit
            .transfer(&pid, &new_id, target.as_str(), &start, Complex64::from_polar(1.0, req.angle))?;
        if req.pair && source != target {
            let (manipulator, object) = match source {
                Role::Manipulator => (pid.clone(), new_id.clone()),
                Role::Object => (new_id.clone(), pid.clone()),
            };
            let contacts = &mut s.scene.file.contacts;
            contacts.retain(|c| c.manipulator != manipulator && c.object != object);
            contacts.push(Pairing {
                manipulator,
                object,
                weights: None,
            });
        }
        Ok(json!({ "patch": s.patch_view(&new_id)?, "contacts": s.scene.file.contacts }))
    })
}

async fn translate(
    State(state): State<AppState>,
    Path((id, pid)): Path<(String, String)>,
    Json(req): Json<TranslateRequest>,
) -> ApiResult {
    mutate(&state, &id, req.revision, |s| {
        let (_, mesh) = patch_mesh(s, &pid)?;
        let (from, to) = (req.from.resolve(&mesh)?, req.to.resolve(&mesh)?);
        s.edit.translate(&pid, &from, &to)?;
        Ok(json!({ "patch": s.patch_view(&pid)? }))
    })
}

async fn rotate(State(state): State<AppState>, Path((id, pid)): Path<(String, String)>, Json(req): Json<RotateRequest>) -> ApiResult {
    mutate(&state, &id, req.revision, |s| {
        s.edit.rotate(&pid, req.angle)?;
        Ok(json!({ "patch": s.patch_view(&pid)? }))
    })
}

async fn deform(State(state): State<AppState>, Path((id, pid)): Path<(String, String)>, Json(req): Json<DeformRequest>) -> ApiResult {
    mutate(&state, &id, req.revision, |s| {
        s.edit.deform(&pid, req.pivot, req.angle)?;
        Ok(json!({ "patch": s.patch_view(&pid)? }))
    })
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>, body: Option<Json<Revision>>) -> ApiResult {
    let req = body.map(|b| b.0).unwrap_or_default();
    mutate(&state, &id, req.revision, |s| {
        s.edit.undo()?;
        Ok(json!({ "patches": s.edit.patches().keys().collect::<Vec<_>>() }))
    })
}

async fn start_solve(State(state): State<AppState>, Path(id): Path<String>, body: Option<Json<SolveRequest>>) -> ApiResult<(StatusCode, Json<Value>)> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let session = state.session(&id)?;
    let (solve_id, slot, problem, start, stages, revision) = {
        let mut s = lock(&session);
        s.check(req.revision)?;
        if s.running() {
            return Err(ApiError::Conflict {
                code: "solve_in_progress",
                message: "a solve is already running in this session".into(),
                revision: s.revision,
            });
        }
        let problem = s.scene.problem()?;
        let config = req.config.unwrap_or_else(|| s.scene.file.solve.clone());
        config.validate(problem.dof_count())?;
        let start = if req.from_rest {
            problem.rest_pose().to_vec()
        } else {
            s.scene.current_pose()?
        };
        let mut stages = Vec::new();
        if req.staged {
            stages.push(config.freezing(config.frozen.iter().copied().chain(problem.skeleton().non_root_dofs())));
        }
        stages.push(config);
        let slot = Arc::new(SolveSlot {
            view: Mutex::new(SolveView {
                status: SolveState::Running,
                iteration: 0,
                objective: None,
                pose: None,
                committed: false,
                revision: None,
                error: None,
            }),
            cancel: AtomicBool::new(false),
        });
        let solve_id = s.solves.keys().next_back().map_or(1, |k| k + 1);
        s.solves.insert(solve_id, slot.clone());
        (solve_id, slot, problem, start, stages, s.revision)
    };
    let hook = state.hook.clone();
    tokio::task::spawn_blocking(move || {
        let mut theta = start;
        let mut offset = 0;
        let mut outcome = Ok((SolveStatus::Converged, f64::NAN));
        for config in &stages {
            let r = solve_observed(&problem, config, &theta, |p| {
                let iteration = offset + p.iteration;
                {
                    let mut v = lock(&slot.view);
                    v.iteration = v.iteration.max(iteration);
                    v.objective = Some(p.objective);
                }
                if let Some(h) = &hook {
                    h(iteration);
                }
                !slot.cancel.load(Ordering::Relaxed)
            });
            match r {
                Ok(r) => {
                    offset += r.iterations;
                    theta = r.theta;
                    outcome = Ok((r.status, r.objective));
                    if r.status == SolveStatus::Cancelled {
                        break;
                    }
                }
                Err(e) => {
                    outcome = Err(e);
                    break;
                }
            }
        }
        let mut s = lock(&session);
        let mut v = lock(&slot.view);
        match outcome {
            Ok((status, objective)) => {
                v.status = match status {
                    SolveStatus::Converged => SolveState::Converged,
                    SolveStatus::IterationLimit => SolveState::IterationLimit,
                    SolveStatus::Cancelled => SolveState::Cancelled,
                };
                v.iteration = v.iteration.max(offset);
                v.objective = Some(objective);
                if status != SolveStatus::Cancelled && s.revision == revision {
                    s.scene.file.pose = Some(theta.clone());
                    s.revision += 1;
                    v.committed = true;
                }
                v.pose = Some(theta);
            }
            Err(e) => {
                v.status = SolveState::Failed;
                v.error = Some(e.report());
            }
        }
        v.revision = Some(s.revision);
    });
    Ok((StatusCode::ACCEPTED, Json(json!({"solve_id": solve_id, "revision": revision}))))
}

fn solve_slot(state: &AppState, id: &str, sid: u64) -> Result<Arc<SolveSlot>, ApiError> {
    let session = state.session(id)?;
    let s = lock(&session);
    s.solves
        .get(&sid)
        .cloned()
        .ok_or_else(|| ApiError::NotFound(format!("no solve {sid}")))
}

async fn get_solve(State(state): State<AppState>, Path((id, sid)): Path<(String, u64)>) -> ApiResult {
    let slot = solve_slot(&state, &id, sid)?;
    let view = lock(&slot.view).clone();
    Ok(Json(serde_json::to_value(view).expect("view serializes")))
}

async fn cancel_solve(State(state): State<AppState>, Path((id, sid)): Path<(String, u64)>) -> ApiResult<(StatusCode, Json<Value>)> {
    let slot = solve_slot(&state, &id, sid)?;
    slot.cancel.store(true, Ordering::Relaxed);
    let view = lock(&slot.view).clone();
    Ok((StatusCode::ACCEPTED, Json(serde_json::to_value(view).expect("view serializes"))))
}
