use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use contactkit::editing::EditSession;
use contactkit::mesh::load_obj;
use contactkit::pose::{solve, staged_solve, SolveResult};
use contactkit::scene::{Pairing, Role, Scene};
use contactkit::{Error, Mesh, Result, SurfacePoint};
use nalgebra::Point3;
use num_complex::Complex64;
use serde_json::{json, Value};

use super::{Command, SceneArgs};

/// A surface point given directly or as the point closest to a position.
#[derive(Debug, Clone)]
pub enum PointSpec {
    Surface(SurfacePoint),
    Near(Point3<f64>),
}

impl FromStr for PointSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('@') {
            let c: Vec<f64> = rest
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
                .collect::<std::result::Result<_, _>>()?;
            if c.len() != 3 {
                return Err(format!("`{s}`: expected @x,y,z"));
            }
            return Ok(PointSpec::Near(Point3::new(c[0], c[1], c[2])));
        }
        s.parse::<SurfacePoint>().map(PointSpec::Surface).map_err(|e| e.to_string())
    }
}

impl PointSpec {
    fn resolve(&self, mesh: &Mesh) -> Result<SurfacePoint> {
        match self {
            PointSpec::Surface(p) => mesh.validate_point(p),
            PointSpec::Near(x) => Ok(mesh.closest_point(x)),
        }
    }
}

fn role(s: &str) -> Result<Role> {
    s.parse()
}

fn other(r: Role) -> Role {
    match r {
        Role::Manipulator => Role::Object,
        Role::Object => Role::Manipulator,
    }
}

pub fn run(command: Command) -> Result<Value> {
    match command {
        Command::Parameterize {
            io,
            patch,
            mesh,
            points,
            points_file,
            axis,
        } => edit(&io, |scene, session| {
            let r = role(&mesh)?;
            let m = scene.mesh(r)?.clone();
            let pts: Vec<SurfacePoint> = match points_file {
                Some(path) => {
                    let text = read(&path)?;
                    serde_json::from_str(&text).map_err(|e| Error::InvalidScene(format!("{}: {e}", path.display())))?
                }
                None => points.iter().map(|p| p.resolve(&m)).collect::<Result<_>>()?,
            };
            let axis_pts: Vec<SurfacePoint> = axis.iter().map(|p| p.resolve(&m)).collect::<Result<_>>()?;
            let p = session.create_patch(&patch, r.as_str(), &pts, (!axis_pts.is_empty()).then_some(&axis_pts[..]))?;
            Ok(json!({
                "command": "parameterize",
                "patch": patch,
                "mesh": r,
                "points": p.points.len(),
                "axis_points": p.axis.len(),
                "axis_length": p.axis.total_length(),
            }))
        }),
        Command::DefaultAxis { io, patch } => edit(&io, |_, session| {
            let p = session.set_axis(&patch, None)?;
            Ok(json!({
                "command": "default-axis",
                "patch": patch,
                "axis_points": p.axis.len(),
                "axis_length": p.axis.total_length(),
            }))
        }),
        Command::Transfer {
            io,
            patch,
            new_id,
            target_mesh,
            target_point,
            target_angle,
            no_pair,
        } => edit(&io, |scene, session| {
            let source = role(&session.patch(&patch)?.mesh)?;
            let target = match target_mesh {
                Some(t) => role(&t)?,
                None => other(source),
            };
            let id = new_id.unwrap_or_else(|| format!("{patch}_{target}"));
            let m = scene.mesh(target)?.clone();
            let start = target_point.resolve(&m)?;
            let t = session.transfer(&patch, &id, target.as_str(), &start, Complex64::from_polar(1.0, target_angle))?;
            if !no_pair && source != target {
                let (manipulator, object) = match source {
                    Role::Manipulator => (patch.clone(), id.clone()),
                    Role::Object => (id.clone(), patch.clone()),
                };
                scene.file.contacts.retain(|c| c.manipulator != manipulator && c.object != object);
                scene.file.contacts.push(Pairing {
                    manipulator,
                    object,
                    weights: None,
                });
            }
            Ok(json!({
                "command": "transfer",
                "patch": id,
                "mesh": target,
                "start": start,
                "skipped": t.skipped,
            }))
        }),
        Command::Translate { io, patch, from, to } => edit(&io, |scene, session| {
            let m = scene.mesh(role(&session.patch(&patch)?.mesh)?)?.clone();
            let (a, b) = (from.resolve(&m)?, to.resolve(&m)?);
            let p = session.translate(&patch, &a, &b)?;
            Ok(json!({ "command": "translate", "patch": patch, "start": p.axis.start(), "skipped": p.skipped() }))
        }),
        Command::Rotate { io, patch, angle } => edit(&io, |_, session| {
            let p = session.rotate(&patch, angle)?;
            Ok(json!({ "command": "rotate", "patch": patch, "skipped": p.skipped() }))
        }),
        Command::Deform { io, patch, pivot, angle } => edit(&io, |_, session| {
            let p = session.deform(&patch, pivot, angle)?;
            Ok(json!({ "command": "deform", "patch": patch, "pivot": pivot, "skipped": p.skipped() }))
        }),
        Command::Attach { io, parent, child } => edit(&io, |_, session| {
            let link = session.attach(&parent, &child)?;
            Ok(json!({ "command": "attach", "parent": parent, "child": child, "connection": link }))
        }),
        Command::Solve {
            io,
            trace,
            staged,
            from_rest,
        } => {
            let mut scene = Scene::load(&io.scene)?;
            let problem = scene.problem()?;
            let mut config = scene.file.solve.clone();
            config.trace |= trace.is_some();
            let start = if from_rest {
                problem.rest_pose().to_vec()
            } else {
                scene.current_pose()?
            };
            let results: Vec<SolveResult> = if staged {
                let stages = [
                    config.freezing(config.frozen.iter().copied().chain(problem.skeleton().non_root_dofs())),
                    config.clone(),
                ];
                staged_solve(&problem, &stages, &start)?.stages
            } else {
                vec![solve(&problem, &config, &start)?]
            };
            let last = results.last().expect("at least one stage");
            if let Some(path) = &trace {
                let mut csv = String::from("iteration,objective\n");
                let mut offset = 0;
                for r in &results {
                    for &(i, f) in r.trace.iter().filter(|(i, _)| offset == 0 || *i > 0) {
                        csv.push_str(&format!("{},{f:e}\n", offset + i));
                    }
                    offset += r.iterations;
                }
                write(path, &csv)?;
            }
            scene.file.pose = Some(last.theta.clone());
            save(&scene, &io)?;
            Ok(json!({
                "command": "solve",
                "objective": last.objective,
                "iterations": results.iter().map(|r| r.iterations).sum::<usize>(),
                "status": last.status,
                "stages": results.iter().map(|r| json!({"objective": r.objective, "iterations": r.iterations, "status": r.status})).collect::<Vec<_>>(),
                "contacts": problem.contact_count(),
                "distances": problem.contact_distances(&last.theta)?,
            }))
        }
        Command::Validate { mesh, scene } => {
            if let Some(path) = mesh {
                let m = load_obj(&path)?;
                let boundary = (0..m.num_vertices()).filter(|&v| m.is_boundary_vertex(v)).count();
                Ok(json!({
                    "command": "validate",
                    "mesh": path.display().to_string(),
                    "vertices": m.num_vertices(),
                    "faces": m.num_faces(),
                    "edges": m.num_edges(),
                    "boundary_vertices": boundary,
                    "warnings": m.warnings(),
                }))
            } else {
                let path = scene.expect("clap requires --mesh or --scene");
                let s = Scene::load(&path)?;
                if s.rig.is_some() && s.meshes.contains_key(Role::Object.as_str()) {
                    s.problem()?;
                }
                Ok(json!({
                    "command": "validate",
                    "scene": path.display().to_string(),
                    "meshes": s.meshes.iter().map(|(k, m)| (k.clone(), json!({"vertices": m.num_vertices(), "faces": m.num_faces()}))).collect::<serde_json::Map<_, _>>(),
                    "patches": s.file.patches.keys().collect::<Vec<_>>(),
                    "contacts": s.file.contacts.len(),
                }))
            }
        }
    }
}

/// One-line human summary of a command report.
pub fn summary(report: &Value) -> String {
    let command = report["command"].as_str().unwrap_or("");
    let mut parts = vec![format!("{command}: ok")];
    if let Some(obj) = report.as_object() {
        for (k, v) in obj {
            if k == "command" || v.is_object() || (v.is_array() && v.as_array().is_some_and(|a| a.len() > 8)) {
                continue;
            }
            parts.push(format!("{k}={v}"));
        }
    }
    parts.join(" ")
}

/// Loads the scene, runs `f` on an editing session and saves the result.
fn edit(io: &SceneArgs, f: impl FnOnce(&mut Scene, &mut EditSession) -> Result<Value>) -> Result<Value> {
    let mut scene = Scene::load(&io.scene)?;
    let mut session = scene.session()?;
    let report = f(&mut scene, &mut session)?;
    scene.set_state(session.state());
    save(&scene, io)?;
    Ok(report)
}

fn save(scene: &Scene, io: &SceneArgs) -> Result<()> {
    let mut file = scene.file.clone();
    if let Some(out) = &io.out {
        let from = absolute(io.scene.parent().unwrap_or(Path::new("")))?;
        let to = absolute(out.parent().unwrap_or(Path::new("")))?;
        if from != to {
            let rebase = |r: &mut String| -> Result<()> {
                *r = relative(&from.join(&*r), &to).display().to_string();
                Ok(())
            };
            for r in file.meshes.values_mut() {
                rebase(r)?;
            }
            if let Some(rig) = &mut file.rig {
                rebase(&mut rig.skeleton)?;
                rebase(&mut rig.binding)?;
            }
        }
    }
    write(io.out.as_ref().unwrap_or(&io.scene), &file.to_json())
}

fn absolute(p: &Path) -> Result<PathBuf> {
    let p = if p.as_os_str().is_empty() { Path::new(".") } else { p };
    std::path::absolute(p).map(|p| normalize(&p)).map_err(|e| Error::Io {
        path: p.display().to_string(),
        message: e.to_string(),
    })
}

fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// `target` expressed relative to directory `base` (both absolute).
fn relative(target: &Path, base: &Path) -> PathBuf {
    let target = normalize(target);
    let t: Vec<_> = target.components().collect();
    let b: Vec<_> = base.components().collect();
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &t[common..] {
        out.push(c);
    }
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
