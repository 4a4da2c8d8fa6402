//! `contactkit`: file-to-file contact editing and pose solving.
//!
//! Every subcommand reads a scene file, applies one operation and writes
//! the scene back (in place unless `--out` is given). Surface points are
//! written `v:index`, `e:index:a,b` or `f:index:a,b,c`, or `@x,y,z` for the
//! surface point closest to a world position. Angles are in radians.
//!
//! Exit status is 0 on success, 1 when the operation fails on the data and
//! 2 on usage errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::PointSpec;

#[derive(Debug, Parser)]
#[command(name = "contactkit", version, about = "Contact patch editing and pose fitting")]
struct Cli {
    /// Print machine-readable JSON results on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Scene file to read.
    #[arg(long)]
    scene: PathBuf,
    /// Where to write the updated scene. Defaults to overwriting `--scene`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a patch from surface points and parameterize it against an
    /// axis (the farthest-pair geodesic unless `--axis` is given).
    Parameterize {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        patch: String,
        /// Mesh role the patch lives on.
        #[arg(long, default_value = "manipulator")]
        mesh: String,
        /// Patch points separated by `;`.
        #[arg(long, value_delimiter = ';', required_unless_present = "points_file")]
        points: Vec<PointSpec>,
        /// JSON array of surface points.
        #[arg(long, conflicts_with = "points")]
        points_file: Option<PathBuf>,
        /// Axis control points separated by `;`.
        #[arg(long, value_delimiter = ';')]
        axis: Vec<PointSpec>,
    },
    /// Replace a patch's axis with the farthest-pair geodesic.
    DefaultAxis {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        patch: String,
    },
    /// Transfer a patch onto the other mesh, mirrored.
    Transfer {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        patch: String,
        /// Id of the transferred patch. Defaults to `<patch>_<target mesh>`.
        #[arg(long = "as")]
        new_id: Option<String>,
        /// Target mesh role. Defaults to the other mesh.
        #[arg(long)]
        target_mesh: Option<String>,
        /// Start of the transferred axis.
        #[arg(long)]
        target_point: PointSpec,
        /// Initial axis direction, as an angle in the tangent basis at the
        /// target point.
        #[arg(long, allow_hyphen_values = true)]
        target_angle: f64,
        /// Do not register the two patches as a contact pairing.
        #[arg(long)]
        no_pair: bool,
    },
    /// Drag a patch along the shortest geodesic between two points.
    Translate {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        patch: String,
        #[arg(long)]
        from: PointSpec,
        #[arg(long)]
        to: PointSpec,
    },
    /// Rotate a patch about its first axis point.
    Rotate {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        patch: String,
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
    },
    /// Bend a patch axis at an interior point (0-based index).
    Deform {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        patch: String,
        #[arg(long)]
        pivot: usize,
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
    },
    /// Attach a child patch to a parent so it follows the parent's edits.
    Attach {
        #[command(flatten)]
        io: SceneArgs,
        #[arg(long)]
        parent: String,
        #[arg(long)]
        child: String,
    },
    /// Fit the manipulator pose to the scene's contact pairings.
    Solve {
        #[command(flatten)]
        io: SceneArgs,
        /// Write the objective per iteration as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Solve the root alone first, then every joint.
        #[arg(long)]
        staged: bool,
        /// Start from the rest pose instead of the stored pose.
        #[arg(long)]
        from_rest: bool,
    },
    /// Check a mesh or a scene for problems.
    Validate {
        #[arg(long, required_unless_present = "scene", conflicts_with = "scene")]
        mesh: Option<PathBuf>,
        #[arg(long)]
        scene: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                println!("{}", commands::summary(&report));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if cli.json {
                let body = serde_json::json!({ "error": e.report() });
                println!("{}", serde_json::to_string_pretty(&body).expect("error serializes"));
            }
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
