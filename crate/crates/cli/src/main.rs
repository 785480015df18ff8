//! `physdyn`: mass properties, forward kinematics, force inference and
//! plausibility reports from the command line.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use physdyn_core::ResidualMode;

#[derive(Debug, Parser)]
#[command(name = "physdyn", version, about = "Articulated-body dynamics from meshes and motion")]
struct Cli {
    /// Gravitational acceleration in m/s².
    #[arg(long, global = true, env = "PHYSDYN_GRAVITY", default_value_t = physdyn_core::STANDARD_GRAVITY)]
    gravity: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-part volume, mass, centre of mass and inertia.
    Massprops {
        #[command(flatten)]
        body: BodyArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Joint and contact-point positions for every frame of a motion.
    Fk {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long)]
        motion: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Contact forces and joint actuations for every frame of a motion.
    Infer {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long)]
        motion: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Plausibility metrics of a predicted motion.
    Metrics {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth motion, needed for ACCL and VEL.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Comma-separated subset of accl, vel, fs, gp, bos.
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reconstruction, force, contact and Euler-Lagrange losses.
    Losses {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Label forces as written by `infer`.
        #[arg(long)]
        forces: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Writes the built-in 24-part humanoid and a standing motion.
    Humanoid {
        /// Body file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write a motionless standing sequence here.
        #[arg(long)]
        standing_motion: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
    },
}

#[derive(Debug, Args)]
struct BodyArgs {
    #[arg(long)]
    body: PathBuf,
    /// Close open part meshes along their boundary loops before use.
    #[arg(long)]
    close: bool,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value = "full-residual", value_parser = parse_mode)]
    mode: ResidualMode,
    /// QP algorithm by registry name.
    #[arg(long, default_value = "active-set")]
    qp: String,
    /// Upper bound on the stiffness parameters (N); defaults to half the body weight.
    #[arg(long)]
    k_max: Option<f64>,
    /// Upper bound on the damping parameter (N·s/m).
    #[arg(long)]
    damping_max: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

fn parse_mode(s: &str) -> Result<ResidualMode, String> {
    s.parse().map_err(|e: physdyn_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(warnings) => {
            if warnings > 0 {
                eprintln!("physdyn: completed with {warnings} warning(s)");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("physdyn: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
