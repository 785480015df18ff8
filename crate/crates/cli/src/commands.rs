use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use nalgebra::{DVector, Vector3};

use physdyn_core::humanoid;
use physdyn_core::losses::{
    contact_frames, contact_loss, contact_sets_from_forces, euler_lagrange_loss, force_loss, reconstruction_loss,
    LossReport, LossWeights,
};
use physdyn_core::mass::{body_mass_properties, compensated_sum, total_mass};
use physdyn_core::metrics::{plausibility_metrics, Metric};
use physdyn_core::solver::FrameOutcome;
use physdyn_core::{forward_kinematics, solve_sequence, Error, Model, MotionSequence, RestBody, SolverConfig};

use crate::files::{
    arr3, row_major, to_vec, write_json, ForceRecord, ForceUnits, ForcesFile, MassPropsFile, PartRecord, PoseDump,
    MASS_UNITS,
};
use crate::{BodyArgs, Cli, Command, SolverArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A numeric failure reported as text, such as a per-frame solve error.
    Numeric(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Numeric(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

/// Runs one command and returns the number of warnings it produced.
pub fn run(cli: Cli) -> CliResult<usize> {
    if !(cli.gravity.is_finite() && cli.gravity >= 0.0) {
        return Err(CliError::Usage(format!("--gravity must be a non-negative number, got {}", cli.gravity)));
    }
    let g = cli.gravity;
    match cli.command {
        Command::Massprops { body, out } => massprops(&load_body(&body)?, out.out.as_deref()),
        Command::Fk { body, motion, out } => fk(&load_body(&body)?, &motion, out.out.as_deref()),
        Command::Infer {
            body,
            motion,
            solver,
            workers,
            out,
        } => {
            let model = Model::new(load_body(&body)?, g)?;
            let seq = MotionSequence::load(&motion, &model.body.tree)?;
            let config = solver_config(&model, &solver)?;
            let outcomes = in_pool(workers, || solve_sequence(&seq, &model, &config))??;
            let file = forces_file(&model, &seq, &config, g, &outcomes);
            write_json(&file, out.out.as_deref())?;
            Ok(file.warnings)
        }
        Command::Metrics {
            body,
            pred,
            gt,
            metrics,
            out,
        } => {
            let model = Model::new(load_body(&body)?, g)?;
            let requested = requested_metrics(metrics.as_deref(), gt.is_some())?;
            if gt.is_none() && requested.iter().any(Metric::needs_ground_truth) {
                return Err(CliError::Usage("ACCL and VEL need a ground-truth motion: pass --gt".into()));
            }
            let pred = MotionSequence::load(&pred, &model.body.tree)?;
            let gt = gt.map(|p| MotionSequence::load(&p, &model.body.tree)).transpose()?;
            let report = plausibility_metrics(&model, &pred, gt.as_ref(), &requested)?;
            write_json(&report, out.out.as_deref())?;
            Ok(0)
        }
        Command::Losses {
            body,
            pred,
            gt,
            forces,
            solver,
            workers,
            out,
        } => {
            let model = Model::new(load_body(&body)?, g)?;
            let pred = MotionSequence::load(&pred, &model.body.tree)?;
            let gt = MotionSequence::load(&gt, &model.body.tree)?;
            let (lambda_label, tau_label) = ForcesFile::load(&forces)?.labels()?;
            let config = solver_config(&model, &solver)?;
            let report = in_pool(workers, || losses(&model, &pred, &gt, &lambda_label, &tau_label, &config))??;
            write_json(&report, out.out.as_deref())?;
            Ok(0)
        }
        Command::Humanoid {
            out,
            standing_motion,
            frames,
            fps,
        } => {
            let body = humanoid::humanoid_body();
            write_json(&body.to_file(), Some(&out))?;
            if let Some(path) = standing_motion {
                let seq = humanoid::standing_motion(&body, frames, fps)?;
                write_json(&seq.to_file(&body.tree), Some(&path))?;
            }
            Ok(0)
        }
    }
}

fn load_body(args: &BodyArgs) -> CliResult<RestBody> {
    let body = RestBody::load(&args.body)?;
    Ok(if args.close { body.closed()? } else { body })
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn solver_config(model: &Model, args: &SolverArgs) -> CliResult<SolverConfig> {
    let mut config = SolverConfig::for_model(model, args.mode);
    for (i, bound) in config.x_max.iter_mut().enumerate() {
        let over = if i % 3 == 2 { args.damping_max } else { args.k_max };
        if let Some(v) = over {
            *bound = v;
        }
    }
    config.algorithm = args.qp.clone();
    config.max_iter = args.max_iter;
    config.validate()?;
    physdyn_core::SolverRegistry::builtin().get(&config.algorithm)?;
    Ok(config)
}

fn massprops(body: &RestBody, out: Option<&Path>) -> CliResult<usize> {
    let props = body_mass_properties(body)?;
    let total = total_mass(&props);
    let com = props.iter().map(|p| p.com * p.mass).sum::<Vector3<f64>>() / total;
    let file = MassPropsFile {
        units: MASS_UNITS,
        parts: props
            .iter()
            .enumerate()
            .map(|(part, p)| PartRecord {
                part,
                volume: p.volume,
                mass: p.mass,
                com: arr3(&p.com),
                inertia: row_major(&p.inertia),
            })
            .collect(),
        total_mass_kg: total,
        total_volume_m3: compensated_sum(props.iter().map(|p| p.volume)),
        com_m: arr3(&com),
    };
    write_json(&file, out)?;
    Ok(0)
}

fn fk(body: &RestBody, motion: &Path, out: Option<&Path>) -> CliResult<usize> {
    let seq = MotionSequence::load(motion, &body.tree)?;
    let mut joints = Vec::with_capacity(seq.len());
    let mut contacts = Vec::with_capacity(seq.len());
    for q in &seq.frames {
        let pose = forward_kinematics(q, body)?;
        joints.push(pose.joints.iter().map(arr3).collect());
        contacts.push(pose.contacts.iter().map(arr3).collect());
    }
    let dump = PoseDump {
        motion: seq.to_file(&body.tree),
        units: "m",
        joints,
        contacts,
    };
    write_json(&dump, out)?;
    Ok(0)
}

fn forces_file(
    model: &Model,
    seq: &MotionSequence,
    config: &SolverConfig,
    gravity: f64,
    outcomes: &[FrameOutcome],
) -> ForcesFile {
    let frames: Vec<ForceRecord> = outcomes
        .iter()
        .map(|o| {
            let mut rec = ForceRecord {
                frame: o.frame,
                endpoint: o.endpoint,
                near_gimbal: o.near_gimbal,
                lambda: None,
                tau: None,
                x: None,
                residual_base: None,
                kkt: None,
                error: None,
            };
            match &o.result {
                Ok(sol) => {
                    rec.lambda = Some(to_vec(&sol.lambda));
                    rec.tau = Some(to_vec(&sol.tau));
                    rec.x = Some(to_vec(&sol.x));
                    rec.residual_base = Some(sol.residual_base);
                    rec.kkt = Some(sol.kkt_residual);
                }
                Err(msg) => rec.error = Some(msg.clone()),
            }
            rec
        })
        .collect();
    let warnings = frames.iter().filter(|r| r.error.is_some() || r.near_gimbal).count();
    ForcesFile {
        mode: config.mode.as_str().to_string(),
        algorithm: config.algorithm.clone(),
        gravity,
        fps: seq.fps,
        dof_count: model.dof_count(),
        contact_count: model.body.contact_count(),
        units: ForceUnits::default(),
        frames,
        warnings,
    }
}

fn requested_metrics(names: Option<&[String]>, have_gt: bool) -> CliResult<BTreeSet<Metric>> {
    match names {
        Some(names) => Ok(names.iter().map(|n| Metric::parse(n.trim())).collect::<Result<_, _>>()?),
        None => Ok(Metric::ALL.into_iter().filter(|m| have_gt || !m.needs_ground_truth()).collect()),
    }
}

/// Forces are solved on the prediction with the requested mode and compared
/// against the labels; contact sets come from the solved forces.
fn losses(
    model: &Model,
    pred: &MotionSequence,
    gt: &MotionSequence,
    lambda_label: &[DVector<f64>],
    tau_label: &[DVector<f64>],
    config: &SolverConfig,
) -> CliResult<LossReport> {
    let weights = LossWeights::default();
    let outcomes = solve_sequence(pred, model, config)?;
    let mut lambda = Vec::with_capacity(outcomes.len());
    let mut tau = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let sol = o
            .result
            .map_err(|msg| CliError::Numeric(format!("force solve failed at frame {}: {msg}", o.frame)))?;
        lambda.push(sol.lambda);
        tau.push(sol.tau);
    }
    let l_recon = reconstruction_loss(model, pred, gt, &weights)?;
    let l_force = force_loss(&lambda, &tau, lambda_label, tau_label, &weights)?;
    let active = contact_sets_from_forces(&lambda);
    let l_contact = contact_loss(&contact_frames(model, pred, &active)?, &weights)?;
    let l_euler = euler_lagrange_loss(model, pred, lambda_label, tau_label)?;
    Ok(LossReport::new(l_recon, l_force, l_contact, l_euler, weights))
}
