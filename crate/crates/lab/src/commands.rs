//! Subcommand implementations. Each writes its outputs under the output
//! directory and returns a short human-readable summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use spinelab_core::eval::{Figure8Path, InitialOrientation, DROP_SUMMARY_COLUMNS, FIGURE8_COLUMNS};
use spinelab_core::gait::{classify_gait, FootfallPattern, GaitLabel};
use spinelab_core::model::{Command, Foot};
use spinelab_core::policy::{
    policy_forward, train, Environment, IterationLog, PlanarEnv, PolicyParams, Toy1dEnv,
    TrainConfig,
};
use spinelab_core::sim::{FreeFallModel, PlanarModel};
use spinelab_core::Error as CoreError;

use crate::checkpoint::Checkpoint;
use crate::config::{EnvKind, RunConfig, SpineMode};
use crate::error::{LabError, Result};
use crate::formats::{
    contact_log_table, curriculum_log_table, gait_diagram_table, read_contact_log,
    training_log_table, trajectory_contacts, trajectory_table, TrajectoryRecord,
};
use crate::parallel::{drop_test_parallel, figure8_laps, RayonPool};
use crate::table::{num, OutputFormat, Table};

/// Everything a subcommand needs besides its own flags.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    /// True when the configuration came from a file.
    pub config_from_file: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl Context {
    fn prepare_out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| LabError::io(&self.out_dir, e))?;
        Ok(&self.out_dir)
    }

    fn write(&self, table: &Table, stem: &str) -> Result<PathBuf> {
        table.write(self.prepare_out_dir()?, stem, self.format)
    }

    fn planar_env(&self) -> Result<PlanarEnv> {
        let cfg = &self.config;
        let model = PlanarModel::new(&cfg.robot()?, cfg.pd, cfg.contact)?;
        Ok(PlanarEnv::new(
            model,
            cfg.env.planar.clone(),
            cfg.reward,
            &cfg.gait,
        )?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub env: Option<EnvKind>,
    pub iterations: Option<usize>,
    /// Save a checkpoint every this many iterations (0: only at the end).
    pub checkpoint_every: usize,
    pub quiet: bool,
}

pub fn train_command(ctx: &Context, args: &TrainArgs) -> Result<String> {
    let env = args.env.unwrap_or(ctx.config.env.kind);
    let mut tc = if env == EnvKind::Toy1d && !ctx.config_from_file {
        TrainConfig::toy_1d()
    } else {
        ctx.config.training.clone()
    };
    if let Some(n) = args.iterations {
        tc.iterations = n;
    }
    let out = ctx.prepare_out_dir()?.to_path_buf();
    match env {
        EnvKind::Toy1d => {
            let toy = ctx.config.env.toy_1d;
            let reward = ctx.config.reward;
            run_training(ctx, args, env, &tc, &out, |_| Toy1dEnv::new(toy, &reward))
        }
        EnvKind::Planar => {
            let proto = ctx.planar_env()?;
            run_training(ctx, args, env, &tc, &out, |_| Ok(proto.clone()))
        }
    }
}

fn run_training<E, F>(
    ctx: &Context,
    args: &TrainArgs,
    env: EnvKind,
    tc: &TrainConfig,
    out: &Path,
    make_env: F,
) -> Result<String>
where
    E: Environment + Send,
    F: Fn(usize) -> spinelab_core::Result<E>,
{
    let ckpt_path = out.join("checkpoint.json");
    let mut rows: Vec<IterationLog> = Vec::with_capacity(tc.iterations);
    let result = train(
        make_env,
        tc,
        ctx.config.curriculum,
        ctx.seed,
        &RayonPool,
        |row, params: &PolicyParams| -> Result<()> {
            rows.push(row.clone());
            if !args.quiet && (row.iteration % 10 == 0 || row.iteration + 1 == tc.iterations) {
                eprintln!(
                    "iter {:>4}  reward {:>8.4}  tracking {:.3}  fraction {:.2}  kl {:.4}",
                    row.iteration,
                    row.mean_reward,
                    row.mean_linear_tracking,
                    row.curriculum.linear_fraction,
                    row.loss.approx_kl,
                );
            }
            if args.checkpoint_every > 0 && (row.iteration + 1) % args.checkpoint_every == 0 {
                Checkpoint::new(env, ctx.seed, row.iteration, row.curriculum, params.clone())
                    .save(&ckpt_path)?;
            }
            Ok(())
        },
    );
    // logs up to the failure are still useful
    ctx.write(&training_log_table(&rows), "training_log")?;
    ctx.write(&curriculum_log_table(&rows), "curriculum")?;
    let outcome = result?;
    let last = outcome.log.last().map(|r| r.iteration).unwrap_or(0);
    Checkpoint::new(env, ctx.seed, last, outcome.curriculum, outcome.params).save(&ckpt_path)?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "trained {} on {} for {} iterations",
        hidden_label(tc),
        env.name(),
        rows.len()
    );
    if let Some(r) = rows.last() {
        let _ = writeln!(
            s,
            "final: mean reward {:.4}, linear tracking {:.4}, linear fraction {:.2}",
            r.mean_reward, r.mean_linear_tracking, r.curriculum.linear_fraction
        );
    }
    let _ = writeln!(s, "checkpoint: {}", ckpt_path.display());
    Ok(s)
}

fn hidden_label(tc: &TrainConfig) -> String {
    let widths: Vec<String> = tc.hidden.iter().map(|w| w.to_string()).collect();
    format!("a [{}] policy", widths.join(", "))
}

#[derive(Debug, Clone, Default)]
pub struct RolloutArgs {
    pub checkpoint: Option<PathBuf>,
    pub vx: f64,
    pub steps: Option<usize>,
}

pub fn rollout_command(ctx: &Context, args: &RolloutArgs) -> Result<String> {
    let policy = match &args.checkpoint {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            if ckpt.env != EnvKind::Planar {
                return Err(LabError::Usage(format!(
                    "rollout runs the planar robot; {} holds a {} policy",
                    path.display(),
                    ckpt.env.name()
                )));
            }
            Some(ckpt.params)
        }
        None => None,
    };
    if !(args.vx.is_finite()) {
        return Err(LabError::Usage("--vx must be finite".into()));
    }
    let mut env = ctx.planar_env()?;
    let steps = args.steps.unwrap_or(ctx.config.env.planar.episode_steps);
    let cur = &ctx.config.curriculum;
    let cmd = Command {
        vx_target: args.vx,
        a_max_linear: cur.a_max_linear_range.1,
        a_max_angular: cur.a_max_angular_range.1,
        ..Command::default()
    };
    let mut obs = env.reset_with_command(cmd)?;
    let mut records = Vec::with_capacity(steps);
    let mut ended = None;
    for _ in 0..steps {
        let action = match &policy {
            Some(p) => policy_forward(&obs, p)?
                .mean
                .iter()
                .map(|a| a * p.action_scale)
                .collect(),
            None => vec![0.0; env.action_dim()],
        };
        let step = env.step(&action)?;
        records.push(TrajectoryRecord {
            state: env.robot_state().clone(),
            cmd: *env.command(),
            reward: step.breakdown,
        });
        if env.diverged() {
            let time = env.robot_state().t;
            write_rollout(ctx, &records, env.model().spec.control_dt())?;
            return Err(CoreError::SimulationDiverged { time }.into());
        }
        if step.terminated {
            ended = Some(env.robot_state().t);
            break;
        }
        obs = step.observation;
    }
    let label = write_rollout(ctx, &records, env.model().spec.control_dt())?;

    let n = records.len().max(1) as f64;
    let mean_reward = records.iter().map(|r| r.reward.total).sum::<f64>() / n;
    let mean_vx = records
        .iter()
        .map(|r| r.state.base_linear_velocity.x)
        .sum::<f64>()
        / n;
    let mut s = String::new();
    let source = if policy.is_some() {
        "policy"
    } else {
        "standing pose"
    };
    let _ = writeln!(
        s,
        "rollout ({source}): {} steps, command vx {:.2} m/s",
        records.len(),
        args.vx
    );
    let _ = writeln!(
        s,
        "mean reward {mean_reward:.4}, mean forward speed {mean_vx:.3} m/s"
    );
    if let Some(t) = ended {
        let _ = writeln!(s, "episode ended by a fall at t = {t:.3} s");
    }
    match label {
        Some(l) => {
            let _ = writeln!(s, "gait: {}", describe_label(&l));
        }
        None => {
            let _ = writeln!(s, "gait: not periodic enough to classify");
        }
    }
    Ok(s)
}

fn write_rollout(
    ctx: &Context,
    records: &[TrajectoryRecord],
    dt: f64,
) -> Result<Option<GaitLabel>> {
    ctx.write(&trajectory_table(records), "trajectory")?;
    if records.len() < 2 {
        return Ok(None);
    }
    let tl = trajectory_contacts(records, dt)?;
    ctx.write(&contact_log_table(&tl), "contacts")?;
    ctx.write(&gait_diagram_table(&tl), "gait_diagram")?;
    Ok(classify_gait(&tl, &ctx.config.gait).ok())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PatternName {
    Trot,
    Bound,
    TransverseGallop,
    RotaryG0,
    RotaryG2,
}

impl PatternName {
    pub fn pattern(self) -> FootfallPattern {
        match self {
            PatternName::Trot => FootfallPattern::trot(),
            PatternName::Bound => FootfallPattern::bound(),
            PatternName::TransverseGallop => FootfallPattern::transverse_gallop(),
            PatternName::RotaryG0 => FootfallPattern::rotary_g0(),
            PatternName::RotaryG2 => FootfallPattern::rotary_g2(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum GaitSource {
    /// Contact log, or a trajectory log (its contact columns are used).
    File(PathBuf),
    /// Constructed trace: pattern, cycles, stride period in seconds.
    Pattern(PatternName, usize, f64),
}

pub fn analyze_gait_command(ctx: &Context, source: &GaitSource) -> Result<String> {
    let tl = match source {
        GaitSource::File(path) => read_contact_log(path)?,
        GaitSource::Pattern(name, cycles, period) => {
            let samples = 200;
            name.pattern()
                .timeline(samples, *cycles, period / samples as f64)?
        }
    };
    ctx.write(&gait_diagram_table(&tl), "gait_diagram")?;
    let label = classify_gait(&tl, &ctx.config.gait)?;
    ctx.write(&gait_label_table(&label), "gait_label")?;
    Ok(format!("{}\n", describe_label(&label)))
}

fn foot_names(order: &[Foot]) -> String {
    order.iter().map(|f| f.name()).collect::<Vec<_>>().join("-")
}

fn describe_label(l: &GaitLabel) -> String {
    format!(
        "{} ({}), footfalls {}, stride {:.3} s, offsets front {:.3} rear {:.3}, {:.2} aerial phases per cycle",
        l.family.name(),
        l.aerial_class.name(),
        foot_names(&l.footfall_order),
        l.stride_period,
        l.front_offset,
        l.rear_offset,
        l.aerial_per_cycle,
    )
}

pub fn gait_label_table(l: &GaitLabel) -> Table {
    let mut t = Table::new([
        "family",
        "aerial_class",
        "footfall_order",
        "stride_period",
        "front_offset",
        "rear_offset",
        "front_lead",
        "rear_lead",
        "duty_LF",
        "duty_RF",
        "duty_LH",
        "duty_RH",
        "aerial_per_cycle",
    ]);
    let mut row = vec![
        json!(l.family.name()),
        json!(l.aerial_class.name()),
        json!(foot_names(&l.footfall_order)),
        num(l.stride_period),
        num(l.front_offset),
        num(l.rear_offset),
        json!(l.front_lead.name()),
        json!(l.rear_lead.name()),
    ];
    row.extend(l.duty_factor.iter().map(|&d| num(d)));
    row.push(num(l.aerial_per_cycle));
    t.push(row);
    t
}

pub fn figure8_command(ctx: &Context, speeds: Option<&[f64]>) -> Result<String> {
    let f8 = &ctx.config.figure8;
    let speeds = speeds.unwrap_or(&f8.speeds);
    if speeds.is_empty() || speeds.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(LabError::Usage("speeds must be positive".into()));
    }
    let path = Figure8Path::new(f8.radius, f8.straight_length)?;
    let laps = figure8_laps(&path, &f8.controller, &f8.tracker, speeds)?;

    let mut metrics = Table::new(FIGURE8_COLUMNS);
    let mut traj = Table::new(["v_x", "t", "x", "y", "heading", "forward_speed"]);
    for (row, samples) in &laps {
        metrics.push(row.values().iter().map(|&v| num(v)).collect());
        for p in samples {
            traj.push(vec![
                num(row.vx),
                num(p.t),
                num(p.x),
                num(p.y),
                num(p.heading),
                num(p.forward_speed),
            ]);
        }
    }
    let mut reference = Table::new(["s", "x", "y", "heading", "curvature"]);
    let n = (path.total_length() / 0.01).ceil() as usize;
    for i in 0..=n {
        let s = path.total_length() * i as f64 / n as f64;
        let p = path.point_at(s);
        reference.push(vec![
            num(s),
            num(p.x),
            num(p.y),
            num(p.heading),
            num(p.curvature),
        ]);
    }
    ctx.write(&metrics, "figure8_metrics")?;
    ctx.write(&traj, "figure8_trajectories")?;
    ctx.write(&reference, "figure8_path")?;

    let mut s = format!(
        "figure-8 path: R = {} m, L = {} m, length {:.4} m\n",
        f8.radius,
        f8.straight_length,
        path.total_length()
    );
    let _ = writeln!(s, "{}", FIGURE8_COLUMNS.join(" | "));
    for (row, _) in &laps {
        let v = row.values();
        let _ = writeln!(s, "{:.2} | {:.3} | {:.4} | {:.4}", v[0], v[1], v[2], v[3]);
    }
    Ok(s)
}

#[derive(Debug, Clone, Default)]
pub struct DropArgs {
    pub trials: Option<usize>,
    pub controllers: Vec<SpineMode>,
    pub orientations: Vec<InitialOrientation>,
}

pub fn drop_test_command(ctx: &Context, args: &DropArgs) -> Result<String> {
    let d = &ctx.config.drop;
    let trials = args.trials.unwrap_or(d.trials);
    let controllers = if args.controllers.is_empty() {
        &d.controllers
    } else {
        &args.controllers
    };
    let orientations = if args.orientations.is_empty() {
        &d.orientations
    } else {
        &args.orientations
    };
    let model = FreeFallModel::new(&ctx.config.robot()?, &ctx.config.pd)?;

    let mut summary = Table::new(DROP_SUMMARY_COLUMNS);
    let mut details = Table::new([
        "init_roll",
        "init_pitch",
        "controller",
        "trial",
        "fall_time",
        "touchdown_roll_deg",
        "touchdown_pitch_deg",
        "success",
        "diverged",
    ]);
    let mut s = String::new();
    let _ = writeln!(s, "{}", DROP_SUMMARY_COLUMNS.join(" | "));
    for init in orientations {
        for &mode in controllers {
            let ctrl = d.controller(mode);
            let report = drop_test_parallel(&model, &ctrl, init, trials, ctx.seed, &d.sim)?;
            for t in &report.details {
                if t.diverged {
                    eprintln!(
                        "warning: {} / {} trial {} diverged at t = {:.4} s (counted as failure)",
                        report.initial.label(),
                        report.controller,
                        t.trial,
                        t.fall_time
                    );
                }
                details.push(vec![
                    num(init.roll),
                    num(init.pitch),
                    json!(report.controller),
                    json!(t.trial),
                    num(t.fall_time),
                    num(t.touchdown_roll_deg),
                    num(t.touchdown_pitch_deg),
                    json!(t.success),
                    json!(t.diverged),
                ]);
            }
            let row = report.row();
            let _ = writeln!(s, "{}", row.join(" | "));
            summary.push(vec![
                json!(row[0]),
                json!(row[1]),
                num(100.0 * report.success_rate),
                json!(report.trials),
                json!(report.successes),
            ]);
        }
    }
    ctx.write(&summary, "drop_summary")?;
    ctx.write(&details, "drop_trials")?;
    Ok(s)
}

/// The commented default configuration; written to `<out-dir>/spinelab.toml`
/// when an output directory is given.
pub fn emit_config_command(out_dir: Option<&Path>) -> Result<String> {
    let text = crate::config::default_config_toml();
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
            let path = dir.join("spinelab.toml");
            std::fs::write(&path, &text).map_err(|e| LabError::io(&path, e))?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(text),
    }
}
