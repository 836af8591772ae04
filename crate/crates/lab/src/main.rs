use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinelab::commands::{
    analyze_gait_command, drop_test_command, emit_config_command, figure8_command, rollout_command,
    train_command, Context, DropArgs, GaitSource, PatternName, RolloutArgs, TrainArgs,
};
use spinelab::config::{EnvKind, RunConfig, SpineMode};
use spinelab::table::OutputFormat;
use spinelab::{LabError, Result};
use spinelab_core::eval::InitialOrientation;

/// Spined-quadruped locomotion lab: training, rollouts, gait analysis and
/// evaluation protocols.
///
/// Exit status: 0 on success, 1 for invalid input or failed analysis, 2 when
/// a simulation or training run diverges.
#[derive(Debug, Parser)]
#[command(name = "spinelab", version)]
struct Cli {
    /// Run configuration (TOML); see `emit-config`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Train a policy with PPO; writes training_log, curriculum and checkpoint.json.
    Train {
        /// Environment [default: from the config].
        #[arg(long, value_enum)]
        env: Option<EnvKind>,
        /// PPO iterations [default: from the config].
        #[arg(long)]
        iterations: Option<usize>,
        /// Also checkpoint every N iterations.
        #[arg(long, default_value_t = 0)]
        checkpoint_every: usize,
        /// No progress lines on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Run the planar robot under a checkpointed policy (or holding its
    /// standing pose); writes trajectory, contacts and gait_diagram.
    Rollout {
        /// Policy checkpoint written by `train --env planar`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Commanded forward speed, m/s.
        #[arg(long, default_value_t = 1.0)]
        vx: f64,
        /// Control steps [default: the configured episode length].
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Classify a gait from a contact or trajectory log, or from a constructed pattern.
    AnalyzeGait {
        /// Contact log (t,LF,RF,LH,RH) or a trajectory log.
        #[arg(long, conflicts_with = "pattern", required_unless_present = "pattern")]
        contacts: Option<PathBuf>,
        /// Constructed footfall pattern.
        #[arg(long, value_enum)]
        pattern: Option<PatternName>,
        /// Stride cycles of the constructed pattern.
        #[arg(long, default_value_t = 4)]
        cycles: usize,
        /// Stride period of the constructed pattern, s.
        #[arg(long, default_value_t = 0.4)]
        period: f64,
    },
    /// Figure-8 path tracking at each commanded speed.
    Figure8 {
        /// Comma-separated speeds, m/s [default: from the config].
        #[arg(long, value_delimiter = ',')]
        speeds: Option<Vec<f64>>,
    },
    /// Aerial drop tests with a locked or self-righting spine.
    DropTest {
        /// Trials per configuration [default: from the config].
        #[arg(long)]
        trials: Option<usize>,
        /// Repeatable.
        #[arg(long = "controller", value_enum)]
        controllers: Vec<SpineMode>,
        /// `roll,pitch` in degrees; repeatable.
        #[arg(long = "orientation", value_parser = parse_orientation)]
        orientations: Vec<InitialOrientation>,
    },
    /// Print the commented default configuration (or write it to
    /// <out-dir>/spinelab.toml).
    EmitConfig,
}

fn parse_orientation(s: &str) -> std::result::Result<InitialOrientation, String> {
    let (r, p) = s.split_once(',').ok_or("expected roll,pitch")?;
    let roll: f64 = r.trim().parse().map_err(|e| format!("roll: {e}"))?;
    let pitch: f64 = p.trim().parse().map_err(|e| format!("pitch: {e}"))?;
    if !roll.is_finite() || !pitch.is_finite() {
        return Err("angles must be finite".into());
    }
    Ok(InitialOrientation { roll, pitch })
}

fn run(cli: Cli) -> Result<String> {
    if let Cmd::EmitConfig = cli.command {
        return emit_config_command(cli.out_dir.as_deref());
    }
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.seed),
        config,
        config_from_file: cli.config.is_some(),
        out_dir: cli.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        format: cli.format,
    };
    match cli.command {
        Cmd::Train {
            env,
            iterations,
            checkpoint_every,
            quiet,
        } => train_command(
            &ctx,
            &TrainArgs {
                env,
                iterations,
                checkpoint_every,
                quiet,
            },
        ),
        Cmd::Rollout {
            checkpoint,
            vx,
            steps,
        } => rollout_command(
            &ctx,
            &RolloutArgs {
                checkpoint,
                vx,
                steps,
            },
        ),
        Cmd::AnalyzeGait {
            contacts,
            pattern,
            cycles,
            period,
        } => {
            let source = match (contacts, pattern) {
                (Some(path), _) => GaitSource::File(path),
                (None, Some(p)) => GaitSource::Pattern(p, cycles, period),
                (None, None) => return Err(LabError::Usage("give --contacts or --pattern".into())),
            };
            analyze_gait_command(&ctx, &source)
        }
        Cmd::Figure8 { speeds } => figure8_command(&ctx, speeds.as_deref()),
        Cmd::DropTest {
            trials,
            controllers,
            orientations,
        } => drop_test_command(
            &ctx,
            &DropArgs {
                trials,
                controllers,
                orientations,
            },
        ),
        Cmd::EmitConfig => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
