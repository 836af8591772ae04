//! Run configuration (TOML). Every section is optional; missing keys take
//! their defaults. `emit-config` writes the defaults with comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinelab_core::curriculum::CurriculumConfig;
use spinelab_core::eval::{
    DropConfig, DropController, Figure8Path, HeadingController, InitialOrientation, UnicycleTracker,
};
use spinelab_core::gait::GaitConfig;
use spinelab_core::model::RobotSpec;
use spinelab_core::policy::{PlanarEnvConfig, Toy1dConfig, TrainConfig};
use spinelab_core::reward::RewardConfig;
use spinelab_core::sim::freefall::SelfRightingTrajectory;
use spinelab_core::sim::{ContactParams, PdGains};

use crate::error::{LabError, Result};
use crate::robot::load_robot_spec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum EnvKind {
    /// Point mass following a ramped speed command.
    #[serde(rename = "toy-1d")]
    #[value(name = "toy-1d")]
    Toy1d,
    /// Sagittal-plane quadruped.
    #[default]
    #[serde(rename = "planar")]
    Planar,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Toy1d => "toy-1d",
            EnvKind::Planar => "planar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    pub toy_1d: Toy1dConfig,
    pub planar: PlanarEnvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure8Section {
    /// Arc radius, m.
    pub radius: f64,
    /// Length of each straight, m.
    pub straight_length: f64,
    /// Commanded forward speeds, one lap each, m/s.
    pub speeds: Vec<f64>,
    pub controller: HeadingController,
    pub tracker: UnicycleTracker,
}

impl Default for Figure8Section {
    fn default() -> Self {
        Figure8Section {
            radius: 1.0,
            straight_length: 4.0,
            speeds: vec![1.0, 1.5, 2.0, 2.5],
            controller: HeadingController::default(),
            tracker: UnicycleTracker::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpineMode {
    /// Spine held straight.
    Locked,
    /// Repeat the self-righting loop during the fall.
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropSection {
    pub trials: usize,
    pub controllers: Vec<SpineMode>,
    /// Initial attitudes, deg.
    pub orientations: Vec<InitialOrientation>,
    pub sim: DropConfig,
    pub trajectory: SelfRightingTrajectory,
}

impl Default for DropSection {
    fn default() -> Self {
        DropSection {
            trials: 50,
            controllers: vec![SpineMode::Locked, SpineMode::Cyclic],
            orientations: vec![
                InitialOrientation {
                    roll: 0.0,
                    pitch: 90.0,
                },
                InitialOrientation {
                    roll: 135.0,
                    pitch: 45.0,
                },
                InitialOrientation {
                    roll: 180.0,
                    pitch: 0.0,
                },
            ],
            sim: DropConfig::default(),
            trajectory: SelfRightingTrajectory::default(),
        }
    }
}

impl DropSection {
    pub fn controller(&self, mode: SpineMode) -> DropController {
        match mode {
            SpineMode::Locked => DropController::Locked,
            SpineMode::Cyclic => DropController::Cyclic(self.trajectory),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Robot description file; the built-in robot when absent. Relative
    /// paths resolve against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robot_spec: Option<PathBuf>,
    pub env: EnvSection,
    pub training: TrainConfig,
    pub reward: RewardConfig,
    pub curriculum: CurriculumConfig,
    pub contact: ContactParams,
    pub pd: PdGains,
    pub gait: GaitConfig,
    pub figure8: Figure8Section,
    pub drop: DropSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| LabError::format(path, e))?;
        if let (Some(spec), Some(dir)) = (&cfg.robot_spec, path.parent()) {
            if spec.is_relative() {
                cfg.robot_spec = Some(dir.join(spec));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> spinelab_core::Result<()> {
        use spinelab_core::Error;
        self.training.validate()?;
        self.reward.validate()?;
        self.curriculum.validate()?;
        self.contact.validate()?;
        self.pd.validate()?;
        self.gait.validate()?;
        Figure8Path::new(self.figure8.radius, self.figure8.straight_length)?;
        if self
            .figure8
            .speeds
            .iter()
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(Error::Validation {
                field: "figure8.speeds".into(),
                reason: "speeds must be positive".into(),
            });
        }
        self.figure8.controller.validate()?;
        self.drop.sim.validate()?;
        if self.drop.trials == 0 {
            return Err(Error::Validation {
                field: "drop.trials".into(),
                reason: "need at least one trial".into(),
            });
        }
        Ok(())
    }

    pub fn robot(&self) -> Result<RobotSpec> {
        match &self.robot_spec {
            Some(path) => load_robot_spec(path),
            None => Ok(RobotSpec::canonical()),
        }
    }
}

/// Comments attached to keys (`section.key`) and section headers in the
/// emitted default config.
const COMMENTS: &[(&str, &str)] = &[
    ("seed", "Master seed; --seed overrides it."),
    ("env", "Training and rollout environment."),
    (
        "env.kind",
        "\"planar\" (sagittal quadruped) or \"toy-1d\" (point mass).",
    ),
    ("env.toy_1d.dt", "s"),
    (
        "env.toy_1d.accel_gain",
        "Acceleration per unit action, m/s^2.",
    ),
    ("env.toy_1d.velocity_scale", "Observation normalizer, m/s."),
    ("env.toy_1d.accel_scale", "Observation normalizer, m/s^2."),
    ("env.planar.episode_steps", "Control steps per episode."),
    (
        "env.planar.min_base_height",
        "Fall when the base drops below this, m.",
    ),
    (
        "env.planar.max_base_pitch",
        "Fall when |trunk pitch| exceeds this, rad.",
    ),
    (
        "training",
        "PPO trainer. `train --env toy-1d` without --config uses a [32, 32] network.",
    ),
    ("training.num_envs", "Parallel rollout workers."),
    ("training.steps_per_env", "Steps per worker per iteration."),
    ("training.hidden", "Hidden layer widths (tanh)."),
    (
        "training.action_scale",
        "Multiplies raw policy actions (rad for joint targets).",
    ),
    (
        "training.init_log_std",
        "Initial log standard deviation, clamped to [-4, 1].",
    ),
    ("training.ppo.max_grad_norm", "0 disables clipping."),
    ("reward", "Reward terms."),
    ("reward.sigma", "Phase-offset kernel width, cycle fraction."),
    (
        "reward.delta_front_target",
        "Target fore-pair touchdown offset, cycle fraction.",
    ),
    (
        "reward.delta_rear_target",
        "Target hind-pair touchdown offset, cycle fraction.",
    ),
    ("reward.alpha", "Spine phase score sensitivity, s^2/rad^2."),
    ("reward.theta_flex", "Flexion amplitude cap, rad."),
    ("reward.theta_ext", "Extension amplitude cap, rad."),
    ("reward.w_e", "Over-rotation penalty weight."),
    ("reward.w_b", "Amplitude boost weight."),
    ("reward.k", "Steering term saturation scale."),
    ("reward.omega_th", "Steering dead zone, rad/s."),
    ("reward.sigma_v", "Velocity tracking kernel width."),
    ("reward.air_time_cap", "Per-foot air-time bonus cap, s."),
    (
        "reward.term_weights",
        "Weights of the scalar reward; penalties are negative.",
    ),
    ("curriculum", "Velocity-command curriculum."),
    (
        "curriculum.initial_fraction",
        "Starting fraction of the full ranges.",
    ),
    (
        "curriculum.full_linear_range",
        "Forward speed (min, max), m/s.",
    ),
    (
        "curriculum.full_angular_range",
        "Yaw rate (min, max), rad/s.",
    ),
    (
        "curriculum.linear_threshold",
        "Mean tracking needed to widen the speed range.",
    ),
    (
        "curriculum.angular_threshold",
        "Mean tracking needed to widen the yaw range.",
    ),
    ("curriculum.delta", "Growth per successful update."),
    (
        "curriculum.a_max_linear_range",
        "Linear ramp limit range, m/s^2.",
    ),
    (
        "curriculum.a_max_angular_range",
        "Angular ramp limit range, rad/s^2.",
    ),
    (
        "curriculum.turning_delay_window",
        "Delay before a turn command activates, s.",
    ),
    ("contact", "Penalty ground contact."),
    ("contact.k_n", "Normal stiffness, N/m."),
    ("contact.d_n", "Normal damping, N s/m."),
    ("contact.mu", "Coulomb friction coefficient."),
    ("contact.d_t", "Viscous slip coefficient, N s/m."),
    (
        "contact.k_t",
        "Tangential stick stiffness, N/m; 0 for purely viscous friction.",
    ),
    ("pd", "Joint PD position controller."),
    ("gait", "Gait analysis."),
    (
        "gait.debounce_time",
        "Minimum flight before a touchdown counts, s.",
    ),
    (
        "gait.sync_tolerance",
        "Offsets below this count as synchronous, cycle fraction.",
    ),
    (
        "figure8",
        "Figure-8 path tracking with a proportional heading controller.",
    ),
    ("figure8.radius", "Arc radius, m."),
    ("figure8.straight_length", "Straight segment length, m."),
    ("figure8.speeds", "One lap per commanded speed, m/s."),
    ("figure8.controller.lookahead", "m"),
    ("figure8.controller.kp", "Heading gain, 1/s."),
    ("figure8.controller.max_yaw_rate", "Command clamp, rad/s."),
    (
        "figure8.tracker",
        "Kinematic unicycle standing in for a trained tracker.",
    ),
    ("figure8.tracker.yaw_rate_tau", "Yaw-rate lag, s."),
    (
        "figure8.tracker.max_laps",
        "Safety bound on simulated time, in nominal laps.",
    ),
    ("drop", "Aerial drop tests."),
    ("drop.trials", "Trials per (orientation, controller)."),
    (
        "drop.controllers",
        "\"locked\" (rigid trunk) and/or \"cyclic\" (self-righting loop).",
    ),
    ("drop.orientations", "Initial roll and pitch, deg."),
    ("drop.sim.height", "Centre-of-mass fall distance, m."),
    ("drop.sim.dt", "Integration step, s."),
    (
        "drop.sim.success_tolerance_deg",
        "Landing counts when |roll| and |pitch| are within this, deg.",
    ),
    (
        "drop.sim.orientation_noise_deg",
        "Per-axis initial attitude noise (std), deg.",
    ),
    (
        "drop.sim.angular_velocity_noise",
        "Per-axis initial angular velocity noise (std), rad/s.",
    ),
    ("drop.trajectory", "Spine self-righting loop."),
    ("drop.trajectory.period", "s"),
    ("drop.trajectory.bend_amplitude", "rad"),
    (
        "drop.trajectory.bend_fraction",
        "Share of the period spent bending, and again straightening.",
    ),
    ("drop.trajectory.mirrored", "Sweep the other way round."),
];

fn comment(key: &str) -> Option<&'static str> {
    COMMENTS.iter().find(|(k, _)| *k == key).map(|(_, c)| *c)
}

fn emit_table(out: &mut String, prefix: &str, table: &toml::Table) {
    for (k, v) in table {
        if v.is_table() {
            continue;
        }
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        if let Some(c) = comment(&key) {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{k} = {v}");
        if key == "seed" {
            let _ = writeln!(
                out,
                "# Robot description (JSON); the built-in robot when absent."
            );
            let _ = writeln!(out, "# robot_spec = \"robot_spec.json\"");
        }
    }
    for (k, v) in table {
        if let toml::Value::Table(sub) = v {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            let _ = writeln!(out);
            if let Some(c) = comment(&key) {
                let _ = writeln!(out, "# {c}");
            }
            let _ = writeln!(out, "[{key}]");
            emit_table(out, &key, sub);
        }
    }
}

/// The default configuration as commented TOML.
pub fn default_config_toml() -> String {
    let value = toml::Table::try_from(RunConfig::default()).expect("default config serializes");
    let mut out = String::from("# spinelab run configuration. Every key is optional.\n\n");
    emit_table(&mut out, "", &value);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emitted_config_parses_back_to_defaults() {
        let text = default_config_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), RunConfig::default());
        assert!(
            text.contains("# Steering dead zone, rad/s.\nomega_th = 0.1"),
            "{text}"
        );
        assert!(text.contains("[training.ppo]"));
    }

    #[test]
    fn every_comment_names_a_real_key() {
        let value = toml::Table::try_from(RunConfig::default()).unwrap();
        for (key, _) in COMMENTS {
            let mut node = &value;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let v = node
                    .get(*part)
                    .unwrap_or_else(|| panic!("unknown key {key}"));
                if i + 1 < parts.len() {
                    node = v.as_table().unwrap();
                }
            }
        }
    }

    #[test]
    fn partial_config_keeps_other_defaults() {
        let cfg = RunConfig::parse("seed = 5\n[reward]\nsigma = 0.1\n[env]\nkind = \"toy-1d\"\n")
            .unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.reward.sigma, 0.1);
        assert_eq!(cfg.reward.omega_th, RewardConfig::default().omega_th);
        assert_eq!(cfg.env.kind, EnvKind::Toy1d);
        assert_eq!(cfg.training, TrainConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("sede = 1\n").is_err());
        assert!(RunConfig::parse("[figure8]\nradius = 1.0\nstraight_length = 1.5\n").is_err());
        let err = RunConfig::parse("[reward]\nsigma = -1.0\n").unwrap_err();
        assert!(err.contains("sigma"), "{err}");
        assert!(RunConfig::parse("[drop]\ntrials = 0\n").is_err());
    }

    #[test]
    fn robot_spec_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("robot.json"),
            crate::robot::robot_spec_json(&RobotSpec::canonical()),
        )
        .unwrap();
        let cfg_path = dir.path().join("run.toml");
        std::fs::write(&cfg_path, "robot_spec = \"robot.json\"\n").unwrap();
        let cfg = RunConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.robot().unwrap(), RobotSpec::canonical());
    }
}
