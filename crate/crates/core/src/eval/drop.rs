use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{UnitQuaternion, Vector3};
use num_traits::Euclid;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::sim::freefall::SelfRightingTrajectory;
use crate::sim::{FreeFall3DState, FreeFallModel};
use crate::{Error, Result};

/// Landing report columns, in order.
pub const DROP_SUMMARY_COLUMNS: [&str; 5] = [
    "Init. Orient",
    "Robot Cfg",
    "Success rates (%)",
    "Trials",
    "Successes",
];

/// Spine command during the fall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropController {
    /// Spine held straight: a rigid trunk.
    Locked,
    /// The self-righting loop, repeated for as long as the fall lasts.
    Cyclic(SelfRightingTrajectory),
}

impl DropController {
    pub fn targets(&self, t: f64) -> [f64; 3] {
        match self {
            DropController::Locked => [0.0; 3],
            DropController::Cyclic(traj) => traj.targets(Euclid::rem_euclid(&t, &traj.period)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DropController::Locked => "Rigid-trunk",
            DropController::Cyclic(_) => "Active-spine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DropConfig {
    /// Fall distance of the centre of mass before touchdown, m.
    pub height: f64,
    pub dt: f64,
    /// Landing counts when |roll| and |pitch| are both within this, deg.
    pub success_tolerance_deg: f64,
    /// Per-axis standard deviation of the initial attitude noise, deg.
    pub orientation_noise_deg: f64,
    /// Per-axis standard deviation of the initial angular velocity, rad/s.
    pub angular_velocity_noise: f64,
}

impl Default for DropConfig {
    fn default() -> Self {
        DropConfig {
            height: 2.0,
            dt: 1e-3,
            success_tolerance_deg: 30.0,
            orientation_noise_deg: 2.0,
            angular_velocity_noise: 0.05,
        }
    }
}

impl DropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.0) {
            return Err(Error::validation("eval.drop.height", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::validation("eval.drop.dt", "must be positive"));
        }
        if !(self.success_tolerance_deg > 0.0 && self.success_tolerance_deg < 180.0) {
            return Err(Error::validation(
                "eval.drop.success_tolerance_deg",
                "must be in (0, 180)",
            ));
        }
        if !(self.orientation_noise_deg >= 0.0) || !(self.angular_velocity_noise >= 0.0) {
            return Err(Error::validation(
                "eval.drop",
                "noise levels must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Initial attitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialOrientation {
    pub roll: f64,
    pub pitch: f64,
}

impl InitialOrientation {
    /// `r=135°, p=45°`-style label; zero components are left out.
    pub fn label(&self) -> String {
        match (self.roll != 0.0, self.pitch != 0.0) {
            (true, true) => format!("r={}°, p={}°", self.roll, self.pitch),
            (true, false) => format!("r={}°", self.roll),
            (false, true) => format!("p={}°", self.pitch),
            (false, false) => String::from("upright"),
        }
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(self.roll.to_radians(), self.pitch.to_radians(), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropTrial {
    pub trial: usize,
    pub fall_time: f64,
    pub touchdown_roll_deg: f64,
    pub touchdown_pitch_deg: f64,
    pub success: bool,
    /// The simulation stopped being finite; counted as a failure.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropTestReport {
    pub initial: InitialOrientation,
    pub controller: String,
    pub height: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub details: Vec<DropTrial>,
}

impl DropTestReport {
    pub fn from_trials(
        initial: InitialOrientation,
        controller: &DropController,
        height: f64,
        details: Vec<DropTrial>,
    ) -> Self {
        let trials = details.len();
        let successes = details.iter().filter(|t| t.success).count();
        DropTestReport {
            initial,
            controller: String::from(controller.label()),
            height,
            trials,
            successes,
            success_rate: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            details,
        }
    }

    /// Row in [`DROP_SUMMARY_COLUMNS`] order; the rate is in percent.
    pub fn row(&self) -> [String; 5] {
        [
            self.initial.label(),
            self.controller.clone(),
            format!("{:.1}", 100.0 * self.success_rate),
            format!("{}", self.trials),
            format!("{}", self.successes),
        ]
    }
}

/// Initial state of trial `trial`: the nominal attitude times a small seeded
/// rotation, a seeded body spin, straight spine, centre of mass at `height`.
/// Each trial draws from its own ChaCha8 stream of `seed`.
pub fn drop_initial_state(
    model: &FreeFallModel,
    initial: &InitialOrientation,
    cfg: &DropConfig,
    seed: u64,
    trial: usize,
) -> FreeFall3DState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let sd = cfg.orientation_noise_deg.to_radians();
    let noise = UnitQuaternion::from_euler_angles(sd * normal(), sd * normal(), sd * normal());
    let w = cfg.angular_velocity_noise;
    let spin = Vector3::new(w * normal(), w * normal(), w * normal());
    let mut s = FreeFall3DState::at_rest(Vector3::zeros(), initial.rotation() * noise);
    s.angular_velocity = spin;
    let com = model.com(&s);
    s.position.z += cfg.height - com.z;
    s
}

/// One drop: integrate until the centre of mass has fallen `cfg.height`.
pub fn drop_trial(
    model: &FreeFallModel,
    controller: &DropController,
    initial: &InitialOrientation,
    cfg: &DropConfig,
    seed: u64,
    trial: usize,
) -> DropTrial {
    let mut s = drop_initial_state(model, initial, cfg, seed, trial);
    let mut diverged = false;
    // a few steps of slack past the ballistic fall time
    let max_steps = ((2.0 * cfg.height / model.gravity).sqrt() / cfg.dt) as usize + 1000;
    for _ in 0..max_steps {
        if model.com(&s).z <= 0.0 {
            break;
        }
        let targets = controller.targets(s.t);
        match model.step(&s, Some(&targets), cfg.dt) {
            Ok(next) => s = next,
            Err(d) => {
                s = d.last_valid;
                diverged = true;
                break;
            }
        }
    }
    let (roll, pitch, _) = s.orientation.euler_angles();
    let (roll, pitch) = (roll.to_degrees(), pitch.to_degrees());
    let tol = cfg.success_tolerance_deg;
    DropTrial {
        trial,
        fall_time: s.t,
        touchdown_roll_deg: roll,
        touchdown_pitch_deg: pitch,
        success: !diverged && roll.abs() <= tol && pitch.abs() <= tol,
        diverged,
    }
}

/// Runs `trials` drops in sequence and aggregates them.
pub fn drop_test(
    model: &FreeFallModel,
    controller: &DropController,
    initial: &InitialOrientation,
    trials: usize,
    seed: u64,
    cfg: &DropConfig,
) -> Result<DropTestReport> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::arg("drop test needs at least one trial"));
    }
    let details = (0..trials)
        .map(|k| drop_trial(model, controller, initial, cfg, seed, k))
        .collect();
    Ok(DropTestReport::from_trials(
        *initial, controller, cfg.height, details,
    ))
}
