use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::build_observation;
use crate::curriculum::{CommandTask, CurriculumState};
use crate::gait::{GaitConfig, OnlineGaitTracker};
use crate::model::{clamp_joint_targets, Command, JointVector, RobotState, NUM_JOINTS};
use crate::reward::{compute_reward, RewardBreakdown, RewardConfig, RewardInputs};
use crate::sim::planar::{BASE_PITCH, BASE_Z};
use crate::sim::{Actuation, ContactParams, PdGains, PlanarModel, PlanarSimState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    /// Episode ended in a failure state; no bootstrap past this step.
    pub terminated: bool,
    /// Episode hit its time limit.
    pub truncated: bool,
    /// Linear velocity-tracking kernel at this step, in [0, 1].
    pub linear_tracking: f64,
    /// Yaw-rate tracking kernel, for environments with a yaw channel.
    pub angular_tracking: Option<f64>,
}

/// Episodic control task driven by curriculum-sampled velocity commands.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, curriculum: &CurriculumState, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    /// `action` is the policy output already multiplied by its action scale.
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Toy1dConfig {
    pub dt: f64,
    pub episode_steps: usize,
    /// Acceleration per unit of scaled action, m/s².
    pub accel_gain: f64,
    /// Speed used to normalize velocity observations, m/s.
    pub velocity_scale: f64,
    /// Acceleration used to normalize the ramp-limit observation, m/s².
    pub accel_scale: f64,
}

impl Default for Toy1dConfig {
    fn default() -> Self {
        Toy1dConfig {
            dt: 0.02,
            episode_steps: 250,
            accel_gain: 40.0,
            velocity_scale: 7.0,
            accel_scale: 6.0,
        }
    }
}

/// Unit point mass on a line, `v' = accel_gain * action`, asked to follow the
/// ramped forward-speed command. Reward is the linear tracking kernel.
#[derive(Debug, Clone)]
pub struct Toy1dEnv {
    cfg: Toy1dConfig,
    sigma_v: f64,
    v: f64,
    cmd: Command,
    t: f64,
    steps: usize,
}

impl Toy1dEnv {
    pub fn new(cfg: Toy1dConfig, reward: &RewardConfig) -> Result<Self> {
        if !(cfg.dt > 0.0) || cfg.episode_steps == 0 || !(cfg.accel_gain > 0.0) {
            return Err(Error::validation(
                "toy1d",
                "dt, episode_steps and accel_gain must be positive",
            ));
        }
        if !(cfg.velocity_scale > 0.0) || !(cfg.accel_scale > 0.0) {
            return Err(Error::validation(
                "toy1d",
                "observation scales must be positive",
            ));
        }
        Ok(Toy1dEnv {
            cfg,
            sigma_v: reward.sigma_v,
            v: 0.0,
            cmd: Command::default(),
            t: 0.0,
            steps: 0,
        })
    }

    pub fn velocity(&self) -> f64 {
        self.v
    }

    pub fn command(&self) -> &Command {
        &self.cmd
    }

    fn observe(&self) -> Vec<f64> {
        let vs = self.cfg.velocity_scale;
        vec![
            self.v / vs,
            self.cmd.vx / vs,
            ((self.cmd.vx - self.v) / self.sigma_v).clamp(-5.0, 5.0),
            (self.cmd.vx_target - self.cmd.vx) / vs,
            self.cmd.a_max_linear / self.cfg.accel_scale,
        ]
    }
}

impl Environment for Toy1dEnv {
    fn obs_dim(&self) -> usize {
        5
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, curriculum: &CurriculumState, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.cmd = curriculum.sample_command(rng, CommandTask::Locomotion, 0.0);
        self.cmd.wz_target = 0.0;
        self.v = 0.0;
        self.t = 0.0;
        self.steps = 0;
        Ok(self.observe())
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != 1 || !action[0].is_finite() {
            return Err(Error::arg("toy1d expects one finite action"));
        }
        self.v += self.cfg.accel_gain * action[0] * self.cfg.dt;
        self.t += self.cfg.dt;
        self.steps += 1;
        self.cmd.advance(self.t, self.cfg.dt)?;
        let e = self.v - self.cmd.vx;
        let tracking = (-(e * e) / (self.sigma_v * self.sigma_v)).exp();
        let breakdown = RewardBreakdown {
            lin_vel_tracking: tracking,
            total: tracking,
            ..RewardBreakdown::default()
        };
        Ok(StepOutcome {
            observation: self.observe(),
            reward: tracking,
            breakdown,
            terminated: false,
            truncated: self.steps >= self.cfg.episode_steps,
            linear_tracking: tracking,
            angular_tracking: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanarEnvConfig {
    /// Control steps per episode.
    pub episode_steps: usize,
    /// Episode fails when the base drops below this height, m.
    pub min_base_height: f64,
    /// Episode fails when the trunk pitches beyond this, rad.
    pub max_base_pitch: f64,
}

impl Default for PlanarEnvConfig {
    fn default() -> Self {
        PlanarEnvConfig {
            episode_steps: 500,
            min_base_height: 0.2,
            max_base_pitch: 0.8,
        }
    }
}

/// Sagittal locomotion task on the planar model. Observations follow
/// [`build_observation`]; actions are joint-target offsets from the default
/// pose. Yaw commands are held at zero because the model cannot turn.
#[derive(Debug, Clone)]
pub struct PlanarEnv {
    cfg: PlanarEnvConfig,
    reward: RewardConfig,
    model: PlanarModel,
    initial: PlanarSimState,
    default_pose: JointVector,
    state: PlanarSimState,
    robot: RobotState,
    cmd: Command,
    tracker: OnlineGaitTracker,
    prev_action: JointVector,
    steps: usize,
    diverged: bool,
}

impl PlanarEnv {
    pub fn new(
        model: PlanarModel,
        cfg: PlanarEnvConfig,
        reward: RewardConfig,
        gait: &GaitConfig,
    ) -> Result<Self> {
        reward.validate()?;
        gait.validate()?;
        if cfg.episode_steps == 0 {
            return Err(Error::validation(
                "planar_env.episode_steps",
                "must be positive",
            ));
        }
        let default_pose = model.spec.default_pose();
        let initial = model.standing_equilibrium(&default_pose)?;
        let tracker = OnlineGaitTracker::new(model.spec.control_dt(), gait)?;
        let robot = model.robot_state(&initial);
        Ok(PlanarEnv {
            cfg,
            reward,
            initial: initial.clone(),
            state: initial,
            robot,
            default_pose,
            model,
            cmd: Command::default(),
            tracker,
            prev_action: [0.0; NUM_JOINTS],
            steps: 0,
            diverged: false,
        })
    }

    pub fn canonical() -> Result<Self> {
        Self::new(
            PlanarModel::new(
                &crate::model::RobotSpec::canonical(),
                PdGains::default(),
                ContactParams::default(),
            )?,
            PlanarEnvConfig::default(),
            RewardConfig::default(),
            &GaitConfig::default(),
        )
    }

    pub fn sim_state(&self) -> &PlanarSimState {
        &self.state
    }

    pub fn robot_state(&self) -> &RobotState {
        &self.robot
    }

    pub fn command(&self) -> &Command {
        &self.cmd
    }

    pub fn model(&self) -> &PlanarModel {
        &self.model
    }

    /// The last step stopped being finite and was rolled back.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Restart from the standing pose with a fixed command instead of a
    /// curriculum draw.
    pub fn reset_with_command(&mut self, cmd: Command) -> Result<Vec<f64>> {
        self.cmd = cmd;
        self.state = self.initial.clone();
        self.robot = self.model.robot_state(&self.state);
        self.tracker.reset();
        self.prev_action = [0.0; NUM_JOINTS];
        self.steps = 0;
        self.diverged = false;
        self.observe()
    }

    fn observe(&self) -> Result<Vec<f64>> {
        build_observation(
            &self.robot,
            &self.cmd,
            &self.default_pose,
            &self.prev_action,
        )
    }
}

impl Environment for PlanarEnv {
    fn obs_dim(&self) -> usize {
        super::OBSERVATION_DIM
    }

    fn action_dim(&self) -> usize {
        NUM_JOINTS
    }

    fn reset(&mut self, curriculum: &CurriculumState, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mut cmd = curriculum.sample_command(rng, CommandTask::Locomotion, 0.0);
        cmd.wz_target = 0.0;
        self.reset_with_command(cmd)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != NUM_JOINTS || action.iter().any(|a| !a.is_finite()) {
            return Err(Error::arg("planar env expects 15 finite actions"));
        }
        let action: JointVector = core::array::from_fn(|i| action[i]);
        let targets: JointVector = core::array::from_fn(|i| self.default_pose[i] + action[i]);
        let targets = clamp_joint_targets(&targets, &self.model.spec);
        let dt = self.model.spec.control_dt();
        self.steps += 1;
        let diverged = match self
            .model
            .control_step(&self.state, &Actuation::Pd(&targets))
        {
            Ok(next) => {
                self.state = next;
                false
            }
            Err(d) => {
                self.state = d.last_valid;
                true
            }
        };
        self.robot = self.model.robot_state(&self.state);
        self.tracker.push(self.state.contacts);
        self.cmd.advance(self.state.t, dt)?;
        let breakdown = compute_reward(
            &RewardInputs {
                state: &self.robot,
                cmd: &self.cmd,
                gait_offsets: self.tracker.offsets(),
                air_times: &self.tracker.air_times(),
                torque: &self.state.torque,
                action: &action,
                prev_action: &self.prev_action,
            },
            &self.reward,
        )?;
        self.prev_action = action;
        let fallen = self.state.q[BASE_Z] < self.cfg.min_base_height
            || self.state.q[BASE_PITCH].abs() > self.cfg.max_base_pitch;
        self.diverged = diverged;
        let terminated = diverged || fallen;
        Ok(StepOutcome {
            observation: self.observe()?,
            reward: if diverged { 0.0 } else { breakdown.total },
            breakdown,
            terminated,
            truncated: !terminated && self.steps >= self.cfg.episode_steps,
            linear_tracking: breakdown.lin_vel_tracking,
            angular_tracking: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::CurriculumConfig;
    use rand::SeedableRng;

    #[test]
    fn toy_tracks_with_ideal_feedforward() {
        let mut env = Toy1dEnv::new(Toy1dConfig::default(), &RewardConfig::default()).unwrap();
        let cur = CurriculumState::new(CurriculumConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        env.reset(&cur, &mut rng).unwrap();
        let dt = Toy1dConfig::default().dt;
        let mut total = 0.0;
        for _ in 0..250 {
            // next ramp value is known from the command, so a perfect action exists
            let mut next = *env.command();
            next.advance(0.0, dt).unwrap();
            let u = (next.vx - env.velocity()) / dt / 40.0;
            let out = env.step(&[u]).unwrap();
            total += out.reward;
        }
        assert!((total / 250.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn toy_truncates_at_episode_end() {
        let cfg = Toy1dConfig {
            episode_steps: 3,
            ..Toy1dConfig::default()
        };
        let mut env = Toy1dEnv::new(cfg, &RewardConfig::default()).unwrap();
        let cur = CurriculumState::new(CurriculumConfig::default()).unwrap();
        env.reset(&cur, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(!env.step(&[0.0]).unwrap().truncated);
        assert!(!env.step(&[0.0]).unwrap().truncated);
        assert!(env.step(&[0.0]).unwrap().truncated);
        assert!(env.step(&[f64::NAN]).is_err());
    }

    #[test]
    fn planar_env_holds_pose_under_zero_action() {
        let mut env = PlanarEnv::canonical().unwrap();
        let cur = CurriculumState::new(CurriculumConfig::default()).unwrap();
        let obs = env.reset(&cur, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(obs.len(), 57);
        for _ in 0..50 {
            let out = env.step(&[0.0; NUM_JOINTS]).unwrap();
            assert!(!out.terminated);
            assert!(out.reward.is_finite());
            assert!((0.0..=1.0).contains(&out.linear_tracking));
        }
        assert_eq!(env.command().wz, 0.0);
    }
}
