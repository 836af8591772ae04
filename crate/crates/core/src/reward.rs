//! Reward terms for spine-driven locomotion.
//!
//! Conventions: phases are stride-cycle fractions in `[0, 1)`; positive spine
//! pitch is extension (dorsal arch), negative is flexion; positive spine yaw
//! turns the nose left; positive yaw rate is counterclockwise seen from above.

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{leg_joint, Command, Foot, JointVector, LegJoint, RobotState, NUM_FEET};

/// Weights applied to each term when forming the scalar reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TermWeights {
    pub gait: f64,
    pub spine_undulation: f64,
    pub spine_steering: f64,
    pub lin_vel_tracking: f64,
    pub ang_vel_tracking: f64,
    pub air_time: f64,
    /// Applied to the sum of squared joint torques.
    pub torque: f64,
    /// Applied to the sum of squared action differences.
    pub action_rate: f64,
    /// Applied to the squared horizontal components of projected gravity.
    pub orientation: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        TermWeights {
            gait: 1.0,
            spine_undulation: 0.5,
            spine_steering: 0.5,
            lin_vel_tracking: 2.0,
            ang_vel_tracking: 1.0,
            air_time: 0.5,
            torque: -1e-4,
            action_rate: -0.01,
            orientation: -1.0,
        }
    }
}

/// Reward hyperparameters. None of these are known for the hardware
/// policy; the defaults are documented modelling choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Gaussian tolerance of the phase-offset kernel, cycle fraction.
    pub sigma: f64,
    /// Target front-pair touchdown offset, cycle fraction.
    pub delta_front_target: f64,
    /// Target rear-pair touchdown offset, cycle fraction.
    pub delta_rear_target: f64,
    /// Sensitivity of the spine phase score, s²/rad².
    pub alpha: f64,
    /// Amplitude cap while flexion is expected, rad. Taken from the observed
    /// flexion extreme of fast gallops.
    pub theta_flex: f64,
    /// Amplitude cap while extension is expected, rad. Half of `theta_flex`.
    pub theta_ext: f64,
    /// Weight of the over-rotation penalty.
    pub w_e: f64,
    /// Weight of the amplitude boost on the phase score.
    pub w_b: f64,
    /// Saturation scale of the steering term.
    pub k: f64,
    /// Yaw-rate dead zone of the steering term, rad/s.
    pub omega_th: f64,
    /// Width of the velocity-tracking kernels, m/s (rad/s for yaw).
    pub sigma_v: f64,
    /// Per-foot cap on the air-time bonus, s.
    pub air_time_cap: f64,
    pub term_weights: TermWeights,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            sigma: 0.05,
            delta_front_target: 0.15,
            delta_rear_target: 0.15,
            alpha: 1.0,
            theta_flex: 0.6,
            theta_ext: 0.3,
            w_e: 5.0,
            w_b: 2.0,
            k: 2.0,
            omega_th: 0.1,
            sigma_v: 0.25,
            air_time_cap: 0.5,
            term_weights: TermWeights::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::validation("reward.sigma", "must be positive"));
        }
        if !(self.theta_ext > 0.0) {
            return Err(Error::validation("reward.theta_ext", "must be positive"));
        }
        if !(self.theta_flex > self.theta_ext) {
            return Err(Error::validation(
                "reward.theta_flex",
                "flexion threshold must exceed the extension threshold",
            ));
        }
        if !(self.omega_th > 0.0) {
            return Err(Error::validation("reward.omega_th", "must be positive"));
        }
        for (field, v) in [
            ("reward.delta_front_target", self.delta_front_target),
            ("reward.delta_rear_target", self.delta_rear_target),
        ] {
            if !(v > 0.0 && v <= 0.5) {
                return Err(Error::validation(field, "must lie in (0, 0.5]"));
            }
        }
        if !(self.w_e >= 0.0) {
            return Err(Error::validation("reward.w_e", "must be non-negative"));
        }
        if !(self.sigma_v > 0.0) {
            return Err(Error::validation("reward.sigma_v", "must be positive"));
        }
        if !(self.air_time_cap >= 0.0) {
            return Err(Error::validation(
                "reward.air_time_cap",
                "must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Shortest distance between two phases on the unit circle, in `[0, 0.5]`.
pub fn phase_distance(measured: f64, target: f64) -> f64 {
    let d = (measured - target).abs() % 1.0;
    d.min(1.0 - d)
}

/// Gaussian kernel on a phase error: `exp(-delta² / sigma²)`.
pub fn gait_pair_reward(delta: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::arg(alloc::format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok((-(delta * delta) / (sigma * sigma)).exp())
}

/// Product of the front- and rear-pair kernels. Nothing couples the front
/// phase to the rear phase.
pub fn gait_reward(front_offset: f64, rear_offset: f64, cfg: &RewardConfig) -> Result<f64> {
    let front = gait_pair_reward(
        phase_distance(front_offset, cfg.delta_front_target),
        cfg.sigma,
    )?;
    let rear = gait_pair_reward(
        phase_distance(rear_offset, cfg.delta_rear_target),
        cfg.sigma,
    )?;
    Ok(front * rear)
}

/// Mean of the rear thigh velocities and the sign-inverted front thigh
/// velocities. Positive means the limbs are in the phase that calls for
/// spinal extension.
pub fn effective_leg_velocity(state: &RobotState) -> f64 {
    let qd = &state.qd;
    let thigh = |foot| qd[leg_joint(foot, LegJoint::Thigh)];
    (thigh(Foot::LH) + thigh(Foot::RH) - thigh(Foot::LF) - thigh(Foot::RF)) / 4.0
}

/// `tanh(pitch_rate * v_leg * alpha)`: positive when the spine moves in the
/// direction the limb phase calls for.
pub fn spine_phase_score(pitch_rate: f64, v_leg: f64, alpha: f64) -> f64 {
    (pitch_rate * v_leg * alpha).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpineState {
    Flexion,
    Extension,
}

impl SpineState {
    pub fn sign(self) -> f64 {
        match self {
            SpineState::Flexion => -1.0,
            SpineState::Extension => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeTerms {
    pub expected: SpineState,
    /// Signed deflection toward the expected state, rad.
    pub r_amp: f64,
    /// `r_amp` clamped to `[0, theta_th]`.
    pub r_amp_clamped: f64,
    /// Cap in force for the expected state.
    pub theta_th: f64,
}

pub fn spine_amplitude_reward(theta_pitch: f64, v_leg: f64, cfg: &RewardConfig) -> AmplitudeTerms {
    let expected = if v_leg > 0.0 {
        SpineState::Extension
    } else {
        SpineState::Flexion
    };
    let theta_th = match expected {
        SpineState::Extension => cfg.theta_ext,
        SpineState::Flexion => cfg.theta_flex,
    };
    let r_amp = expected.sign() * theta_pitch;
    AmplitudeTerms {
        expected,
        r_amp,
        r_amp_clamped: r_amp.clamp(0.0, theta_th),
        theta_th,
    }
}

/// `w_e * max(0, r_amp - theta_th)²`
pub fn excess_penalty(r_amp: f64, theta_th: f64, w_e: f64) -> f64 {
    let excess = (r_amp - theta_th).max(0.0);
    w_e * excess * excess
}

/// `r_phase * (1 + w_b * r_amp_clamped) - penalty`
pub fn combine_undulation(r_phase: f64, r_amp_clamped: f64, w_b: f64, penalty: f64) -> f64 {
    r_phase * (1.0 + w_b * r_amp_clamped) - penalty
}

pub fn spine_undulation_reward(state: &RobotState, cfg: &RewardConfig) -> f64 {
    let v_leg = effective_leg_velocity(state);
    let r_phase = spine_phase_score(state.spine_pitch_rate(), v_leg, cfg.alpha);
    let amp = spine_amplitude_reward(state.spine_pitch(), v_leg, cfg);
    let p = excess_penalty(amp.r_amp, amp.theta_th, cfg.w_e);
    combine_undulation(r_phase, amp.r_amp_clamped, cfg.w_b, p)
}

/// Zero inside the yaw-rate dead zone, otherwise `tanh(-theta_yaw / wz_cmd * k)`.
pub fn spine_steering_reward(theta_yaw: f64, wz_cmd: f64, cfg: &RewardConfig) -> f64 {
    if wz_cmd.abs() < cfg.omega_th {
        0.0
    } else {
        (-theta_yaw / wz_cmd * cfg.k).tanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuxiliaryTerms {
    pub lin_vel_tracking: f64,
    pub ang_vel_tracking: f64,
    pub air_time: f64,
}

/// Velocity-tracking kernels and the capped air-time bonus. `air_times` holds
/// the current airborne duration of each foot, s.
pub fn auxiliary_rewards(
    state: &RobotState,
    cmd: &Command,
    air_times: &[f64; NUM_FEET],
    cfg: &RewardConfig,
) -> AuxiliaryTerms {
    let s2 = cfg.sigma_v * cfg.sigma_v;
    let ex = state.base_linear_velocity.x - cmd.vx;
    let ey = state.base_linear_velocity.y - cmd.vy;
    let ez = state.base_angular_velocity.z - cmd.wz;
    AuxiliaryTerms {
        lin_vel_tracking: (-(ex * ex + ey * ey) / s2).exp(),
        ang_vel_tracking: (-(ez * ez) / s2).exp(),
        air_time: air_times.iter().map(|a| a.min(cfg.air_time_cap)).sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegularizerTerms {
    pub torque: f64,
    pub action_rate: f64,
    pub orientation: f64,
}

pub fn regularizers(
    state: &RobotState,
    torque: &JointVector,
    action: &JointVector,
    prev_action: &JointVector,
) -> RegularizerTerms {
    let g = state.projected_gravity();
    RegularizerTerms {
        torque: torque.iter().map(|t| t * t).sum(),
        action_rate: action
            .iter()
            .zip(prev_action)
            .map(|(a, b)| (a - b) * (a - b))
            .sum(),
        orientation: g.x * g.x + g.y * g.y,
    }
}

/// Every reward term of one control step plus the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub gait: f64,
    pub spine_undulation: f64,
    pub spine_steering: f64,
    pub lin_vel_tracking: f64,
    pub ang_vel_tracking: f64,
    pub air_time: f64,
    pub torque: f64,
    pub action_rate: f64,
    pub orientation: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub const TERM_NAMES: [&'static str; 9] = [
        "gait",
        "spine_undulation",
        "spine_steering",
        "lin_vel_tracking",
        "ang_vel_tracking",
        "air_time",
        "torque",
        "action_rate",
        "orientation",
    ];

    pub fn terms(&self) -> [f64; 9] {
        [
            self.gait,
            self.spine_undulation,
            self.spine_steering,
            self.lin_vel_tracking,
            self.ang_vel_tracking,
            self.air_time,
            self.torque,
            self.action_rate,
            self.orientation,
        ]
    }

    /// Recompute `total` from the term values.
    pub fn weighted(mut self, w: &TermWeights) -> Self {
        let weights = [
            w.gait,
            w.spine_undulation,
            w.spine_steering,
            w.lin_vel_tracking,
            w.ang_vel_tracking,
            w.air_time,
            w.torque,
            w.action_rate,
            w.orientation,
        ];
        self.total = self
            .terms()
            .iter()
            .zip(weights)
            .fold(0.0, |acc, (t, w)| acc + w * t);
        self
    }
}

/// Everything a full reward evaluation needs for one control step.
#[derive(Debug, Clone, Copy)]
pub struct RewardInputs<'a> {
    pub state: &'a RobotState,
    pub cmd: &'a Command,
    /// Measured (front, rear) touchdown offsets; `None` until enough
    /// touchdowns have been seen, in which case the gait term is zero.
    pub gait_offsets: Option<(f64, f64)>,
    pub air_times: &'a [f64; NUM_FEET],
    pub torque: &'a JointVector,
    pub action: &'a JointVector,
    pub prev_action: &'a JointVector,
}

pub fn compute_reward(inputs: &RewardInputs<'_>, cfg: &RewardConfig) -> Result<RewardBreakdown> {
    let gait = match inputs.gait_offsets {
        Some((front, rear)) => gait_reward(front, rear, cfg)?,
        None => 0.0,
    };
    let aux = auxiliary_rewards(inputs.state, inputs.cmd, inputs.air_times, cfg);
    let reg = regularizers(
        inputs.state,
        inputs.torque,
        inputs.action,
        inputs.prev_action,
    );
    Ok(RewardBreakdown {
        gait,
        spine_undulation: spine_undulation_reward(inputs.state, cfg),
        spine_steering: spine_steering_reward(inputs.state.spine_yaw(), inputs.cmd.wz, cfg),
        lin_vel_tracking: aux.lin_vel_tracking,
        ang_vel_tracking: aux.ang_vel_tracking,
        air_time: aux.air_time,
        torque: reg.torque,
        action_rate: reg.action_rate,
        orientation: reg.orientation,
        total: 0.0,
    }
    .weighted(&cfg.term_weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SPINE_PITCH, SPINE_YAW};
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn phase_distance_examples() {
        assert_eq!(phase_distance(0.5, 0.5), 0.0);
        // brute force over k in {-1, 0, 1}
        let brute = [-1.0f64, 0.0, 1.0]
            .iter()
            .map(|k| (0.95 - 0.05 + k).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(close(phase_distance(0.95, 0.05), brute));
        assert!(close(brute, 0.10));
        assert_eq!(phase_distance(0.25, 0.75), 0.5);
    }

    #[test]
    fn pair_reward_examples() {
        assert_eq!(gait_pair_reward(0.0, 0.3).unwrap(), 1.0);
        assert!(close(gait_pair_reward(0.2, 0.2).unwrap(), (-1.0f64).exp()));
        assert!(close(gait_pair_reward(0.5, 0.1).unwrap(), (-25.0f64).exp()));
        assert!(gait_pair_reward(0.1, 0.0).is_err());
        assert!(gait_pair_reward(0.1, -1.0).is_err());
    }

    #[test]
    fn gait_reward_examples() {
        let cfg = RewardConfig {
            sigma: 0.08,
            ..RewardConfig::default()
        };
        assert_eq!(gait_reward(0.15, 0.15, &cfg).unwrap(), 1.0);
        // bound: zero offset in the front pair
        let bound_front = gait_reward(0.0, 0.15, &cfg).unwrap();
        assert!(close(bound_front, (-(0.15f64 / 0.08).powi(2)).exp()));
        assert!((bound_front - 0.0296).abs() < 5e-4);
        // one pair antipodal to its target
        let antipodal = gait_reward(0.15, 0.65, &cfg).unwrap();
        assert!(close(antipodal, (-(0.5f64 / 0.08).powi(2)).exp()));
        assert!((antipodal / 1.1e-17 - 1.0).abs() < 0.05);
    }

    #[test]
    fn leg_velocity_examples() {
        let mut s = RobotState::default();
        assert_eq!(effective_leg_velocity(&s), 0.0);
        s.qd[leg_joint(Foot::LH, LegJoint::Thigh)] = 1.0;
        s.qd[leg_joint(Foot::RH, LegJoint::Thigh)] = 1.0;
        s.qd[leg_joint(Foot::LF, LegJoint::Thigh)] = -1.0;
        s.qd[leg_joint(Foot::RF, LegJoint::Thigh)] = -1.0;
        assert_eq!(effective_leg_velocity(&s), 1.0);
        s.qd[leg_joint(Foot::LF, LegJoint::Thigh)] = 1.0;
        s.qd[leg_joint(Foot::RF, LegJoint::Thigh)] = 1.0;
        assert_eq!(effective_leg_velocity(&s), 0.0);
    }

    #[test]
    fn phase_score_examples() {
        assert_eq!(spine_phase_score(0.0, 3.0, 1.0), 0.0);
        assert!(close(spine_phase_score(1.0, 1.0, 1.0), 1.0f64.tanh()));
        assert!((spine_phase_score(1.0, 1.0, 1.0) - 0.76159).abs() < 1e-5);
        assert!(close(spine_phase_score(-1.0, 1.0, 1.0), -(1.0f64.tanh())));
    }

    #[test]
    fn amplitude_examples() {
        let cfg = RewardConfig::default();
        let a = spine_amplitude_reward(0.0, 1.0, &cfg);
        assert_eq!((a.r_amp, a.r_amp_clamped), (0.0, 0.0));

        let a = spine_amplitude_reward(-0.5, -1.0, &cfg);
        assert_eq!(a.expected, SpineState::Flexion);
        assert_eq!(a.r_amp, 0.5);
        assert_eq!(a.r_amp_clamped, 0.5);
        assert_eq!(a.theta_th, 0.6);

        let a = spine_amplitude_reward(0.5, 1.0, &cfg);
        assert_eq!(a.expected, SpineState::Extension);
        assert_eq!(a.r_amp, 0.5);
        assert_eq!(a.r_amp_clamped, 0.3);

        // wrong-direction deflection earns nothing
        let a = spine_amplitude_reward(0.4, -1.0, &cfg);
        assert_eq!(a.r_amp, -0.4);
        assert_eq!(a.r_amp_clamped, 0.0);
    }

    #[test]
    fn excess_penalty_examples() {
        assert_eq!(excess_penalty(0.2, 0.3, 10.0), 0.0);
        assert_eq!(excess_penalty(0.3, 0.3, 10.0), 0.0);
        assert!(close(excess_penalty(0.5, 0.3, 10.0), 0.4));
        assert_eq!(excess_penalty(0.5, 0.3, 0.0), 0.0);
    }

    #[test]
    fn undulation_examples() {
        let cfg = RewardConfig::default();
        let mut s = RobotState::default();
        // zero pitch rate but over-rotated into flexion: only the penalty remains
        s.q[SPINE_PITCH] = -0.9;
        s.qd[leg_joint(Foot::LF, LegJoint::Thigh)] = 1.0;
        let p = excess_penalty(0.9, cfg.theta_flex, cfg.w_e);
        assert!(p > 0.0);
        assert!(close(spine_undulation_reward(&s, &cfg), -p));

        assert!(close(combine_undulation(0.5, 0.2, 2.0, 0.0), 0.7));
    }

    #[test]
    fn undulation_penalizes_over_rotation() {
        let cfg = RewardConfig::default();
        let mut s = RobotState::default();
        // extension expected, spine extending
        s.qd[leg_joint(Foot::LH, LegJoint::Thigh)] = 2.0;
        s.qd[leg_joint(Foot::RH, LegJoint::Thigh)] = 2.0;
        s.qd[SPINE_PITCH] = 1.0;
        s.q[SPINE_PITCH] = cfg.theta_ext - 0.05;
        let in_range = spine_undulation_reward(&s, &cfg);
        s.q[SPINE_PITCH] = cfg.theta_ext + 0.2;
        let over = spine_undulation_reward(&s, &cfg);
        let r_phase = spine_phase_score(1.0, 1.0, cfg.alpha);
        let expected_in = r_phase * (1.0 + cfg.w_b * (cfg.theta_ext - 0.05));
        let expected_over = r_phase * (1.0 + cfg.w_b * cfg.theta_ext) - cfg.w_e * 0.2 * 0.2;
        assert!(close(in_range, expected_in));
        assert!(close(over, expected_over));
        assert!(over < in_range);
    }

    #[test]
    fn steering_examples() {
        let cfg = RewardConfig::default();
        assert_eq!(spine_steering_reward(0.7, 0.05, &cfg), 0.0);
        assert!(close(spine_steering_reward(-0.5, 1.0, &cfg), 1.0f64.tanh()));
        assert!(close(
            spine_steering_reward(0.5, 1.0, &cfg),
            -(1.0f64.tanh())
        ));
        // the boundary itself is outside the dead zone
        assert!(spine_steering_reward(-0.5, cfg.omega_th, &cfg) > 0.0);
    }

    #[test]
    fn auxiliary_examples() {
        let cfg = RewardConfig::default();
        let mut s = RobotState::default();
        let cmd = Command {
            vx: 1.0,
            wz: 0.5,
            ..Command::default()
        };
        s.base_linear_velocity.x = 1.0;
        s.base_angular_velocity.z = 0.5;
        let aux = auxiliary_rewards(&s, &cmd, &[0.0; 4], &cfg);
        assert_eq!(aux.lin_vel_tracking, 1.0);
        assert_eq!(aux.ang_vel_tracking, 1.0);
        assert_eq!(aux.air_time, 0.0);

        s.base_linear_velocity.x = 1.0 + cfg.sigma_v;
        let aux = auxiliary_rewards(&s, &cmd, &[0.1, 0.2, 0.9, 0.0], &cfg);
        assert!(close(aux.lin_vel_tracking, (-1.0f64).exp()));
        assert!(close(aux.air_time, 0.1 + 0.2 + cfg.air_time_cap));
    }

    #[test]
    fn breakdown_total_is_weighted_sum() {
        let cfg = RewardConfig::default();
        let mut s = RobotState::default();
        s.q[SPINE_YAW] = -0.3;
        s.qd[SPINE_PITCH] = 0.7;
        s.qd[leg_joint(Foot::LH, LegJoint::Thigh)] = 1.5;
        let cmd = Command {
            vx: 0.5,
            wz: 1.0,
            ..Command::default()
        };
        let torque = [1.0; 15];
        let action = [0.1; 15];
        let prev = [0.0; 15];
        let b = compute_reward(
            &RewardInputs {
                state: &s,
                cmd: &cmd,
                gait_offsets: Some((0.1, 0.2)),
                air_times: &[0.1, 0.0, 0.0, 0.3],
                torque: &torque,
                action: &action,
                prev_action: &prev,
            },
            &cfg,
        )
        .unwrap();
        let w = cfg.term_weights;
        let manual = 0.0
            + w.gait * b.gait
            + w.spine_undulation * b.spine_undulation
            + w.spine_steering * b.spine_steering
            + w.lin_vel_tracking * b.lin_vel_tracking
            + w.ang_vel_tracking * b.ang_vel_tracking
            + w.air_time * b.air_time
            + w.torque * b.torque
            + w.action_rate * b.action_rate
            + w.orientation * b.orientation;
        assert_eq!(b.total, manual);
        assert_eq!(b.torque, 15.0);
        assert!(b.spine_steering > 0.0);
    }

    #[test]
    fn config_validation() {
        RewardConfig::default().validate().unwrap();
        let bad = RewardConfig {
            theta_flex: 0.2,
            ..RewardConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RewardConfig {
            delta_front_target: 0.0,
            ..RewardConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn phase_distance_symmetric_and_periodic(
            m in 0u32..4096, t in 0u32..4096, shift in -3i32..3,
        ) {
            // dyadic phases keep `m + k` exact
            let m = m as f64 / 1024.0;
            let t = t as f64 / 1024.0;
            let d = phase_distance(m, t);
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert_eq!(d, phase_distance(t, m));
            prop_assert_eq!(d, phase_distance(m + shift as f64, t));
        }

        #[test]
        fn phase_distance_matches_brute_force(m in -5.0f64..5.0, t in -5.0f64..5.0) {
            let brute = (-12..=12)
                .map(|k| (m - t + k as f64).abs())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((phase_distance(m, t) - brute).abs() < 1e-12);
        }

        #[test]
        fn terms_are_bounded(
            front in -2.0f64..2.0, rear in -2.0f64..2.0,
            rate in -50.0f64..50.0, v_leg in -50.0f64..50.0,
            yaw in -1.0f64..1.0, wz in -8.0f64..8.0,
        ) {
            let cfg = RewardConfig::default();
            let g = gait_reward(front, rear, &cfg).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            let p = spine_phase_score(rate, v_leg, cfg.alpha);
            prop_assert!((-1.0..=1.0).contains(&p));
            let s = spine_steering_reward(yaw, wz, &cfg);
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
