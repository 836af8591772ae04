//! Robot description and the state types every other module shares.
//!
//! Joint vectors always use the same 15-entry layout: three leg joints
//! (hip, thigh, calf) for each of LF, RF, LH, RH, followed by the spine yaw,
//! pitch and roll joints. Foot vectors are ordered LF, RF, LH, RH.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 15;
pub const NUM_FEET: usize = 4;

pub const SPINE_YAW: usize = 12;
pub const SPINE_PITCH: usize = 13;
pub const SPINE_ROLL: usize = 14;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "LF_hip",
    "LF_thigh",
    "LF_calf",
    "RF_hip",
    "RF_thigh",
    "RF_calf",
    "LH_hip",
    "LH_thigh",
    "LH_calf",
    "RH_hip",
    "RH_thigh",
    "RH_calf",
    "spine_yaw",
    "spine_pitch",
    "spine_roll",
];

pub type JointVector = [f64; NUM_JOINTS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Foot {
    LF,
    RF,
    LH,
    RH,
}

impl Foot {
    pub const ALL: [Foot; NUM_FEET] = [Foot::LF, Foot::RF, Foot::LH, Foot::RH];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Foot::LF => "LF",
            Foot::RF => "RF",
            Foot::LH => "LH",
            Foot::RH => "RH",
        }
    }

    pub fn is_fore(self) -> bool {
        matches!(self, Foot::LF | Foot::RF)
    }

    /// Same girdle, other side.
    pub fn mirrored(self) -> Foot {
        match self {
            Foot::LF => Foot::RF,
            Foot::RF => Foot::LF,
            Foot::LH => Foot::RH,
            Foot::RH => Foot::LH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegJoint {
    Hip = 0,
    Thigh = 1,
    Calf = 2,
}

/// Index of a leg joint in the 15-entry joint layout.
pub const fn leg_joint(foot: Foot, joint: LegJoint) -> usize {
    foot as usize * 3 + joint as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// rad
    pub lower: f64,
    /// rad
    pub upper: f64,
    /// N·m
    pub torque_limit: f64,
    /// Nominal standing pose, rad.
    pub default_position: f64,
}

/// How the total mass is apportioned. Only the aggregate mass is known for
/// the hardware; the split is a modelling choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassSplit {
    pub front_body: f64,
    pub rear_body: f64,
    pub legs: f64,
    /// Fractions of one leg's mass carried by the hip, thigh and calf links.
    pub hip_link: f64,
    pub thigh_link: f64,
    pub calf_link: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyGeometry {
    /// Distance along the trunk from the spine joint to each hip, m.
    pub hip_offset: f64,
    /// Trunk box height, m.
    pub body_height: f64,
    pub thigh_length: f64,
    pub calf_length: f64,
}

/// Static morphology of the robot. Construct through [`RobotSpec::canonical`]
/// or deserialize and call [`RobotSpec::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub joints: Vec<JointSpec>,
    /// kg
    pub total_mass: f64,
    /// m
    pub body_length: f64,
    pub body_width: f64,
    pub leg_length: f64,
    pub standing_height: f64,
    /// Policy/PD loop rate, Hz.
    pub control_rate: f64,
    /// Physics substeps per control step.
    pub sim_substeps: u32,
    pub mass_split: MassSplit,
    pub geometry: BodyGeometry,
}

impl RobotSpec {
    /// The hardware morphology: 20 kg, 625 mm long, 380 mm wide, 580 mm legs,
    /// 440 mm standing height, 33.5 N·m leg and 50 N·m spine actuators, spine
    /// ranges ±1 (yaw), ±1.5 (pitch), ±2 (roll) rad.
    pub fn canonical() -> Self {
        const LEG_TORQUE: f64 = 33.5;
        const SPINE_TORQUE: f64 = 50.0;
        let mut joints = Vec::with_capacity(NUM_JOINTS);
        for foot in Foot::ALL {
            let name = foot.name();
            joints.push(JointSpec {
                name: format!("{name}_hip"),
                lower: -0.8,
                upper: 0.8,
                torque_limit: LEG_TORQUE,
                default_position: 0.0,
            });
            joints.push(JointSpec {
                name: format!("{name}_thigh"),
                lower: -1.5,
                upper: 2.6,
                torque_limit: LEG_TORQUE,
                default_position: 0.7,
            });
            joints.push(JointSpec {
                name: format!("{name}_calf"),
                lower: -2.7,
                upper: 0.0,
                torque_limit: LEG_TORQUE,
                default_position: -1.4,
            });
        }
        for (name, range) in [
            ("spine_yaw", 1.0),
            ("spine_pitch", 1.5),
            ("spine_roll", 2.0),
        ] {
            joints.push(JointSpec {
                name: name.to_string(),
                lower: -range,
                upper: range,
                torque_limit: SPINE_TORQUE,
                default_position: 0.0,
            });
        }
        RobotSpec {
            joints,
            total_mass: 20.0,
            body_length: 0.625,
            body_width: 0.38,
            leg_length: 0.58,
            standing_height: 0.44,
            control_rate: 50.0,
            sim_substeps: 20,
            mass_split: MassSplit {
                front_body: 0.40,
                rear_body: 0.35,
                legs: 0.25,
                hip_link: 0.3,
                thigh_link: 0.4,
                calf_link: 0.3,
            },
            geometry: BodyGeometry {
                hip_offset: 0.25,
                body_height: 0.10,
                thigh_length: 0.29,
                calf_length: 0.29,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.len() != NUM_JOINTS {
            return Err(Error::validation(
                "joints",
                format!("expected {NUM_JOINTS} joints, found {}", self.joints.len()),
            ));
        }
        for (i, (joint, expected)) in self.joints.iter().zip(JOINT_NAMES).enumerate() {
            if joint.name != expected {
                return Err(Error::validation(
                    format!("joints[{i}].name"),
                    format!("expected `{expected}`, found `{}`", joint.name),
                ));
            }
            if !(joint.lower.is_finite() && joint.upper.is_finite()) || joint.lower >= joint.upper {
                return Err(Error::validation(
                    format!("joints[{i}].lower"),
                    format!("lower {} must be below upper {}", joint.lower, joint.upper),
                ));
            }
            if !(joint.torque_limit > 0.0) || !joint.torque_limit.is_finite() {
                return Err(Error::validation(
                    format!("joints[{i}].torque_limit"),
                    "must be positive",
                ));
            }
            if !(joint.lower..=joint.upper).contains(&joint.default_position) {
                return Err(Error::validation(
                    format!("joints[{i}].default_position"),
                    "must lie inside the joint limits",
                ));
            }
        }
        positive("total_mass", self.total_mass)?;
        positive("body_length", self.body_length)?;
        positive("body_width", self.body_width)?;
        positive("leg_length", self.leg_length)?;
        positive("standing_height", self.standing_height)?;
        positive("control_rate", self.control_rate)?;
        if self.sim_substeps == 0 {
            return Err(Error::validation("sim_substeps", "must be at least 1"));
        }
        let m = &self.mass_split;
        for (name, v) in [
            ("mass_split.front_body", m.front_body),
            ("mass_split.rear_body", m.rear_body),
            ("mass_split.legs", m.legs),
            ("mass_split.hip_link", m.hip_link),
            ("mass_split.thigh_link", m.thigh_link),
            ("mass_split.calf_link", m.calf_link),
        ] {
            positive(name, v)?;
        }
        if (m.front_body + m.rear_body + m.legs - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "mass_split",
                "body and leg fractions must sum to 1",
            ));
        }
        if (m.hip_link + m.thigh_link + m.calf_link - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "mass_split",
                "leg link fractions must sum to 1",
            ));
        }
        let g = &self.geometry;
        positive("geometry.hip_offset", g.hip_offset)?;
        positive("geometry.body_height", g.body_height)?;
        positive("geometry.thigh_length", g.thigh_length)?;
        positive("geometry.calf_length", g.calf_length)?;
        if 2.0 * g.hip_offset > self.body_length {
            return Err(Error::validation(
                "geometry.hip_offset",
                "hips lie outside the trunk",
            ));
        }
        if g.thigh_length + g.calf_length > self.leg_length + 1e-9 {
            return Err(Error::validation(
                "geometry",
                "thigh + calf length exceeds leg_length",
            ));
        }
        Ok(())
    }

    pub fn lower(&self) -> JointVector {
        core::array::from_fn(|i| self.joints[i].lower)
    }

    pub fn upper(&self) -> JointVector {
        core::array::from_fn(|i| self.joints[i].upper)
    }

    pub fn torque_limits(&self) -> JointVector {
        core::array::from_fn(|i| self.joints[i].torque_limit)
    }

    pub fn default_pose(&self) -> JointVector {
        core::array::from_fn(|i| self.joints[i].default_position)
    }

    /// Physics step, s.
    pub fn physics_dt(&self) -> f64 {
        1.0 / (self.control_rate * self.sim_substeps as f64)
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    pub fn leg_mass(&self) -> f64 {
        self.total_mass * self.mass_split.legs / NUM_FEET as f64
    }

    pub fn front_body_mass(&self) -> f64 {
        self.total_mass * self.mass_split.front_body
    }

    pub fn rear_body_mass(&self) -> f64 {
        self.total_mass * self.mass_split.rear_body
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// Safety clamp applied to policy targets before they reach the PD loop.
pub fn clamp_joint_targets(q_target: &JointVector, spec: &RobotSpec) -> JointVector {
    core::array::from_fn(|i| q_target[i].clamp(spec.joints[i].lower, spec.joints[i].upper))
}

/// Instantaneous robot state as seen by rewards and observations.
///
/// Base velocities are expressed in the base (front body) frame. Orientation
/// uses intrinsic Z-Y-X Euler angles when decomposed.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub t: f64,
    pub q: JointVector,
    pub qd: JointVector,
    pub base_position: Vector3<f64>,
    pub base_orientation: UnitQuaternion<f64>,
    pub base_linear_velocity: Vector3<f64>,
    pub base_angular_velocity: Vector3<f64>,
    pub foot_contact: [bool; NUM_FEET],
}

impl Default for RobotState {
    fn default() -> Self {
        RobotState {
            t: 0.0,
            q: [0.0; NUM_JOINTS],
            qd: [0.0; NUM_JOINTS],
            base_position: Vector3::zeros(),
            base_orientation: UnitQuaternion::identity(),
            base_linear_velocity: Vector3::zeros(),
            base_angular_velocity: Vector3::zeros(),
            foot_contact: [false; NUM_FEET],
        }
    }
}

impl RobotState {
    /// `[roll, pitch, yaw]`, rad.
    pub fn base_euler(&self) -> [f64; 3] {
        let (roll, pitch, yaw) = self.base_orientation.euler_angles();
        [roll, pitch, yaw]
    }

    /// World gravity direction expressed in the base frame; `(0, 0, -1)` when upright.
    pub fn projected_gravity(&self) -> Vector3<f64> {
        self.base_orientation
            .inverse_transform_vector(&Vector3::new(0.0, 0.0, -1.0))
    }

    pub fn spine_pitch(&self) -> f64 {
        self.q[SPINE_PITCH]
    }

    pub fn spine_pitch_rate(&self) -> f64 {
        self.qd[SPINE_PITCH]
    }

    pub fn spine_yaw(&self) -> f64 {
        self.q[SPINE_YAW]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
            && self.base_position.iter().all(|v| v.is_finite())
            && self.base_orientation.coords.iter().all(|v| v.is_finite())
            && self.base_linear_velocity.iter().all(|v| v.is_finite())
            && self.base_angular_velocity.iter().all(|v| v.is_finite())
    }
}

/// Velocity command with its acceleration-limited ramp.
///
/// `*_target` are the sampled goals; `vx`, `vy`, `wz` are the ramped values the
/// robot is actually asked to track.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    pub vx_target: f64,
    pub vy_target: f64,
    pub wz_target: f64,
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
    /// m/s²
    pub a_max_linear: f64,
    /// rad/s²
    pub a_max_angular: f64,
    /// Episode time before which the yaw-rate ramp is held at zero, s.
    pub wz_activation_time: f64,
}

impl Command {
    /// `[vx, vy, wz]` as currently ramped.
    pub fn current(&self) -> [f64; 3] {
        [self.vx, self.vy, self.wz]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_spec_matches_hardware_morphology() {
        let spec = RobotSpec::canonical();
        spec.validate().unwrap();
        assert_eq!(spec.joints[SPINE_YAW].upper, 1.0);
        assert_eq!(spec.joints[SPINE_YAW].lower, -1.0);
        assert_eq!(spec.joints[SPINE_PITCH].upper, 1.5);
        assert_eq!(spec.joints[SPINE_PITCH].lower, -1.5);
        assert_eq!(spec.joints[SPINE_ROLL].upper, 2.0);
        assert_eq!(spec.joints[SPINE_ROLL].lower, -2.0);
        for i in 0..12 {
            assert_eq!(spec.joints[i].torque_limit, 33.5);
        }
        for i in 12..15 {
            assert_eq!(spec.joints[i].torque_limit, 50.0);
        }
        assert_eq!(spec.total_mass, 20.0);
        assert_eq!(spec.body_length, 0.625);
        let masses = spec.front_body_mass() + spec.rear_body_mass() + 4.0 * spec.leg_mass();
        assert!((masses - 20.0).abs() < 1e-12);
        assert!((spec.physics_dt() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn joint_layout_is_consistent() {
        assert_eq!(leg_joint(Foot::LF, LegJoint::Hip), 0);
        assert_eq!(leg_joint(Foot::RH, LegJoint::Calf), 11);
        assert_eq!(
            JOINT_NAMES[leg_joint(Foot::LH, LegJoint::Thigh)],
            "LH_thigh"
        );
        assert_eq!(JOINT_NAMES[SPINE_PITCH], "spine_pitch");
    }

    #[test]
    fn inverted_limits_are_rejected() {
        let mut spec = RobotSpec::canonical();
        spec.joints[3].lower = 1.0;
        spec.joints[3].upper = 1.0;
        match spec.validate() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "joints[3].lower"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fourteen_joints_are_rejected() {
        let mut spec = RobotSpec::canonical();
        spec.joints.pop();
        match spec.validate() {
            Err(Error::Validation { field, reason }) => {
                assert_eq!(field, "joints");
                assert!(reason.contains("15"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_control_rate_is_rejected() {
        let mut spec = RobotSpec::canonical();
        spec.control_rate = 0.0;
        assert!(
            matches!(spec.validate(), Err(Error::Validation { field, .. }) if field == "control_rate")
        );
    }

    #[test]
    fn clamp_examples() {
        let spec = RobotSpec::canonical();
        let zeros = [0.0; NUM_JOINTS];
        assert_eq!(clamp_joint_targets(&zeros, &spec), zeros);

        let mut q = zeros;
        q[SPINE_PITCH] = 2.0;
        q[SPINE_ROLL] = -3.0;
        let c = clamp_joint_targets(&q, &spec);
        assert_eq!(c[SPINE_PITCH], 1.5);
        assert_eq!(c[SPINE_ROLL], -2.0);
        assert_eq!(c[SPINE_YAW], 0.0);
    }

    #[test]
    fn spine_zero_targets_are_identity() {
        let spec = RobotSpec::canonical();
        let q = spec.default_pose();
        assert_eq!(clamp_joint_targets(&q, &spec), q);
    }

    #[test]
    fn upright_projected_gravity() {
        let s = RobotState::default();
        assert_eq!(s.projected_gravity(), Vector3::new(0.0, 0.0, -1.0));
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(q in proptest::array::uniform15(-4.0f64..4.0)) {
            let spec = RobotSpec::canonical();
            let once = clamp_joint_targets(&q, &spec);
            prop_assert_eq!(clamp_joint_targets(&once, &spec), once);
            for i in 0..NUM_JOINTS {
                prop_assert!(once[i] >= spec.joints[i].lower && once[i] <= spec.joints[i].upper);
                if q[i] >= spec.joints[i].lower && q[i] <= spec.joints[i].upper {
                    prop_assert_eq!(once[i], q[i]);
                }
            }
        }

        #[test]
        fn euler_recomposes_quaternion(
            roll in -3.1f64..3.1,
            pitch in -(core::f64::consts::FRAC_PI_2 - 0.01)..(core::f64::consts::FRAC_PI_2 - 0.01),
            yaw in -3.1f64..3.1,
        ) {
            let s = RobotState {
                base_orientation: UnitQuaternion::from_euler_angles(roll, pitch, yaw),
                ..RobotState::default()
            };
            let [r, p, y] = s.base_euler();
            let back = UnitQuaternion::from_euler_angles(r, p, y);
            prop_assert!(back.angle_to(&s.base_orientation) < 1e-9);
            prop_assert!((back.quaternion().norm() - 1.0).abs() < 1e-12);
        }
    }
}
