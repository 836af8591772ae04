//! Free-floating two-body model joined by the three-axis spine.
//!
//! The front body carries the floating base. The spine is a serial
//! yaw-pitch-roll joint: `R_rear = R_front * Rz(yaw) * Ry(-pitch) * Rx(roll)`,
//! so positive pitch arches the back as in the planar model. Legs are lumped
//! into the two bodies. Integration is classical RK4 with the base quaternion
//! renormalized after every step.

use core::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, SMatrix, SVector, Unit, UnitQuaternion, Vector3};
use num_traits::Euclid;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{pd_torque, PdGains, GRAVITY};
use crate::error::Diverged;
use crate::model::{RobotSpec, SPINE_PITCH, SPINE_ROLL, SPINE_YAW};
use crate::{Error, Result};

pub const DOF: usize = 9;
type Mat9 = SMatrix<f64, DOF, DOF>;
type Vec9 = SVector<f64, DOF>;
type Jac = SMatrix<f64, 3, DOF>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeFall3DState {
    pub t: f64,
    /// Front-body COM, world frame.
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    /// Front-body COM velocity, world frame.
    pub velocity: Vector3<f64>,
    /// Front-body angular velocity, world frame.
    pub angular_velocity: Vector3<f64>,
    /// Spine yaw, pitch, roll.
    pub q: [f64; 3],
    pub qd: [f64; 3],
}

impl FreeFall3DState {
    pub fn at_rest(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            t: 0.0,
            position,
            orientation,
            velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            q: [0.0; 3],
            qd: [0.0; 3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self.q.iter().chain(&self.qd).all(|v| v.is_finite())
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    v.cross_matrix()
}

/// Rotation of the rear body relative to the front body.
pub fn spine_rotation(q: &[f64; 3]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q[0])
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -q[1])
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), q[2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeFallModel {
    pub front_mass: f64,
    pub rear_mass: f64,
    /// Body-frame inertia about each COM.
    pub front_inertia: Matrix3<f64>,
    pub rear_inertia: Matrix3<f64>,
    /// Spine joint relative to the front COM, front frame.
    pub front_to_joint: Vector3<f64>,
    /// Rear COM relative to the spine joint, rear frame.
    pub joint_to_rear: Vector3<f64>,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub torque_limit: [f64; 3],
    pub kp: [f64; 3],
    pub kd: [f64; 3],
    pub gravity: f64,
}

const SPINE_JOINTS: [usize; 3] = [SPINE_YAW, SPINE_PITCH, SPINE_ROLL];

struct Kinematics {
    rf: Matrix3<f64>,
    rr: Matrix3<f64>,
    r1: Vector3<f64>,
    r2: Vector3<f64>,
    axes: Matrix3<f64>,
    omega_r: Vector3<f64>,
    rear_pos: Vector3<f64>,
    rear_vel: Vector3<f64>,
}

impl FreeFallModel {
    pub fn new(spec: &RobotSpec, gains: &PdGains) -> Result<Self> {
        spec.validate()?;
        gains.validate()?;
        let legs = 2.0 * spec.leg_mass();
        let front_mass = spec.front_body_mass() + legs;
        let rear_mass = spec.rear_body_mass() + legs;
        let half = 0.5 * spec.body_length;
        let width = spec.body_width;
        // lumped legs thicken the trunk to roughly twice the body height
        let height = 2.0 * spec.geometry.body_height;
        let box_inertia = |m: f64| {
            Matrix3::from_diagonal(&Vector3::new(
                m * (width * width + height * height) / 12.0,
                m * (half * half + height * height) / 12.0,
                m * (half * half + width * width) / 12.0,
            ))
        };
        let lower = SPINE_JOINTS.map(|j| spec.joints[j].lower);
        let upper = SPINE_JOINTS.map(|j| spec.joints[j].upper);
        Ok(Self {
            front_mass,
            rear_mass,
            front_inertia: box_inertia(front_mass),
            rear_inertia: box_inertia(rear_mass),
            front_to_joint: Vector3::new(-0.5 * half, 0.0, 0.0),
            joint_to_rear: Vector3::new(-0.5 * half, 0.0, 0.0),
            lower,
            upper,
            torque_limit: SPINE_JOINTS.map(|j| spec.joints[j].torque_limit),
            kp: [gains.spine_kp; 3],
            kd: [gains.spine_kd; 3],
            gravity: GRAVITY,
        })
    }

    pub fn canonical() -> Self {
        Self::new(&RobotSpec::canonical(), &PdGains::default()).expect("canonical spec is valid")
    }

    pub fn total_mass(&self) -> f64 {
        self.front_mass + self.rear_mass
    }

    fn kinematics(&self, s: &FreeFall3DState) -> Kinematics {
        let rf = *s.orientation.to_rotation_matrix().matrix();
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), s.q[0]);
        let ry = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -s.q[1]);
        let rr = rf * spine_rotation(&s.q).to_rotation_matrix().matrix();
        let a1 = rf * Vector3::z();
        let a2 = rf * (rz * -Vector3::y());
        let a3 = rf * (rz * ry * Vector3::x());
        let axes = Matrix3::from_columns(&[a1, a2, a3]);
        let qd = Vector3::from(s.qd);
        let omega_r = s.angular_velocity + axes * qd;
        let r1 = rf * self.front_to_joint;
        let r2 = rr * self.joint_to_rear;
        let rear_pos = s.position + r1 + r2;
        let rear_vel = s.velocity + s.angular_velocity.cross(&r1) + omega_r.cross(&r2);
        Kinematics {
            rf,
            rr,
            r1,
            r2,
            axes,
            omega_r,
            rear_pos,
            rear_vel,
        }
    }

    /// `|L|` of the straight robot spinning about its long axis once per
    /// `period`; the yardstick for momentum drift.
    pub fn spin_scale(&self, period: f64) -> f64 {
        (self.front_inertia[(0, 0)] + self.rear_inertia[(0, 0)]) * TAU / period
    }

    pub fn rear_orientation(&self, s: &FreeFall3DState) -> UnitQuaternion<f64> {
        s.orientation * spine_rotation(&s.q)
    }

    pub fn rear_position(&self, s: &FreeFall3DState) -> Vector3<f64> {
        self.kinematics(s).rear_pos
    }

    pub fn com(&self, s: &FreeFall3DState) -> Vector3<f64> {
        let k = self.kinematics(s);
        (s.position * self.front_mass + k.rear_pos * self.rear_mass) / self.total_mass()
    }

    pub fn com_velocity(&self, s: &FreeFall3DState) -> Vector3<f64> {
        let k = self.kinematics(s);
        (s.velocity * self.front_mass + k.rear_vel * self.rear_mass) / self.total_mass()
    }

    pub fn spine_torque(&self, s: &FreeFall3DState, targets: Option<&[f64; 3]>) -> [f64; 3] {
        match targets {
            Some(t) => pd_torque(t, &s.q, &s.qd, &self.kp, &self.kd, &self.torque_limit),
            None => [0.0; 3],
        }
    }

    /// Generalized accelerations `[a_front, alpha_front, qdd]`.
    fn accelerations(&self, s: &FreeFall3DState, tau: &[f64; 3]) -> Option<Vec9> {
        let k = self.kinematics(s);
        let w_f = s.angular_velocity;
        let qd = s.qd;

        let mut jv_f = Jac::zeros();
        jv_f.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&Matrix3::identity());
        let mut jw_f = Jac::zeros();
        jw_f.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&Matrix3::identity());
        let mut jw_r = jw_f;
        jw_r.fixed_view_mut::<3, 3>(0, 6).copy_from(&k.axes);
        let mut jv_r = jv_f;
        jv_r.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(-skew(&k.r1) - skew(&k.r2)));
        jv_r.fixed_view_mut::<3, 3>(0, 6)
            .copy_from(&(-skew(&k.r2) * k.axes));

        let a1 = k.axes.column(0).into_owned();
        let a2 = k.axes.column(1).into_owned();
        let a3 = k.axes.column(2).into_owned();
        let b_omega = w_f.cross(&a1) * qd[0]
            + (w_f + a1 * qd[0]).cross(&a2) * qd[1]
            + (w_f + a1 * qd[0] + a2 * qd[1]).cross(&a3) * qd[2];
        let b_rear = w_f.cross(&w_f.cross(&k.r1))
            + b_omega.cross(&k.r2)
            + k.omega_r.cross(&k.omega_r.cross(&k.r2));

        let i_f = k.rf * self.front_inertia * k.rf.transpose();
        let i_r = k.rr * self.rear_inertia * k.rr.transpose();
        let g = Vector3::new(0.0, 0.0, -self.gravity);

        let m: Mat9 = jv_f.transpose() * jv_f * self.front_mass
            + jw_f.transpose() * i_f * jw_f
            + jv_r.transpose() * jv_r * self.rear_mass
            + jw_r.transpose() * i_r * jw_r;
        let mut rhs = Vec9::zeros();
        rhs[6] = tau[0];
        rhs[7] = tau[1];
        rhs[8] = tau[2];
        rhs -= jv_f.transpose() * (-g * self.front_mass);
        rhs -= jw_f.transpose() * w_f.cross(&(i_f * w_f));
        rhs -= jv_r.transpose() * ((b_rear - g) * self.rear_mass);
        rhs -= jw_r.transpose() * (i_r * b_omega + k.omega_r.cross(&(i_r * k.omega_r)));
        m.cholesky().map(|c| c.solve(&rhs))
    }

    fn derivative(&self, s: &FreeFall3DState, targets: Option<&[f64; 3]>) -> Option<Deriv> {
        let tau = self.spine_torque(s, targets);
        let acc = self.accelerations(s, &tau)?;
        let w = s.angular_velocity;
        let quat_dot = (nalgebra::Quaternion::from_imag(w) * s.orientation.into_inner()) * 0.5;
        Some(Deriv {
            pos: s.velocity,
            quat: quat_dot.coords,
            vel: acc.fixed_rows::<3>(0).into_owned(),
            omega: acc.fixed_rows::<3>(3).into_owned(),
            q: s.qd,
            qd: [acc[6], acc[7], acc[8]],
        })
    }

    fn advance(&self, s: &FreeFall3DState, d: &Deriv, h: f64) -> FreeFall3DState {
        let coords = s.orientation.coords + d.quat * h;
        FreeFall3DState {
            t: s.t + h,
            position: s.position + d.pos * h,
            orientation: UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(coords)),
            velocity: s.velocity + d.vel * h,
            angular_velocity: s.angular_velocity + d.omega * h,
            q: core::array::from_fn(|i| s.q[i] + d.q[i] * h),
            qd: core::array::from_fn(|i| s.qd[i] + d.qd[i] * h),
        }
    }

    /// One RK4 step with the spine PD toward `targets` (`None`: free joints).
    pub fn step(
        &self,
        s: &FreeFall3DState,
        targets: Option<&[f64; 3]>,
        dt: f64,
    ) -> core::result::Result<FreeFall3DState, Diverged<FreeFall3DState>> {
        let diverged = || Diverged {
            time: s.t,
            last_valid: s.clone(),
        };
        if !(dt > 0.0) || !s.is_finite() {
            return Err(diverged());
        }
        let k1 = self.derivative(s, targets).ok_or_else(diverged)?;
        let k2 = self
            .derivative(&self.advance(s, &k1, 0.5 * dt), targets)
            .ok_or_else(diverged)?;
        let k3 = self
            .derivative(&self.advance(s, &k2, 0.5 * dt), targets)
            .ok_or_else(diverged)?;
        let k4 = self
            .derivative(&self.advance(s, &k3, dt), targets)
            .ok_or_else(diverged)?;
        let sum = Deriv::combine(&k1, &k2, &k3, &k4);
        let mut next = self.advance(s, &sum, dt);
        next.t = s.t + dt;
        for i in 0..3 {
            if next.q[i] < self.lower[i] {
                next.q[i] = self.lower[i];
                next.qd[i] = next.qd[i].max(0.0);
            } else if next.q[i] > self.upper[i] {
                next.q[i] = self.upper[i];
                next.qd[i] = next.qd[i].min(0.0);
            }
        }
        if next.is_finite() {
            Ok(next)
        } else {
            Err(diverged())
        }
    }
}

struct Deriv {
    pos: Vector3<f64>,
    quat: nalgebra::Vector4<f64>,
    vel: Vector3<f64>,
    omega: Vector3<f64>,
    q: [f64; 3],
    qd: [f64; 3],
}

impl Deriv {
    fn combine(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let w = |x: f64, y: f64, z: f64, u: f64| (x + 2.0 * y + 2.0 * z + u) / 6.0;
        Self {
            pos: (a.pos + b.pos * 2.0 + c.pos * 2.0 + d.pos) / 6.0,
            quat: (a.quat + b.quat * 2.0 + c.quat * 2.0 + d.quat) / 6.0,
            vel: (a.vel + b.vel * 2.0 + c.vel * 2.0 + d.vel) / 6.0,
            omega: (a.omega + b.omega * 2.0 + c.omega * 2.0 + d.omega) / 6.0,
            q: core::array::from_fn(|i| w(a.q[i], b.q[i], c.q[i], d.q[i])),
            qd: core::array::from_fn(|i| w(a.qd[i], b.qd[i], c.qd[i], d.qd[i])),
        }
    }
}

/// One integration step under spine PD toward `spine_targets`.
pub fn step_freefall3d(
    state: &FreeFall3DState,
    spine_targets: &[f64; 3],
    model: &FreeFallModel,
    dt: f64,
) -> Result<FreeFall3DState> {
    if !(dt > 0.0) {
        return Err(Error::arg("dt must be positive"));
    }
    model
        .step(state, Some(spine_targets), dt)
        .map_err(Error::from)
}

/// Angular momentum of both bodies about the system COM, world frame.
pub fn total_angular_momentum(model: &FreeFallModel, s: &FreeFall3DState) -> Vector3<f64> {
    let k = model.kinematics(s);
    let com = (s.position * model.front_mass + k.rear_pos * model.rear_mass) / model.total_mass();
    let i_f = k.rf * model.front_inertia * k.rf.transpose();
    let i_r = k.rr * model.rear_inertia * k.rr.transpose();
    (s.position - com).cross(&(s.velocity * model.front_mass))
        + (k.rear_pos - com).cross(&(k.rear_vel * model.rear_mass))
        + i_f * s.angular_velocity
        + i_r * k.omega_r
}

/// Closed spine loop for zero-momentum roll. The spine bends to
/// `bend_amplitude`, sweeps the bend direction once around the yaw/pitch
/// plane, then straightens. Every segment starts and ends at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfRightingTrajectory {
    pub period: f64,
    pub bend_amplitude: f64,
    /// Fraction of the period spent bending (and again straightening).
    pub bend_fraction: f64,
    /// Sweep the bend the other way round (mirror image: yaw negated).
    pub mirrored: bool,
}

impl Default for SelfRightingTrajectory {
    fn default() -> Self {
        Self {
            period: 1.5,
            bend_amplitude: 0.75,
            bend_fraction: 0.2,
            mirrored: false,
        }
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

impl SelfRightingTrajectory {
    pub fn mirror(&self) -> Self {
        Self {
            mirrored: !self.mirrored,
            ..*self
        }
    }

    /// Spine `[yaw, pitch, roll]` targets `t` seconds after the loop starts;
    /// straight outside the loop.
    pub fn targets(&self, t: f64) -> [f64; 3] {
        let tau = (t / self.period).clamp(0.0, 1.0);
        let f = self.bend_fraction;
        let bend = self.bend_amplitude * smoothstep(tau / f).min(smoothstep((1.0 - tau) / f));
        let psi = TAU * smoothstep((tau - f) / (1.0 - 2.0 * f));
        let sign = if self.mirrored { -1.0 } else { 1.0 };
        [sign * bend * psi.sin(), bend * psi.cos(), 0.0]
    }
}

/// Outcome of one self-righting loop from rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReorientationRun {
    /// Front-body roll change, rad.
    pub delta_roll: f64,
    pub final_state: FreeFall3DState,
    /// Largest `|L|` seen along the run, kg·m²/s.
    pub max_momentum: f64,
}

/// Roll about the body's long axis, measured as the angle that takes the
/// initial body-fixed lateral axis to the final one around the final x axis.
pub fn roll_change(from: &UnitQuaternion<f64>, to: &UnitQuaternion<f64>) -> f64 {
    let rel = from.inverse() * to;
    let (roll, _, _) = rel.euler_angles();
    roll
}

/// Run `traj` once (plus `settle` seconds holding the straight pose) from
/// rest at `initial`. `targets: None` keeps the spine locked at zero.
pub fn run_reorientation(
    model: &FreeFallModel,
    traj: Option<&SelfRightingTrajectory>,
    initial: &FreeFall3DState,
    dt: f64,
    settle: f64,
) -> Result<ReorientationRun> {
    if !(dt > 0.0) {
        return Err(Error::arg("dt must be positive"));
    }
    let duration = traj.map_or(0.0, |t| t.period) + settle;
    let steps = (duration / dt).round() as usize;
    let mut s = initial.clone();
    let mut max_momentum = total_angular_momentum(model, &s).norm();
    for k in 0..steps {
        let t = k as f64 * dt;
        let targets = traj.map_or([0.0; 3], |tr| tr.targets(t));
        s = model.step(&s, Some(&targets), dt).map_err(Error::from)?;
        max_momentum = max_momentum.max(total_angular_momentum(model, &s).norm());
    }
    Ok(ReorientationRun {
        delta_roll: roll_change(&initial.orientation, &s.orientation),
        final_state: s,
        max_momentum,
    })
}

/// Rotation about the world x axis, convenient for initial attitudes.
pub fn rolled(angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector3::x()), angle)
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = Euclid::rem_euclid(&(a + PI), &TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}
