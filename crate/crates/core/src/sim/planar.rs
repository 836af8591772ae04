//! Sagittal-plane spined quadruped.
//!
//! Generalized coordinates: front-body COM `x`, `z`, front-body pitch, spine
//! pitch, then thigh and calf for LF, RF, LH, RH. Angles are rotations about
//! +y, so positive body pitch is nose-down and positive thigh angle swings the
//! foot backward. Positive spine pitch arches the back (extension). The two
//! legs of a girdle share a hip point and overlap in projection.

use nalgebra::{SMatrix, SVector, UnitQuaternion, Vector2, Vector3};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{ground_contact_force, pd_torque, ContactParams, PdGains, GRAVITY};
use crate::error::Diverged;
use crate::model::{
    leg_joint, Foot, JointVector, LegJoint, RobotSpec, RobotState, NUM_FEET, NUM_JOINTS,
    SPINE_PITCH,
};
use crate::{Error, Result};

pub const DOF: usize = 12;
pub const BASE_X: usize = 0;
pub const BASE_Z: usize = 1;
pub const BASE_PITCH: usize = 2;
pub const SPINE: usize = 3;

type Mat = SMatrix<f64, DOF, DOF>;
type Vec12 = SVector<f64, DOF>;

pub const fn thigh_coord(foot: Foot) -> usize {
    4 + 2 * foot as usize
}

pub const fn calf_coord(foot: Foot) -> usize {
    5 + 2 * foot as usize
}

/// 15-joint index of each actuated planar coordinate.
fn joint_of_coord(i: usize) -> Option<usize> {
    match i {
        SPINE => Some(SPINE_PITCH),
        4..=11 => {
            let foot = Foot::ALL[(i - 4) / 2];
            let joint = if (i - 4).is_multiple_of(2) {
                LegJoint::Thigh
            } else {
                LegJoint::Calf
            };
            Some(leg_joint(foot, joint))
        }
        _ => None,
    }
}

/// `beta = a . q + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AngleExpr {
    a: [f64; DOF],
    offset: f64,
}

impl AngleExpr {
    fn of(terms: &[(usize, f64)], offset: f64) -> Self {
        let mut a = [0.0; DOF];
        for &(i, c) in terms {
            a[i] += c;
        }
        Self { a, offset }
    }

    fn plus(&self, i: usize, offset: f64) -> Self {
        let mut out = *self;
        out.a[i] += 1.0;
        out.offset += offset;
        out
    }

    fn eval(&self, v: &[f64; DOF]) -> f64 {
        self.a.iter().zip(v).map(|(a, x)| a * x).sum()
    }
}

/// Point = base position + sum of `c * e(beta)` with `e(b) = (cos b, -sin b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Chain {
    terms: [(f64, AngleExpr); 4],
    n: usize,
}

impl Chain {
    fn new(terms: &[(f64, AngleExpr)]) -> Self {
        let zero = (0.0, AngleExpr::of(&[], 0.0));
        let mut out = Self {
            terms: [zero; 4],
            n: terms.len(),
        };
        out.terms[..terms.len()].copy_from_slice(terms);
        out
    }

    fn extend(&self, c: f64, angle: AngleExpr) -> Self {
        let mut out = *self;
        out.terms[out.n] = (c, angle);
        out.n += 1;
        out
    }
}

/// Position, Jacobian (2 x DOF) and velocity-product acceleration of a point.
struct PointKin {
    pos: Vector2<f64>,
    jac: SMatrix<f64, 2, DOF>,
    bias: Vector2<f64>,
}

fn point_kin(chain: &Chain, q: &[f64; DOF], qd: &[f64; DOF]) -> PointKin {
    let mut pos = Vector2::new(q[BASE_X], q[BASE_Z]);
    let mut jac = SMatrix::<f64, 2, DOF>::zeros();
    jac[(0, BASE_X)] = 1.0;
    jac[(1, BASE_Z)] = 1.0;
    let mut bias = Vector2::zeros();
    for (c, angle) in &chain.terms[..chain.n] {
        let b = angle.eval(q) + angle.offset;
        let bd = angle.eval(qd);
        let (s, co) = b.sin_cos();
        pos += Vector2::new(c * co, -c * s);
        for j in 0..DOF {
            if angle.a[j] != 0.0 {
                jac[(0, j)] += -c * angle.a[j] * s;
                jac[(1, j)] += -c * angle.a[j] * co;
            }
        }
        bias += Vector2::new(-c * co, c * s) * (bd * bd);
    }
    PointKin { pos, jac, bias }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    mass: f64,
    inertia: f64,
    com: Chain,
    angle: AngleExpr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Limit {
    Free,
    Range(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarSimState {
    pub t: f64,
    pub q: [f64; DOF],
    pub qd: [f64; DOF],
    pub contacts: [bool; NUM_FEET],
    /// Last applied `(normal, tangential)` foot forces, N.
    pub contact_forces: [[f64; 2]; NUM_FEET],
    /// Ground stick point of each foot in contact, world x.
    pub anchors: [Option<f64>; NUM_FEET],
    /// Last applied joint torques in the 15-joint layout, N·m.
    pub torque: JointVector,
}

impl PlanarSimState {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.iter().chain(&self.qd).all(|v| v.is_finite())
    }

    pub fn spine_pitch(&self) -> f64 {
        self.q[SPINE]
    }

    /// Forward speed of the front body COM in the world frame.
    pub fn forward_velocity(&self) -> f64 {
        self.qd[BASE_X]
    }
}

pub enum Actuation<'a> {
    /// PD toward 15-joint position targets; joints absent from the plane are ignored.
    Pd(&'a JointVector),
    /// Direct torques in the 15-joint layout.
    Torque(&'a JointVector),
    Passive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarModel {
    links: [Link; 10],
    feet: [Chain; NUM_FEET],
    limits: [Limit; DOF],
    pub spec: RobotSpec,
    pub gains: PdGains,
    pub contact: ContactParams,
    /// Ground-contact detection on/off; off gives the passive free-flight model.
    pub ground: bool,
}

impl PlanarModel {
    pub fn new(spec: &RobotSpec, gains: PdGains, contact: ContactParams) -> Result<Self> {
        spec.validate()?;
        gains.validate()?;
        contact.validate()?;
        let g = &spec.geometry;
        let ms = &spec.mass_split;
        let leg = spec.leg_mass();
        let hip_mass = leg * ms.hip_link;
        let thigh_mass = leg * ms.thigh_link;
        let calf_mass = leg * ms.calf_link;
        let seg = g.hip_offset;
        let box_inertia = |m: f64| m * (seg * seg + g.body_height * g.body_height) / 12.0;
        let rod = |m: f64, l: f64| m * l * l / 12.0;

        // Front COM sits halfway between spine joint and front hips, and the
        // hips carry the lumped hip-link masses.
        let front_mass = spec.front_body_mass() + 2.0 * hip_mass;
        let rear_mass = spec.rear_body_mass() + 2.0 * hip_mass;
        let front_angle = AngleExpr::of(&[(BASE_PITCH, 1.0)], 0.0);
        let rear_angle = AngleExpr::of(&[(BASE_PITCH, 1.0), (SPINE, -1.0)], 0.0);
        let front_hip = Chain::new(&[(0.5 * seg, front_angle)]);
        let spine_joint = Chain::new(&[(-0.5 * seg, front_angle)]);
        let rear_com = spine_joint.extend(-0.5 * seg, rear_angle);
        let rear_hip = spine_joint.extend(-seg, rear_angle);

        let mut links = [Link {
            mass: front_mass,
            inertia: box_inertia(front_mass),
            com: Chain::new(&[]),
            angle: front_angle,
        }; 10];
        links[1] = Link {
            mass: rear_mass,
            inertia: box_inertia(rear_mass),
            com: rear_com,
            angle: rear_angle,
        };
        let down = core::f64::consts::FRAC_PI_2;
        let mut feet = [Chain::new(&[]); NUM_FEET];
        for foot in Foot::ALL {
            let (hip, body) = if foot.is_fore() {
                (front_hip, front_angle)
            } else {
                (rear_hip, rear_angle)
            };
            let thigh = body.plus(thigh_coord(foot), down);
            let calf = thigh.plus(calf_coord(foot), 0.0);
            let f = foot.index();
            links[2 + f] = Link {
                mass: thigh_mass,
                inertia: rod(thigh_mass, g.thigh_length),
                com: hip.extend(0.5 * g.thigh_length, thigh),
                angle: thigh,
            };
            let knee = hip.extend(g.thigh_length, thigh);
            links[6 + f] = Link {
                mass: calf_mass,
                inertia: rod(calf_mass, g.calf_length),
                com: knee.extend(0.5 * g.calf_length, calf),
                angle: calf,
            };
            feet[f] = knee.extend(g.calf_length, calf);
        }

        let mut limits = [Limit::Free; DOF];
        for (i, slot) in limits.iter_mut().enumerate() {
            if let Some(j) = joint_of_coord(i) {
                *slot = Limit::Range(spec.joints[j].lower, spec.joints[j].upper);
            }
        }
        Ok(Self {
            links,
            feet,
            limits,
            spec: spec.clone(),
            gains,
            contact,
            ground: true,
        })
    }

    pub fn canonical() -> Self {
        Self::new(
            &RobotSpec::canonical(),
            PdGains::default(),
            ContactParams::default(),
        )
        .expect("canonical spec is valid")
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn mass_matrix(&self, q: &[f64; DOF]) -> Mat {
        let zero = [0.0; DOF];
        let mut m = Mat::zeros();
        for link in &self.links {
            let k = point_kin(&link.com, q, &zero);
            m += k.jac.transpose() * k.jac * link.mass;
            let a = Vec12::from_column_slice(&link.angle.a);
            m += a * a.transpose() * link.inertia;
        }
        m
    }

    pub fn foot_position(&self, q: &[f64; DOF], foot: Foot) -> Vector2<f64> {
        point_kin(&self.feet[foot.index()], q, &[0.0; DOF]).pos
    }

    pub fn com(&self, q: &[f64; DOF]) -> Vector2<f64> {
        let zero = [0.0; DOF];
        let sum = self.links.iter().fold(Vector2::zeros(), |acc, l| {
            acc + point_kin(&l.com, q, &zero).pos * l.mass
        });
        sum / self.total_mass()
    }

    pub fn linear_momentum(&self, s: &PlanarSimState) -> Vector2<f64> {
        self.links.iter().fold(Vector2::zeros(), |acc, l| {
            let k = point_kin(&l.com, &s.q, &s.qd);
            acc + k.jac * Vec12::from_column_slice(&s.qd) * l.mass
        })
    }

    pub fn kinetic_energy(&self, s: &PlanarSimState) -> f64 {
        let qd = Vec12::from_column_slice(&s.qd);
        0.5 * (qd.transpose() * self.mass_matrix(&s.q) * qd)[0]
    }

    pub fn potential_energy(&self, s: &PlanarSimState) -> f64 {
        self.com(&s.q).y * self.total_mass() * GRAVITY
    }

    pub fn total_energy(&self, s: &PlanarSimState) -> f64 {
        self.kinetic_energy(s) + self.potential_energy(s)
    }

    /// Default joint pose, level bodies, feet pressed into the ground by the
    /// static penetration that carries the robot's weight.
    pub fn standing_state(&self) -> PlanarSimState {
        let mut q = [0.0; DOF];
        let pose = self.spec.default_pose();
        for (i, slot) in q.iter_mut().enumerate() {
            if let Some(j) = joint_of_coord(i) {
                *slot = pose[j];
            }
        }
        let lowest = Foot::ALL
            .iter()
            .map(|&f| self.foot_position(&q, f).y)
            .fold(f64::INFINITY, f64::min);
        let sink = self.total_mass() * GRAVITY / (NUM_FEET as f64 * self.contact.k_n);
        q[BASE_Z] = -lowest - sink;
        PlanarSimState {
            t: 0.0,
            q,
            qd: [0.0; DOF],
            contacts: [true; NUM_FEET],
            contact_forces: [[0.0; 2]; NUM_FEET],
            anchors: [None; NUM_FEET],
            torque: [0.0; NUM_JOINTS],
        }
    }

    /// Static-pose search: relax `standing_state` under PD toward `targets`
    /// with artificial velocity damping until the robot is at rest, then
    /// return that equilibrium with zero velocity and time reset.
    pub fn standing_equilibrium(&self, targets: &JointVector) -> Result<PlanarSimState> {
        let dt = self.spec.physics_dt();
        let mut s = self.standing_state();
        let max_steps = (5.0 / dt) as usize;
        for _ in 0..max_steps {
            s = self
                .substep(&s, &Actuation::Pd(targets), dt)
                .map_err(Error::from)?;
            for v in &mut s.qd {
                *v *= 0.98;
            }
            if s.qd.iter().all(|v| v.abs() < 1e-9) {
                break;
            }
        }
        s.qd = [0.0; DOF];
        s.t = 0.0;
        Ok(s)
    }

    fn joint_torques(&self, s: &PlanarSimState, act: &Actuation) -> JointVector {
        match act {
            Actuation::Passive => [0.0; NUM_JOINTS],
            Actuation::Torque(t) => {
                let lim = self.spec.torque_limits();
                core::array::from_fn(|j| t[j].clamp(-lim[j], lim[j]))
            }
            Actuation::Pd(targets) => {
                let mut q = [0.0; NUM_JOINTS];
                let mut qd = [0.0; NUM_JOINTS];
                let mut kp = [0.0; NUM_JOINTS];
                let mut kd = [0.0; NUM_JOINTS];
                for i in SPINE..DOF {
                    let j = joint_of_coord(i).expect("actuated coordinate");
                    q[j] = s.q[i];
                    qd[j] = s.qd[i];
                    let (p, d) = if i == SPINE {
                        (self.gains.spine_kp, self.gains.spine_kd)
                    } else {
                        (self.gains.leg_kp, self.gains.leg_kd)
                    };
                    kp[j] = p;
                    kd[j] = d;
                }
                let mut tau = pd_torque(targets, &q, &qd, &kp, &kd, &self.spec.torque_limits());
                for (j, t) in tau.iter_mut().enumerate() {
                    if kp[j] == 0.0 {
                        *t = 0.0;
                    }
                }
                tau
            }
        }
    }

    /// One semi-implicit Euler substep.
    pub fn substep(
        &self,
        s: &PlanarSimState,
        act: &Actuation,
        dt: f64,
    ) -> core::result::Result<PlanarSimState, Diverged<PlanarSimState>> {
        let diverged = || Diverged {
            time: s.t,
            last_valid: s.clone(),
        };
        if !(dt > 0.0) || !s.is_finite() {
            return Err(diverged());
        }
        let tau = self.joint_torques(s, act);
        let mut force = Vec12::zeros();
        for i in SPINE..DOF {
            force[i] = tau[joint_of_coord(i).expect("actuated coordinate")];
        }
        let mut m = Mat::zeros();
        let qd_vec = Vec12::from_column_slice(&s.qd);
        for link in &self.links {
            let k = point_kin(&link.com, &s.q, &s.qd);
            let jt = k.jac.transpose();
            m += jt * k.jac * link.mass;
            let a = Vec12::from_column_slice(&link.angle.a);
            m += a * a.transpose() * link.inertia;
            force += jt * ((Vector2::new(0.0, -GRAVITY) - k.bias) * link.mass);
        }
        let chol = m.cholesky().ok_or_else(diverged)?;
        let mut contacts = [false; NUM_FEET];
        let mut contact_forces = [[0.0; 2]; NUM_FEET];
        let mut anchors = [None; NUM_FEET];
        if self.ground {
            let c = &self.contact;
            // Damping is applied at the predicted end-of-step contact velocity
            // (linearly implicit), which keeps light feet stable at 1 kHz.
            let mut jac = SMatrix::<f64, 8, DOF>::zeros();
            let mut damping = SVector::<f64, 8>::zeros();
            let mut spring = SVector::<f64, 8>::zeros();
            let mut pen = [0.0; NUM_FEET];
            let mut stretch = [0.0; NUM_FEET];
            let mut pos_x = [0.0; NUM_FEET];
            for foot in Foot::ALL {
                let f = foot.index();
                let k = point_kin(&self.feet[f], &s.q, &s.qd);
                jac.fixed_view_mut::<2, DOF>(2 * f, 0).copy_from(&k.jac);
                pen[f] = -k.pos.y;
                pos_x[f] = k.pos.x;
                if pen[f] > 0.0 {
                    stretch[f] = k.pos.x - s.anchors[f].unwrap_or(k.pos.x);
                    damping[2 * f] = c.d_t;
                    damping[2 * f + 1] = c.d_n;
                    spring[2 * f] = -c.k_t * stretch[f];
                    spring[2 * f + 1] = c.k_n * pen[f];
                }
            }
            let minv_jt = chol.solve(&jac.transpose());
            let w = jac * minv_jt;
            let v_free = jac * (qd_vec + chol.solve(&force) * dt);
            let lhs = SMatrix::<f64, 8, 8>::identity()
                + w * SMatrix::<f64, 8, 8>::from_diagonal(&damping) * dt;
            let v_pred = lhs
                .lu()
                .solve(&(v_free + w * spring * dt))
                .ok_or_else(diverged)?;
            for foot in Foot::ALL {
                let f = foot.index();
                if pen[f] <= 0.0 {
                    continue;
                }
                // the stick spring enters as an equivalent slip velocity
                let slip = v_pred[2 * f] + c.k_t / c.d_t * stretch[f];
                let (fn_, ft) = ground_contact_force(pen[f], v_pred[2 * f + 1], slip, c);
                if fn_ > 0.0 {
                    contacts[f] = true;
                    contact_forces[f] = [fn_, ft];
                    force += jac.fixed_view::<2, DOF>(2 * f, 0).transpose() * Vector2::new(ft, fn_);
                    let cap = c.mu * fn_;
                    let anchor = pos_x[f] - stretch[f];
                    anchors[f] = Some(if c.k_t * stretch[f].abs() > cap {
                        pos_x[f] - stretch[f].signum() * cap / c.k_t
                    } else {
                        anchor
                    });
                }
            }
        }
        let qdd = chol.solve(&force);

        let mut next = PlanarSimState {
            t: s.t + dt,
            q: s.q,
            qd: s.qd,
            contacts,
            contact_forces,
            anchors,
            torque: tau,
        };
        for i in 0..DOF {
            next.qd[i] += dt * qdd[i];
            next.q[i] += dt * next.qd[i];
            if let Limit::Range(lo, hi) = self.limits[i] {
                if next.q[i] < lo {
                    next.q[i] = lo;
                    next.qd[i] = next.qd[i].max(0.0);
                } else if next.q[i] > hi {
                    next.q[i] = hi;
                    next.qd[i] = next.qd[i].min(0.0);
                }
            }
        }
        if next.is_finite() {
            Ok(next)
        } else {
            Err(diverged())
        }
    }

    /// One control period: `spec.sim_substeps` substeps of `spec.physics_dt()`.
    pub fn control_step(
        &self,
        s: &PlanarSimState,
        act: &Actuation,
    ) -> core::result::Result<PlanarSimState, Diverged<PlanarSimState>> {
        let dt = self.spec.physics_dt();
        let mut cur = self.substep(s, act, dt)?;
        for _ in 1..self.spec.sim_substeps {
            cur = self.substep(&cur, act, dt)?;
        }
        Ok(cur)
    }

    /// Planar state lifted into the 15-joint robot state used by rewards and
    /// observations. Hip abduction, spine yaw and roll stay at zero.
    pub fn robot_state(&self, s: &PlanarSimState) -> RobotState {
        let mut q = [0.0; NUM_JOINTS];
        let mut qd = [0.0; NUM_JOINTS];
        for i in SPINE..DOF {
            let j = joint_of_coord(i).expect("actuated coordinate");
            q[j] = s.q[i];
            qd[j] = s.qd[i];
        }
        let orientation = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), s.q[BASE_PITCH]);
        let v_world = Vector3::new(s.qd[BASE_X], 0.0, s.qd[BASE_Z]);
        RobotState {
            t: s.t,
            q,
            qd,
            base_position: Vector3::new(s.q[BASE_X], 0.0, s.q[BASE_Z]),
            base_orientation: orientation,
            base_linear_velocity: orientation.inverse_transform_vector(&v_world),
            base_angular_velocity: Vector3::new(0.0, s.qd[BASE_PITCH], 0.0),
            foot_contact: s.contacts,
        }
    }
}

/// One physics substep under PD toward `joint_targets`.
pub fn step_planar(
    state: &PlanarSimState,
    joint_targets: &JointVector,
    model: &PlanarModel,
    dt: f64,
) -> Result<PlanarSimState> {
    if !(dt > 0.0) {
        return Err(Error::arg("dt must be positive"));
    }
    model
        .substep(state, &Actuation::Pd(joint_targets), dt)
        .map_err(Error::from)
}
