//! Desk-scale dynamics: joint PD control, penalty ground contact, a sagittal
//! locomotion model and a free-floating two-body model for aerial turns.

pub mod freefall;
pub mod planar;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use freefall::{total_angular_momentum, FreeFall3DState, FreeFallModel};
pub use planar::{Actuation, PlanarModel, PlanarSimState};

pub const GRAVITY: f64 = 9.81;

/// `clamp(kp (q* - q) - kd qd, ±tau_max)` per joint.
pub fn pd_torque<const N: usize>(
    q_target: &[f64; N],
    q: &[f64; N],
    qd: &[f64; N],
    kp: &[f64; N],
    kd: &[f64; N],
    tau_max: &[f64; N],
) -> [f64; N] {
    core::array::from_fn(|i| {
        let tau = kp[i] * (q_target[i] - q[i]) - kd[i] * qd[i];
        tau.clamp(-tau_max[i], tau_max[i])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdGains {
    pub leg_kp: f64,
    pub leg_kd: f64,
    pub spine_kp: f64,
    pub spine_kd: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self {
            leg_kp: 120.0,
            leg_kd: 3.0,
            spine_kp: 80.0,
            spine_kd: 2.0,
        }
    }
}

impl PdGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pd.leg_kp", self.leg_kp),
            ("pd.leg_kd", self.leg_kd),
            ("pd.spine_kp", self.spine_kp),
            ("pd.spine_kd", self.spine_kd),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(
                    name,
                    "gains must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Normal stiffness, N/m.
    pub k_n: f64,
    /// Normal damping, N·s/m.
    pub d_n: f64,
    pub mu: f64,
    /// Viscous slip coefficient before the Coulomb cap, N·s/m.
    pub d_t: f64,
    /// Stiffness of the tangential stick spring used by the simulators, N/m.
    /// Zero leaves purely viscous friction.
    pub k_t: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            k_n: 1e5,
            d_n: 300.0,
            mu: 0.8,
            d_t: 300.0,
            k_t: 2e4,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_n > 0.0) {
            return Err(Error::validation("contact.k_n", "must be positive"));
        }
        if !(self.d_n > 0.0) {
            return Err(Error::validation("contact.d_n", "must be positive"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.5) {
            return Err(Error::validation("contact.mu", "must lie in (0, 1.5]"));
        }
        if !(self.d_t > 0.0) {
            return Err(Error::validation("contact.d_t", "must be positive"));
        }
        if !(self.k_t >= 0.0) {
            return Err(Error::validation("contact.k_t", "must be non-negative"));
        }
        Ok(())
    }
}

/// Penalty contact. `normal_velocity` is positive when the point moves away
/// from the ground. Returns `(normal, tangential)`.
pub fn ground_contact_force(
    penetration: f64,
    normal_velocity: f64,
    tangential_velocity: f64,
    p: &ContactParams,
) -> (f64, f64) {
    if penetration <= 0.0 {
        return (0.0, 0.0);
    }
    let normal = (p.k_n * penetration - p.d_n * normal_velocity).max(0.0);
    let cap = p.mu * normal;
    let tangential = (-p.d_t * tangential_velocity).clamp(-cap, cap);
    // NaN inputs pass through for the integrator's divergence check
    debug_assert!(tangential.is_nan() || (normal >= 0.0 && tangential.abs() <= cap));
    (normal, tangential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RobotSpec;
    use proptest::prelude::*;

    #[test]
    fn pd_examples() {
        let spec = RobotSpec::canonical();
        let tau_max = [spec.joints[1].torque_limit];
        assert_eq!(
            pd_torque(&[0.3], &[0.3], &[0.0], &[60.0], &[1.5], &tau_max),
            [0.0]
        );
        let t = pd_torque(&[0.1], &[0.0], &[0.0], &[50.0], &[0.0], &tau_max);
        assert!((t[0] - 5.0).abs() < 1e-12);
        assert_eq!(
            pd_torque(&[10.0], &[0.0], &[0.0], &[50.0], &[0.0], &tau_max),
            [33.5]
        );
        assert_eq!(
            pd_torque(&[-10.0], &[0.0], &[0.0], &[50.0], &[0.0], &tau_max),
            [-33.5]
        );
    }

    #[test]
    fn contact_examples() {
        let p = ContactParams::default();
        assert_eq!(ground_contact_force(0.0, -1.0, 1.0, &p), (0.0, 0.0));
        assert_eq!(ground_contact_force(-0.01, -1.0, 1.0, &p), (0.0, 0.0));
        let (n, t) = ground_contact_force(0.001, 0.0, 0.0, &p);
        assert!((n - 100.0).abs() < 1e-9);
        assert_eq!(t, 0.0);
        let (n, t) = ground_contact_force(0.001, 0.0, 50.0, &p);
        assert_eq!(t, -p.mu * n);
    }

    #[test]
    fn contact_validation() {
        ContactParams::default().validate().unwrap();
        let bad = ContactParams {
            mu: 2.0,
            ..ContactParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn contact_is_unilateral_and_capped(
            pen in -0.01f64..0.02,
            vn in -5.0f64..5.0,
            vt in -10.0f64..10.0,
        ) {
            let p = ContactParams::default();
            let (n, t) = ground_contact_force(pen, vn, vt, &p);
            prop_assert!(n >= 0.0);
            prop_assert!(t.abs() <= p.mu * n);
        }
    }
}
