//! Small actor-critic trainer: tanh MLPs with hand-written gradients, a
//! diagonal Gaussian policy, GAE and the clipped-surrogate update, plus the
//! toy and planar environments it is exercised on.

pub mod env;
pub mod nn;
pub mod ppo;
pub mod train;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{Command, JointVector, RobotState, NUM_JOINTS};
use crate::{Error, Result};

pub use env::{Environment, PlanarEnv, PlanarEnvConfig, StepOutcome, Toy1dConfig, Toy1dEnv};
pub use nn::{Activations, Mlp};
pub use ppo::{
    gae_advantages, ppo_loss, ppo_update, Adam, LossTerms, PolicyGrad, PpoConfig, RolloutBatch,
};
pub use train::{train, IterationLog, Sequential, TrainConfig, WorkerPool};

pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 1.0;

/// Length of the observation built by [`build_observation`].
pub const OBSERVATION_DIM: usize = 3 + 3 + 3 + 3 + 3 * NUM_JOINTS;

/// Actor and critic weights plus the state-independent log standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// observation -> action means
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    /// observation -> scalar value
    pub critic: Mlp,
    /// Multiplies raw actions before they reach the environment (rad for the
    /// joint-target environments).
    pub action_scale: f64,
}

impl PolicyParams {
    /// Randomly initialized actor and critic sharing the hidden widths. The
    /// actor's output layer starts small so initial means sit near zero.
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        action_scale: f64,
        init_log_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let actor = Mlp::random(&layer_sizes(obs_dim, hidden, action_dim), 0.01, rng)?;
        let critic = Mlp::random(&layer_sizes(obs_dim, hidden, 1), 1.0, rng)?;
        let p = PolicyParams {
            actor,
            log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); action_dim],
            critic,
            action_scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        action_scale: f64,
    ) -> Result<Self> {
        let p = PolicyParams {
            actor: Mlp::zeros(&layer_sizes(obs_dim, hidden, action_dim))?,
            log_std: vec![0.0; action_dim],
            critic: Mlp::zeros(&layer_sizes(obs_dim, hidden, 1))?,
            action_scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.actor.num_params() + self.log_std.len() + self.critic.num_params()
    }

    pub fn validate(&self) -> Result<()> {
        self.actor.validate()?;
        self.critic.validate()?;
        if self.critic.input_dim() != self.actor.input_dim() || self.critic.output_dim() != 1 {
            return Err(Error::validation(
                "policy.critic",
                "must map the actor's input to one value",
            ));
        }
        if self.log_std.len() != self.actor.output_dim() {
            return Err(Error::validation(
                "policy.log_std",
                "length must equal the action dimension",
            ));
        }
        if self
            .log_std
            .iter()
            .any(|s| !(LOG_STD_MIN..=LOG_STD_MAX).contains(s))
        {
            return Err(Error::validation(
                "policy.log_std",
                "entries must lie in [-4, 1]",
            ));
        }
        if !(self.action_scale > 0.0) || !self.action_scale.is_finite() {
            return Err(Error::validation("policy.action_scale", "must be positive"));
        }
        Ok(())
    }

    /// Projects `log_std` back into its allowed range.
    pub fn clamp_log_std(&mut self) {
        for s in &mut self.log_std {
            *s = s.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    /// Draws `mean + std * n` with `n` standard normal.
    pub fn sample_action<R: Rng + ?Sized>(&self, out: &PolicyOutput, rng: &mut R) -> Vec<f64> {
        out.mean
            .iter()
            .zip(&out.std)
            .map(|(m, s)| {
                let n: f64 = rng.sample(StandardNormal);
                m + s * n
            })
            .collect()
    }
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub value: f64,
}

pub fn policy_forward(obs: &[f64], params: &PolicyParams) -> Result<PolicyOutput> {
    if obs.len() != params.obs_dim() {
        return Err(Error::arg(alloc::format!(
            "observation has length {}, policy expects {}",
            obs.len(),
            params.obs_dim()
        )));
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("observation is not finite"));
    }
    Ok(PolicyOutput {
        mean: params.actor.forward(obs),
        std: params.log_std.iter().map(|s| s.exp()).collect(),
        value: params.critic.forward(obs)[0],
    })
}

/// Log density of a diagonal Gaussian.
pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), s)| {
            let z = (a - m) / s.exp();
            -0.5 * z * z - s - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|s| s + 0.5 * (1.0 + (2.0 * PI).ln()))
        .sum()
}

/// Observation layout, 57 entries:
///
/// | range | content |
/// |---|---|
/// | 0..3 | base linear velocity, body frame |
/// | 3..6 | base angular velocity, body frame |
/// | 6..9 | gravity direction in the body frame |
/// | 9..12 | ramped command `[vx, vy, wz]` |
/// | 12..27 | joint positions minus defaults |
/// | 27..42 | joint velocities |
/// | 42..57 | previous action |
pub fn build_observation(
    state: &RobotState,
    cmd: &Command,
    default_pose: &JointVector,
    prev_action: &JointVector,
) -> Result<Vec<f64>> {
    let mut obs = Vec::with_capacity(OBSERVATION_DIM);
    obs.extend_from_slice(state.base_linear_velocity.as_slice());
    obs.extend_from_slice(state.base_angular_velocity.as_slice());
    obs.extend_from_slice(state.projected_gravity().as_slice());
    obs.extend_from_slice(&cmd.current());
    obs.extend(state.q.iter().zip(default_pose).map(|(q, d)| q - d));
    obs.extend_from_slice(&state.qd);
    obs.extend_from_slice(prev_action);
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("observation inputs must be finite"));
    }
    Ok(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{UnitQuaternion, Vector3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_observation_has_only_gravity() {
        let state = RobotState::default();
        let obs = build_observation(
            &state,
            &Command::default(),
            &[0.0; NUM_JOINTS],
            &[0.0; NUM_JOINTS],
        )
        .unwrap();
        assert_eq!(obs.len(), 57);
        assert_eq!(OBSERVATION_DIM, 57);
        for (i, v) in obs.iter().enumerate() {
            let expected = if i == 8 { -1.0 } else { 0.0 };
            assert_eq!(*v, expected, "entry {i}");
        }
    }

    #[test]
    fn inverted_base_flips_gravity() {
        let state = RobotState {
            base_orientation: UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI),
            ..RobotState::default()
        };
        let obs = build_observation(
            &state,
            &Command::default(),
            &[0.0; NUM_JOINTS],
            &[0.0; NUM_JOINTS],
        )
        .unwrap();
        assert!((obs[8] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observation_rejects_non_finite() {
        let mut prev = [0.0; NUM_JOINTS];
        prev[3] = f64::NAN;
        assert!(build_observation(
            &RobotState::default(),
            &Command::default(),
            &[0.0; NUM_JOINTS],
            &prev
        )
        .is_err());
    }

    #[test]
    fn joint_positions_are_relative_to_defaults() {
        let mut state = RobotState::default();
        state.q[1] = 0.9;
        let mut defaults = [0.0; NUM_JOINTS];
        defaults[1] = 0.7;
        let obs =
            build_observation(&state, &Command::default(), &defaults, &[0.0; NUM_JOINTS]).unwrap();
        assert!((obs[13] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_give_zero_mean_and_value() {
        let p = PolicyParams::zeros(57, 15, &[16, 8], 0.25).unwrap();
        let out = policy_forward(&[0.3; 57], &p).unwrap();
        assert_eq!(out.mean, vec![0.0; 15]);
        assert_eq!(out.value, 0.0);
        assert_eq!(out.std, vec![1.0; 15]);
    }

    #[test]
    fn forward_is_deterministic_and_checks_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = PolicyParams::new(57, 15, &[128, 64], 0.25, -0.5, &mut rng).unwrap();
        let obs: Vec<f64> = (0..57).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(
            policy_forward(&obs, &p).unwrap(),
            policy_forward(&obs, &p).unwrap()
        );
        assert!(policy_forward(&obs[..56], &p).is_err());
    }

    #[test]
    fn weight_perturbation_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = PolicyParams::new(6, 3, &[8, 8], 0.25, -0.5, &mut rng).unwrap();
        for w in p.actor.params_mut() {
            *w += rng.random_range(-0.3..0.3);
        }
        let obs = [0.5, -0.2, 0.9, 0.1, -0.6, 0.3];
        let mut acts = Activations::default();
        p.actor.forward_cached(&obs, &mut acts);
        let eps = 1e-5;
        for out_idx in 0..3 {
            let mut seed = [0.0; 3];
            seed[out_idx] = 1.0;
            let mut grad = vec![0.0; p.actor.num_params()];
            p.actor.backward(&acts, &seed, &mut grad);
            for i in (0..p.actor.num_params()).step_by(7) {
                let mut hi = p.clone();
                hi.actor.params_mut()[i] += eps;
                let mut lo = p.clone();
                lo.actor.params_mut()[i] -= eps;
                let fd = (policy_forward(&obs, &hi).unwrap().mean[out_idx]
                    - policy_forward(&obs, &lo).unwrap().mean[out_idx])
                    / (2.0 * eps);
                let scale = fd.abs().max(grad[i].abs());
                assert!(
                    (fd - grad[i]).abs() <= 1e-4 * scale || (fd - grad[i]).abs() < 1e-10,
                    "output {out_idx} param {i}: fd {fd} analytic {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn log_prob_and_entropy_match_closed_form() {
        let lp = gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
        assert!((lp + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        let lp = gaussian_log_prob(&[1.0, 2.0], &[0.5, 2.0], &[(0.5f64).ln(), 0.0]);
        let expected = -0.5 * 1.0 - (0.5f64).ln() - 0.5 * (2.0 * PI).ln() - 0.5 * (2.0 * PI).ln();
        assert!((lp - expected).abs() < 1e-12);
        assert!(
            (gaussian_entropy(&[0.0]) - 0.5 * (2.0 * PI * core::f64::consts::E).ln()).abs() < 1e-12
        );
    }

    #[test]
    fn validation_rejects_out_of_range_log_std() {
        let mut p = PolicyParams::zeros(4, 2, &[3], 0.25).unwrap();
        p.log_std[0] = 1.5;
        assert!(p.validate().is_err());
        p.clamp_log_std();
        assert_eq!(p.log_std[0], 1.0);
        p.validate().unwrap();
    }
}
