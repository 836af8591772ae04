use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::Activations;
use super::{gaussian_entropy, gaussian_log_prob, PolicyParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip_eps: f64,
    pub lr: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm clip; `0` disables it.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lam: 0.95,
            clip_eps: 0.2,
            lr: 3e-4,
            epochs: 4,
            minibatches: 4,
            entropy_coef: 0.005,
            value_coef: 0.5,
            max_grad_norm: 1.0,
            normalize_advantages: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.gamma) {
            return Err(Error::validation("training.ppo.gamma", "must be in [0, 1]"));
        }
        if !unit(self.lam) {
            return Err(Error::validation("training.ppo.lam", "must be in [0, 1]"));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::validation(
                "training.ppo.clip_eps",
                "must be in (0, 1)",
            ));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::validation("training.ppo.lr", "must be positive"));
        }
        if self.epochs == 0 || self.minibatches == 0 {
            return Err(Error::validation(
                "training.ppo",
                "epochs and minibatches must be >= 1",
            ));
        }
        for (field, v) in [
            ("training.ppo.entropy_coef", self.entropy_coef),
            ("training.ppo.value_coef", self.value_coef),
            ("training.ppo.max_grad_norm", self.max_grad_norm),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(field, "must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// On-policy samples. Observations and actions are stored row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn new(obs_dim: usize, action_dim: usize) -> Self {
        RolloutBatch {
            obs_dim,
            action_dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.action_dim..(i + 1) * self.action_dim]
    }

    /// Appends another batch with the same dimensions.
    pub fn extend(&mut self, other: &RolloutBatch) -> Result<()> {
        if other.obs_dim != self.obs_dim || other.action_dim != self.action_dim {
            return Err(Error::arg("batch dimensions differ"));
        }
        self.observations.extend_from_slice(&other.observations);
        self.actions.extend_from_slice(&other.actions);
        self.log_probs.extend_from_slice(&other.log_probs);
        self.rewards.extend_from_slice(&other.rewards);
        self.values.extend_from_slice(&other.values);
        self.dones.extend_from_slice(&other.dones);
        self.advantages.extend_from_slice(&other.advantages);
        self.returns.extend_from_slice(&other.returns);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::arg("empty rollout batch"));
        }
        let ok = self.observations.len() == n * self.obs_dim
            && self.actions.len() == n * self.action_dim
            && self.rewards.len() == n
            && self.values.len() == n
            && self.dones.len() == n
            && self.advantages.len() == n
            && self.returns.len() == n;
        if !ok {
            return Err(Error::arg("rollout batch fields have inconsistent lengths"));
        }
        Ok(())
    }

    /// Shifts and scales advantages to zero mean and unit variance. A batch
    /// with (numerically) constant advantages is only centred.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len() as f64;
        if n == 0.0 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        for a in &mut self.advantages {
            *a -= mean;
            if std > 1e-12 {
                *a /= std;
            }
        }
    }
}

/// Generalized advantage estimates for one trajectory segment.
///
/// `values` carries one more entry than `rewards`: the bootstrap value of the
/// state after the last step. `dones[t]` cuts both the bootstrap and the
/// recursion after step `t`.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lam: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if dones.len() != n || values.len() != n + 1 {
        return Err(Error::arg(format!(
            "gae expects rewards/dones of equal length and values one longer (got {}, {}, {})",
            n,
            dones.len(),
            values.len()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) || !(0.0..=1.0).contains(&lam) {
        return Err(Error::arg("gamma and lam must lie in [0, 1]"));
    }
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let (next_value, carry) = if dones[t] {
            (0.0, 0.0)
        } else {
            (gamma * values[t + 1], gamma * lam * running)
        };
        let delta = rewards[t] + next_value - values[t];
        running = delta + carry;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Per-sample clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)` and its
/// derivative with respect to `r`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Gradient with the same block layout as [`PolicyParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrad {
    pub actor: Vec<f64>,
    pub log_std: Vec<f64>,
    pub critic: Vec<f64>,
}

impl PolicyGrad {
    pub fn zeros_like(p: &PolicyParams) -> Self {
        PolicyGrad {
            actor: vec![0.0; p.actor.num_params()],
            log_std: vec![0.0; p.log_std.len()],
            critic: vec![0.0; p.critic.num_params()],
        }
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.actor.iter().chain(&self.log_std).chain(&self.critic)
    }

    pub fn scale(&mut self, k: f64) {
        for g in self
            .actor
            .iter_mut()
            .chain(&mut self.log_std)
            .chain(&mut self.critic)
        {
            *g *= k;
        }
    }
}

/// Minibatch loss components. `total` is the minimized quantity:
/// `policy_loss + value_coef * value_loss - entropy_coef * entropy`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Combined loss over the samples `indices` of `batch`. When `grad` is given
/// the analytic gradient of `total` is added into it.
pub fn ppo_loss(
    params: &PolicyParams,
    batch: &RolloutBatch,
    indices: &[usize],
    cfg: &PpoConfig,
    mut grad: Option<&mut PolicyGrad>,
) -> LossTerms {
    let m = indices.len().max(1) as f64;
    let sigma: Vec<f64> = params.log_std.iter().map(|s| s.exp()).collect();
    let mut terms = LossTerms::default();
    let mut actor_acts = Activations::default();
    let mut critic_acts = Activations::default();
    let mut d_mean = vec![0.0; params.action_dim()];
    for &i in indices {
        let obs = batch.observation(i);
        let action = batch.action(i);
        params.actor.forward_cached(obs, &mut actor_acts);
        params.critic.forward_cached(obs, &mut critic_acts);
        let mean = actor_acts.output();
        let value = critic_acts.output()[0];

        let logp = gaussian_log_prob(action, mean, &params.log_std);
        let log_ratio = logp - batch.log_probs[i];
        let ratio = log_ratio.exp();
        let (obj, d_obj) = clipped_surrogate(ratio, batch.advantages[i], cfg.clip_eps);
        let v_err = value - batch.returns[i];
        terms.policy_loss -= obj / m;
        terms.value_loss += 0.5 * v_err * v_err / m;
        terms.approx_kl += ((ratio - 1.0) - log_ratio) / m;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            terms.clip_fraction += 1.0 / m;
        }

        if let Some(g) = grad.as_deref_mut() {
            // d(-obj)/d(logp) = -d_obj * ratio
            let coef = -d_obj * ratio / m;
            if coef != 0.0 {
                for j in 0..d_mean.len() {
                    let z = (action[j] - mean[j]) / sigma[j];
                    d_mean[j] = coef * z / sigma[j];
                    g.log_std[j] += coef * (z * z - 1.0);
                }
                params.actor.backward(&actor_acts, &d_mean, &mut g.actor);
            }
            params
                .critic
                .backward(&critic_acts, &[cfg.value_coef * v_err / m], &mut g.critic);
        }
    }
    terms.entropy = gaussian_entropy(&params.log_std);
    if let Some(g) = grad {
        for gs in &mut g.log_std {
            *gs -= cfg.entropy_coef;
        }
    }
    terms.total =
        terms.policy_loss + cfg.value_coef * terms.value_loss - cfg.entropy_coef * terms.entropy;
    terms
}

/// Adam moments for every parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: PolicyGrad,
    v: PolicyGrad,
}

impl Adam {
    pub fn new(params: &PolicyParams) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: PolicyGrad::zeros_like(params),
            v: PolicyGrad::zeros_like(params),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One descent step on `params` along `grad`.
    pub fn apply(&mut self, params: &mut PolicyParams, grad: &PolicyGrad, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        };
        update(
            params.actor.params_mut(),
            &grad.actor,
            &mut self.m.actor,
            &mut self.v.actor,
        );
        update(
            &mut params.log_std,
            &grad.log_std,
            &mut self.m.log_std,
            &mut self.v.log_std,
        );
        update(
            params.critic.params_mut(),
            &grad.critic,
            &mut self.m.critic,
            &mut self.v.critic,
        );
        params.clamp_log_std();
    }
}

/// Runs `cfg.epochs` passes of shuffled minibatch Adam steps on the combined
/// loss. Returns the new parameters and the loss terms averaged over all
/// minibatches (each measured before its step).
pub fn ppo_update<R: Rng + ?Sized>(
    batch: &RolloutBatch,
    params: &PolicyParams,
    cfg: &PpoConfig,
    optimizer: &mut Adam,
    rng: &mut R,
) -> Result<(PolicyParams, LossTerms)> {
    cfg.validate()?;
    batch.validate()?;
    if batch.obs_dim != params.obs_dim() || batch.action_dim != params.action_dim() {
        return Err(Error::arg("batch dimensions do not match the policy"));
    }
    let mut batch_n;
    let batch = if cfg.normalize_advantages {
        batch_n = batch.clone();
        batch_n.normalize_advantages();
        &batch_n
    } else {
        batch
    };
    let mut params = params.clone();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let chunk = batch.len().div_ceil(cfg.minibatches);
    let mut stats = LossTerms::default();
    let mut count = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for (mb, idx) in order.chunks(chunk).enumerate() {
            let mut grad = PolicyGrad::zeros_like(&params);
            let terms = ppo_loss(&params, batch, idx, cfg, Some(&mut grad));
            let norm = grad.norm();
            if !terms.total.is_finite() || !norm.is_finite() {
                return Err(Error::TrainingDiverged {
                    iteration: 0,
                    diagnostics: format!(
                        "epoch {epoch} minibatch {mb}: policy_loss {} value_loss {} entropy {} grad_norm {}",
                        terms.policy_loss, terms.value_loss, terms.entropy, norm
                    ),
                });
            }
            if cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm {
                grad.scale(cfg.max_grad_norm / norm);
            }
            optimizer.apply(&mut params, &grad, cfg.lr);
            stats.policy_loss += terms.policy_loss;
            stats.value_loss += terms.value_loss;
            stats.entropy += terms.entropy;
            stats.total += terms.total;
            stats.approx_kl += terms.approx_kl;
            stats.clip_fraction += terms.clip_fraction;
            count += 1;
        }
    }
    let k = 1.0 / count as f64;
    stats.policy_loss *= k;
    stats.value_loss *= k;
    stats.entropy *= k;
    stats.total *= k;
    stats.approx_kl *= k;
    stats.clip_fraction *= k;
    Ok((params, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::policy_forward;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rewards_and_values_give_zero_advantages() {
        let (adv, ret) = gae_advantages(&[0.0; 6], &[0.0; 7], &[false; 6], 0.99, 0.95).unwrap();
        assert_eq!(adv, vec![0.0; 6]);
        assert_eq!(ret, vec![0.0; 6]);
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..11).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (adv, _) = gae_advantages(&r, &v, &[false; 10], 0.97, 0.0).unwrap();
        for t in 0..10 {
            assert_eq!(adv[t], r[t] + 0.97 * v[t + 1] - v[t]);
        }
    }

    fn brute_force(r: &[f64], v: &[f64], d: &[bool], gamma: f64, lam: f64) -> Vec<f64> {
        let n = r.len();
        (0..n)
            .map(|t| {
                let mut sum = 0.0;
                let mut w = 1.0;
                for l in t..n {
                    let next = if d[l] { 0.0 } else { gamma * v[l + 1] };
                    sum += w * (r[l] + next - v[l]);
                    if d[l] {
                        break;
                    }
                    w *= gamma * lam;
                }
                sum
            })
            .collect()
    }

    #[test]
    fn matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for case in 0..200 {
            let r: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..11).map(|_| rng.random_range(-10.0..10.0)).collect();
            let d: Vec<bool> = (0..10)
                .map(|_| case % 2 == 1 && rng.random_bool(0.2))
                .collect();
            let gamma = rng.random_range(0.8..1.0);
            let lam = rng.random_range(0.0..1.0);
            let (adv, ret) = gae_advantages(&r, &v, &d, gamma, lam).unwrap();
            let oracle = brute_force(&r, &v, &d, gamma, lam);
            for t in 0..10 {
                assert!((adv[t] - oracle[t]).abs() < 1e-10);
                assert_eq!(ret[t], adv[t] + v[t]);
            }
        }
    }

    #[test]
    fn constant_reward_with_exact_value_has_zero_advantage() {
        for (r, gamma) in [(1.0, 0.5), (3.0, 0.75), (-2.0, 0.875)] {
            let value = r / (1.0 - gamma);
            let (adv, _) =
                gae_advantages(&[r; 20], &[value; 21], &[false; 20], gamma, 0.95).unwrap();
            assert!(adv.iter().all(|a| *a == 0.0), "gamma {gamma}: {adv:?}");
        }
        let (adv, _) = gae_advantages(
            &[1.0; 20],
            &[1.0 / (1.0 - 0.99); 21],
            &[false; 20],
            0.99,
            0.95,
        )
        .unwrap();
        assert!(adv.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn gae_rejects_bad_arguments() {
        assert!(gae_advantages(&[0.0; 3], &[0.0; 3], &[false; 3], 0.9, 0.9).is_err());
        assert!(gae_advantages(&[0.0; 3], &[0.0; 4], &[false; 2], 0.9, 0.9).is_err());
        assert!(gae_advantages(&[0.0; 3], &[0.0; 4], &[false; 3], 1.1, 0.9).is_err());
    }

    #[test]
    fn surrogate_examples() {
        assert_eq!(clipped_surrogate(1.0, 2.0, 0.2), (2.0, 2.0));
        assert_eq!(clipped_surrogate(1.5, 2.0, 0.2), (1.2 * 2.0, 0.0));
        assert_eq!(clipped_surrogate(0.5, -1.0, 0.2), (-0.8, 0.0));
        // not binding: the pessimistic branch is the unclipped one
        assert_eq!(clipped_surrogate(1.5, -1.0, 0.2), (-1.5, -1.0));
        assert_eq!(clipped_surrogate(0.5, 1.0, 0.2), (0.5, 1.0));
    }

    proptest! {
        #[test]
        fn surrogate_is_flat_where_clipping_binds(
            r in 0.0f64..3.0,
            a in prop_oneof![-5.0f64..-1e-3, 1e-3f64..5.0],
        ) {
            let eps = 0.2;
            let binding = (a > 0.0 && r > 1.0 + eps) || (a < 0.0 && r < 1.0 - eps);
            let (_, d) = clipped_surrogate(r, a, eps);
            if binding {
                prop_assert_eq!(d, 0.0);
                let h = 1e-6;
                if (r - 1.0).abs() > eps + 2.0 * h {
                    prop_assert_eq!(clipped_surrogate(r + h, a, eps).0, clipped_surrogate(r - h, a, eps).0);
                }
            } else {
                prop_assert_eq!(d, a);
            }
        }
    }

    /// Batch sampled from `behaviour`, with random advantages and returns.
    fn toy_batch(behaviour: &PolicyParams, n: usize, rng: &mut ChaCha8Rng) -> RolloutBatch {
        let mut b = RolloutBatch::new(behaviour.obs_dim(), behaviour.action_dim());
        for _ in 0..n {
            let obs: Vec<f64> = (0..behaviour.obs_dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let out = policy_forward(&obs, behaviour).unwrap();
            let action = behaviour.sample_action(&out, rng);
            b.log_probs
                .push(gaussian_log_prob(&action, &out.mean, &behaviour.log_std));
            b.observations.extend_from_slice(&obs);
            b.actions.extend_from_slice(&action);
            b.rewards.push(0.0);
            b.values.push(out.value);
            b.dones.push(false);
            b.advantages.push(rng.random_range(-2.0..2.0));
            b.returns.push(rng.random_range(-1.0..1.0));
        }
        b
    }

    fn flat(p: &PolicyParams) -> Vec<f64> {
        p.actor
            .params()
            .iter()
            .chain(&p.log_std)
            .chain(p.critic.params())
            .copied()
            .collect()
    }

    fn set_flat(p: &mut PolicyParams, k: usize, value: f64) {
        let na = p.actor.num_params();
        let ns = p.log_std.len();
        if k < na {
            p.actor.params_mut()[k] = value;
        } else if k < na + ns {
            p.log_std[k - na] = value;
        } else {
            p.critic.params_mut()[k - na - ns] = value;
        }
    }

    fn check_loss_gradient(params: &PolicyParams, batch: &RolloutBatch, cfg: &PpoConfig) {
        let idx: Vec<usize> = (0..batch.len()).collect();
        let mut grad = PolicyGrad::zeros_like(params);
        ppo_loss(params, batch, &idx, cfg, Some(&mut grad));
        let analytic: Vec<f64> = grad.iter().copied().collect();
        let theta = flat(params);
        let eps = 1e-5;
        for k in 0..theta.len() {
            let mut hi = params.clone();
            set_flat(&mut hi, k, theta[k] + eps);
            let mut lo = params.clone();
            set_flat(&mut lo, k, theta[k] - eps);
            let fd = (ppo_loss(&hi, batch, &idx, cfg, None).total
                - ppo_loss(&lo, batch, &idx, cfg, None).total)
                / (2.0 * eps);
            let diff = (fd - analytic[k]).abs();
            let scale = fd.abs().max(analytic[k].abs());
            assert!(
                diff <= 1e-4 * scale || diff < 1e-9,
                "param {k}: fd {fd} analytic {}",
                analytic[k]
            );
        }
    }

    /// Moves the current policy away from the behaviour policy so ratios
    /// spread over both sides of the clip band, skipping samples too close to
    /// a kink for central differences.
    fn spread_batch(params: &PolicyParams, seed: u64, n: usize) -> RolloutBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut behaviour = params.clone();
        for w in behaviour.actor.params_mut() {
            *w += rng.random_range(-0.15..0.15);
        }
        let mut b = toy_batch(&behaviour, n, &mut rng);
        let keep: Vec<usize> = (0..b.len())
            .filter(|&i| {
                let out = policy_forward(b.observation(i), params).unwrap();
                let r = (gaussian_log_prob(b.action(i), &out.mean, &params.log_std)
                    - b.log_probs[i])
                    .exp();
                ((r - 0.8).abs() > 1e-3) && ((r - 1.2).abs() > 1e-3)
            })
            .collect();
        let mut kept = RolloutBatch::new(b.obs_dim, b.action_dim);
        for i in keep {
            kept.observations.extend_from_slice(b.observation(i));
            kept.actions.extend_from_slice(b.action(i));
            kept.log_probs.push(b.log_probs[i]);
            kept.rewards.push(b.rewards[i]);
            kept.values.push(b.values[i]);
            kept.dones.push(b.dones[i]);
            kept.advantages.push(b.advantages[i]);
            kept.returns.push(b.returns[i]);
        }
        b = kept;
        b
    }

    #[test]
    fn five_parameter_policy_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // 3 inputs, no hidden layer: 3 weights + bias + one log-std
        let params = PolicyParams::new(3, 1, &[], 0.25, -0.3, &mut rng).unwrap();
        assert_eq!(params.actor.num_params() + params.log_std.len(), 5);
        let batch = spread_batch(&params, 4, 64);
        check_loss_gradient(&params, &batch, &PpoConfig::default());
    }

    #[test]
    fn hidden_layer_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut params = PolicyParams::new(3, 2, &[6], 0.25, -0.5, &mut rng).unwrap();
        for w in params.actor.params_mut() {
            *w += rng.random_range(-0.5..0.5);
        }
        assert!(params.num_params() <= 100);
        let batch = spread_batch(&params, 9, 48);
        let cfg = PpoConfig {
            entropy_coef: 0.01,
            ..PpoConfig::default()
        };
        let idx: Vec<usize> = (0..batch.len()).collect();
        assert!(ppo_loss(&params, &batch, &idx, &cfg, None).clip_fraction > 0.0);
        check_loss_gradient(&params, &batch, &cfg);
    }

    #[test]
    fn zero_advantages_leave_actor_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = PolicyParams::new(4, 2, &[8], 0.25, -0.5, &mut rng).unwrap();
        let mut batch = toy_batch(&params, 32, &mut rng);
        batch.advantages.iter_mut().for_each(|a| *a = 0.0);

        let cfg = PpoConfig {
            entropy_coef: 0.0,
            ..PpoConfig::default()
        };
        let (next, _) =
            ppo_update(&batch, &params, &cfg, &mut Adam::new(&params), &mut rng).unwrap();
        assert_eq!(next.actor, params.actor);
        assert_eq!(next.log_std, params.log_std);
        assert_ne!(next.critic, params.critic);

        let (next, _) = ppo_update(
            &batch,
            &params,
            &PpoConfig::default(),
            &mut Adam::new(&params),
            &mut rng,
        )
        .unwrap();
        assert_eq!(next.actor, params.actor);
        assert!(next.log_std.iter().zip(&params.log_std).all(|(a, b)| a > b));
    }

    #[test]
    fn small_step_decreases_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = PolicyParams::new(4, 2, &[8, 8], 0.25, -0.5, &mut rng).unwrap();
        let batch = toy_batch(&params, 64, &mut rng);
        let cfg = PpoConfig {
            lr: 1e-4,
            epochs: 1,
            minibatches: 1,
            normalize_advantages: false,
            ..PpoConfig::default()
        };
        let idx: Vec<usize> = (0..batch.len()).collect();
        let before = ppo_loss(&params, &batch, &idx, &cfg, None).total;
        let (next, _) =
            ppo_update(&batch, &params, &cfg, &mut Adam::new(&params), &mut rng).unwrap();
        let after = ppo_loss(&next, &batch, &idx, &cfg, None).total;
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn non_finite_loss_reports_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = PolicyParams::new(4, 2, &[8], 0.25, -0.5, &mut rng).unwrap();
        let mut batch = toy_batch(&params, 16, &mut rng);
        batch.returns[3] = f64::NAN;
        let err = ppo_update(
            &batch,
            &params,
            &PpoConfig::default(),
            &mut Adam::new(&params),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { .. }), "{err:?}");
    }

    #[test]
    fn normalization_gives_zero_mean_unit_variance() {
        let mut b = RolloutBatch::new(1, 1);
        b.advantages = vec![1.0, 2.0, 3.0, 10.0];
        b.normalize_advantages();
        let mean: f64 = b.advantages.iter().sum::<f64>() / 4.0;
        let var: f64 = b.advantages.iter().map(|a| a * a).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn batch_shape_is_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = PolicyParams::new(4, 2, &[8], 0.25, -0.5, &mut rng).unwrap();
        let mut batch = toy_batch(&params, 8, &mut rng);
        batch.returns.pop();
        assert!(batch.validate().is_err());
        assert!(ppo_update(
            &batch,
            &params,
            &PpoConfig::default(),
            &mut Adam::new(&params),
            &mut rng
        )
        .is_err());
    }
}
