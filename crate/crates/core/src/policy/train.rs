use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::ppo::{gae_advantages, ppo_update, Adam, LossTerms, PpoConfig, RolloutBatch};
use super::{gaussian_log_prob, policy_forward, PolicyParams};
use crate::curriculum::{CurriculumConfig, CurriculumState};
use crate::reward::RewardBreakdown;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Parallel environment instances, one rollout worker each.
    pub num_envs: usize,
    /// Steps collected per environment per iteration.
    pub steps_per_env: usize,
    pub hidden: Vec<usize>,
    pub action_scale: f64,
    pub init_log_std: f64,
    pub ppo: PpoConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 300,
            num_envs: 8,
            steps_per_env: 128,
            hidden: vec![128, 64],
            action_scale: 0.25,
            init_log_std: -0.5,
            ppo: PpoConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Settings for the toy-1d environment: a [32, 32] network and the pinned
    /// 300-iteration budget.
    pub fn toy_1d() -> Self {
        TrainConfig {
            hidden: vec![32, 32],
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.num_envs == 0 || self.steps_per_env == 0 {
            return Err(Error::validation(
                "training",
                "iterations, num_envs and steps_per_env must be positive",
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::validation(
                "training.hidden",
                "layer widths must be positive",
            ));
        }
        if !(self.action_scale > 0.0) || !self.action_scale.is_finite() {
            return Err(Error::validation(
                "training.action_scale",
                "must be positive",
            ));
        }
        if !self.init_log_std.is_finite() {
            return Err(Error::validation("training.init_log_std", "must be finite"));
        }
        self.ppo.validate()
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub samples: usize,
    pub episodes: usize,
    /// Mean per-step reward over the iteration's rollouts.
    pub mean_reward: f64,
    /// Mean return of episodes completed during the iteration.
    pub mean_episode_return: Option<f64>,
    /// Mean linear tracking kernel, the curriculum's linear metric.
    pub mean_linear_tracking: f64,
    pub mean_angular_tracking: Option<f64>,
    /// Curriculum after this iteration's update.
    pub curriculum: CurriculumState,
    /// Per-step mean of every reward term.
    pub reward: RewardBreakdown,
    pub loss: LossTerms,
    pub mean_action_std: f64,
}

/// Runs `f` once on every worker. Implementations may run workers
/// concurrently; each worker owns all state it touches.
pub trait WorkerPool {
    fn run<W, F>(&self, workers: &mut [W], f: F) -> Result<()>
    where
        W: Send,
        F: Fn(&mut W) -> Result<()> + Sync;
}

/// Runs workers one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl WorkerPool for Sequential {
    fn run<W, F>(&self, workers: &mut [W], f: F) -> Result<()>
    where
        W: Send,
        F: Fn(&mut W) -> Result<()> + Sync,
    {
        workers.iter_mut().try_for_each(f)
    }
}

#[derive(Debug, Clone, Default)]
struct WorkerStats {
    steps: usize,
    reward: f64,
    breakdown: [f64; 10],
    linear: f64,
    angular: f64,
    angular_steps: usize,
    episode_returns: Vec<f64>,
}

struct Worker<E> {
    env: E,
    rng: ChaCha8Rng,
    obs: Vec<f64>,
    episode_return: f64,
    batch: RolloutBatch,
    stats: WorkerStats,
}

fn worker_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn collect<E: Environment>(
    w: &mut Worker<E>,
    params: &PolicyParams,
    curriculum: &CurriculumState,
    horizon: usize,
    gamma: f64,
    lam: f64,
) -> Result<()> {
    let mut batch = RolloutBatch::new(params.obs_dim(), params.action_dim());
    let mut stats = WorkerStats::default();
    for _ in 0..horizon {
        let out = policy_forward(&w.obs, params)?;
        let action = params.sample_action(&out, &mut w.rng);
        let log_prob = gaussian_log_prob(&action, &out.mean, &params.log_std);
        let scaled: Vec<f64> = action.iter().map(|a| a * params.action_scale).collect();
        let step = w.env.step(&scaled)?;

        stats.steps += 1;
        stats.reward += step.reward;
        for (acc, t) in stats.breakdown.iter_mut().zip(
            step.breakdown
                .terms()
                .iter()
                .chain(core::iter::once(&step.breakdown.total)),
        ) {
            *acc += t;
        }
        stats.linear += step.linear_tracking;
        if let Some(a) = step.angular_tracking {
            stats.angular += a;
            stats.angular_steps += 1;
        }
        w.episode_return += step.reward;

        let done = step.terminated || step.truncated;
        let mut reward = step.reward;
        if step.truncated && !step.terminated {
            // time limit: bootstrap from the final state instead of cutting
            reward += gamma * policy_forward(&step.observation, params)?.value;
        }
        batch.observations.extend_from_slice(&w.obs);
        batch.actions.extend_from_slice(&action);
        batch.log_probs.push(log_prob);
        batch.rewards.push(reward);
        batch.values.push(out.value);
        batch.dones.push(done);

        if done {
            stats.episode_returns.push(w.episode_return);
            w.episode_return = 0.0;
            w.obs = w.env.reset(curriculum, &mut w.rng)?;
        } else {
            w.obs = step.observation;
        }
    }
    let mut values = batch.values.clone();
    values.push(policy_forward(&w.obs, params)?.value);
    let (adv, ret) = gae_advantages(&batch.rewards, &values, &batch.dones, gamma, lam)?;
    batch.advantages = adv;
    batch.returns = ret;
    w.batch = batch;
    w.stats = stats;
    Ok(())
}

/// Final policy, full log and curriculum of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: Vec<IterationLog>,
    pub curriculum: CurriculumState,
}

/// PPO training loop: parallel rollouts, GAE, curriculum update from the mean
/// tracking kernels, then the clipped-surrogate update.
///
/// `make_env(i)` builds the environment for worker `i`. Worker `i` draws from
/// ChaCha8 stream `i + 1` of `seed`; minibatch shuffling uses stream 0, so a
/// run is a pure function of the inputs. `on_iteration` sees every log row
/// and the updated parameters, e.g. to write checkpoints; its error aborts
/// the run.
pub fn train<E, P, F, Cb, Er>(
    make_env: F,
    config: &TrainConfig,
    curriculum: CurriculumConfig,
    seed: u64,
    pool: &P,
    mut on_iteration: Cb,
) -> core::result::Result<TrainOutcome, Er>
where
    E: Environment + Send,
    P: WorkerPool,
    F: Fn(usize) -> Result<E>,
    Cb: FnMut(&IterationLog, &PolicyParams) -> core::result::Result<(), Er>,
    Er: From<Error>,
{
    config.validate()?;
    let mut curriculum = CurriculumState::new(curriculum)?;
    let mut update_rng = worker_rng(seed, 0);

    let mut workers = Vec::with_capacity(config.num_envs);
    for i in 0..config.num_envs {
        let mut env = make_env(i)?;
        let mut rng = worker_rng(seed, i as u64 + 1);
        let obs = env.reset(&curriculum, &mut rng)?;
        workers.push(Worker {
            env,
            rng,
            obs,
            episode_return: 0.0,
            batch: RolloutBatch::default(),
            stats: WorkerStats::default(),
        });
    }
    let obs_dim = workers[0].env.obs_dim();
    let action_dim = workers[0].env.action_dim();
    let mut params = PolicyParams::new(
        obs_dim,
        action_dim,
        &config.hidden,
        config.action_scale,
        config.init_log_std,
        &mut update_rng,
    )?;
    let mut optimizer = Adam::new(&params);
    let mut log = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        {
            let params = &params;
            let cur = &curriculum;
            pool.run(&mut workers, |w| {
                collect(
                    w,
                    params,
                    cur,
                    config.steps_per_env,
                    config.ppo.gamma,
                    config.ppo.lam,
                )
            })?;
        }

        let mut batch = RolloutBatch::new(obs_dim, action_dim);
        let mut total = WorkerStats::default();
        for w in &workers {
            batch.extend(&w.batch)?;
            total.steps += w.stats.steps;
            total.reward += w.stats.reward;
            for (a, b) in total.breakdown.iter_mut().zip(&w.stats.breakdown) {
                *a += b;
            }
            total.linear += w.stats.linear;
            total.angular += w.stats.angular;
            total.angular_steps += w.stats.angular_steps;
            total
                .episode_returns
                .extend_from_slice(&w.stats.episode_returns);
        }
        let n = total.steps as f64;
        let linear = (total.linear / n).clamp(0.0, 1.0);
        let angular = (total.angular_steps > 0)
            .then(|| (total.angular / total.angular_steps as f64).clamp(0.0, 1.0));
        // environments without a yaw channel never widen the yaw range
        curriculum = curriculum.update(linear, angular.unwrap_or(0.0))?;

        let (next, loss) = ppo_update(
            &batch,
            &params,
            &config.ppo,
            &mut optimizer,
            &mut update_rng,
        )
        .map_err(|e| match e {
            Error::TrainingDiverged { diagnostics, .. } => Error::TrainingDiverged {
                iteration,
                diagnostics,
            },
            other => other,
        })?;
        if next
            .actor
            .params()
            .iter()
            .chain(next.critic.params())
            .any(|p| !p.is_finite())
        {
            return Err(Error::TrainingDiverged {
                iteration,
                diagnostics: format!("non-finite weights after update (loss {:?})", loss),
            }
            .into());
        }
        params = next;

        let b = total.breakdown.map(|v| v / n);
        let row = IterationLog {
            iteration,
            samples: total.steps,
            episodes: total.episode_returns.len(),
            mean_reward: total.reward / n,
            mean_episode_return: (!total.episode_returns.is_empty()).then(|| {
                total.episode_returns.iter().sum::<f64>() / total.episode_returns.len() as f64
            }),
            mean_linear_tracking: linear,
            mean_angular_tracking: angular,
            curriculum,
            reward: RewardBreakdown {
                gait: b[0],
                spine_undulation: b[1],
                spine_steering: b[2],
                lin_vel_tracking: b[3],
                ang_vel_tracking: b[4],
                air_time: b[5],
                torque: b[6],
                action_rate: b[7],
                orientation: b[8],
                total: b[9],
            },
            loss,
            mean_action_std: params.log_std.iter().map(|s| s.exp()).sum::<f64>()
                / action_dim as f64,
        };
        on_iteration(&row, &params)?;
        log.push(row);
    }
    Ok(TrainOutcome {
        params,
        log,
        curriculum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::env::{Toy1dConfig, Toy1dEnv};
    use crate::reward::RewardConfig;

    fn toy(_: usize) -> Result<Toy1dEnv> {
        Toy1dEnv::new(Toy1dConfig::default(), &RewardConfig::default())
    }

    fn short() -> TrainConfig {
        TrainConfig {
            iterations: 3,
            num_envs: 2,
            steps_per_env: 64,
            hidden: vec![16, 16],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn same_seed_gives_identical_logs() {
        let run = |seed| {
            train::<_, _, _, _, Error>(
                toy,
                &short(),
                CurriculumConfig::default(),
                seed,
                &Sequential,
                |_, _| Ok(()),
            )
            .unwrap()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a.log, b.log);
        assert_eq!(a.params, b.params);
        assert_ne!(run(8).log, a.log);
    }

    #[test]
    fn callback_sees_every_iteration_and_can_abort() {
        let mut seen = Vec::new();
        train::<_, _, _, _, Error>(
            toy,
            &short(),
            CurriculumConfig::default(),
            1,
            &Sequential,
            |row, _| {
                seen.push(row.iteration);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2]);

        let err = train(
            toy,
            &short(),
            CurriculumConfig::default(),
            1,
            &Sequential,
            |row, _| {
                if row.iteration == 1 {
                    Err(Error::arg("stop"))
                } else {
                    Ok(())
                }
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::arg("stop"));
    }

    #[test]
    fn planar_environment_trains() {
        use crate::policy::env::PlanarEnv;
        let cfg = TrainConfig {
            iterations: 2,
            num_envs: 2,
            steps_per_env: 16,
            hidden: vec![16],
            ..TrainConfig::default()
        };
        let out = train::<_, _, _, _, Error>(
            |_| PlanarEnv::canonical(),
            &cfg,
            CurriculumConfig::default(),
            3,
            &Sequential,
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(out.params.obs_dim(), 57);
        assert_eq!(out.params.action_dim(), 15);
        assert!(out
            .log
            .iter()
            .all(|r| r.mean_reward.is_finite() && r.samples == 32));
        assert!(out.log.iter().all(|r| r.mean_angular_tracking.is_none()));
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = TrainConfig {
            num_envs: 0,
            ..short()
        };
        assert!(train::<_, _, _, _, Error>(
            toy,
            &cfg,
            CurriculumConfig::default(),
            0,
            &Sequential,
            |_, _| Ok(())
        )
        .is_err());
    }
}
