//! Thread-parallel runners built on rayon. Results match the sequential
//! versions in `spinelab-core` exactly: every job owns its state and its
//! random stream.

use rayon::prelude::*;
use spinelab_core::eval::{
    drop_trial, path_metrics, DropConfig, DropController, DropTestReport, Figure8Path, Figure8Row,
    HeadingController, InitialOrientation, TrajectorySample, UnicycleTracker,
};
use spinelab_core::policy::WorkerPool;
use spinelab_core::sim::FreeFallModel;
use spinelab_core::{Error, Result};

/// Runs rollout workers on the rayon thread pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonPool;

impl WorkerPool for RayonPool {
    fn run<W, F>(&self, workers: &mut [W], f: F) -> Result<()>
    where
        W: Send,
        F: Fn(&mut W) -> Result<()> + Sync,
    {
        #[allow(clippy::redundant_closure)]
        workers.par_iter_mut().try_for_each(|w| f(w))
    }
}

/// Parallel counterpart of [`spinelab_core::eval::drop_test`].
pub fn drop_test_parallel(
    model: &FreeFallModel,
    controller: &DropController,
    initial: &InitialOrientation,
    trials: usize,
    seed: u64,
    cfg: &DropConfig,
) -> Result<DropTestReport> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "drop test needs at least one trial".into(),
        ));
    }
    let details = (0..trials)
        .into_par_iter()
        .map(|k| drop_trial(model, controller, initial, cfg, seed, k))
        .collect();
    Ok(DropTestReport::from_trials(
        *initial, controller, cfg.height, details,
    ))
}

/// One tracked lap per speed, laps run in parallel; rows keep the order of
/// `speeds`.
pub fn figure8_laps(
    path: &Figure8Path,
    controller: &HeadingController,
    tracker: &UnicycleTracker,
    speeds: &[f64],
) -> Result<Vec<(Figure8Row, Vec<TrajectorySample>)>> {
    speeds
        .par_iter()
        .map(|&vx| {
            let traj = tracker.run_lap(path, controller, vx)?;
            let metrics = path_metrics(&traj, path, vx)?;
            Ok((Figure8Row { vx, metrics }, traj))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinelab_core::curriculum::CurriculumConfig;
    use spinelab_core::eval::drop_test;
    use spinelab_core::policy::{train, Sequential, Toy1dConfig, Toy1dEnv, TrainConfig};
    use spinelab_core::reward::RewardConfig;
    use spinelab_core::sim::freefall::SelfRightingTrajectory;

    #[test]
    fn parallel_drop_matches_sequential() {
        let model = FreeFallModel::canonical();
        let ctrl = DropController::Cyclic(SelfRightingTrajectory::default());
        let init = InitialOrientation {
            roll: 135.0,
            pitch: 45.0,
        };
        let cfg = DropConfig::default();
        let a = drop_test(&model, &ctrl, &init, 6, 11, &cfg).unwrap();
        let b = drop_test_parallel(&model, &ctrl, &init, 6, 11, &cfg).unwrap();
        assert_eq!(a, b);
    }

    fn train_toy<P: WorkerPool>(pool: &P) -> Vec<f64> {
        let mut cfg = TrainConfig::toy_1d();
        cfg.iterations = 3;
        cfg.num_envs = 4;
        cfg.steps_per_env = 32;
        let out = train(
            |_| Toy1dEnv::new(Toy1dConfig::default(), &RewardConfig::default()),
            &cfg,
            CurriculumConfig::default(),
            5,
            pool,
            |_, _| Ok::<(), Error>(()),
        )
        .unwrap();
        out.params.actor.params().to_vec()
    }

    #[test]
    fn parallel_training_matches_sequential() {
        assert_eq!(train_toy(&Sequential), train_toy(&RayonPool));
    }

    #[test]
    fn laps_keep_speed_order() {
        let path = Figure8Path::new(1.0, 4.0).unwrap();
        let rows = figure8_laps(
            &path,
            &HeadingController::default(),
            &UnicycleTracker::default(),
            &[2.0, 1.0, 1.5],
        )
        .unwrap();
        let vx: Vec<f64> = rows.iter().map(|(r, _)| r.vx).collect();
        assert_eq!(vx, [2.0, 1.0, 1.5]);
    }
}
