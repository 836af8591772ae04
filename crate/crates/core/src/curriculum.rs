//! Velocity-command generation: an acceleration-limited ramp toward sampled
//! targets, and an adaptive range curriculum that widens the sampled ranges
//! once the policy tracks the current ones well enough.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Command;

/// Fractions this close to 1 are snapped to exactly 1 so repeated `+= delta`
/// in floating point still terminates at the full range.
const FRACTION_SNAP: f64 = 1e-9;

/// One step of the acceleration-limited ramp:
/// `current + clamp(target - current, -a_max*dt, a_max*dt)`.
///
/// Returns `target` exactly whenever it is reachable within the step.
pub fn ramp_command(current: f64, target: f64, a_max: f64, dt: f64) -> Result<f64> {
    if !(a_max > 0.0) || !(dt > 0.0) {
        return Err(Error::arg(alloc::format!(
            "ramp requires a_max > 0 and dt > 0 (got a_max = {a_max}, dt = {dt})"
        )));
    }
    let max_step = a_max * dt;
    let error = target - current;
    if error.abs() <= max_step {
        Ok(target)
    } else {
        Ok(current + error.clamp(-max_step, max_step))
    }
}

impl Command {
    /// Advance the ramped values by one control step starting at episode time
    /// `t`. The yaw-rate channel stays at zero until `wz_activation_time`.
    pub fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        self.vx = ramp_command(self.vx, self.vx_target, self.a_max_linear, dt)?;
        self.vy = ramp_command(self.vy, self.vy_target, self.a_max_linear, dt)?;
        if t >= self.wz_activation_time {
            self.wz = ramp_command(self.wz, self.wz_target, self.a_max_angular, dt)?;
        } else {
            self.wz = 0.0;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandTask {
    Locomotion,
    /// Yaw-rate command starts after a random delay.
    Turning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    /// Starting fraction of the full ranges.
    pub initial_fraction: f64,
    /// (min, max) forward speed, m/s.
    pub full_linear_range: (f64, f64),
    /// (min, max) yaw rate, rad/s.
    pub full_angular_range: (f64, f64),
    /// Normalized tracking needed before the linear range grows.
    pub linear_threshold: f64,
    pub angular_threshold: f64,
    /// Growth per successful update, as a fraction of the full range.
    pub delta: f64,
    /// (min, max) linear acceleration limit, m/s².
    pub a_max_linear_range: (f64, f64),
    /// (min, max) angular acceleration limit, rad/s².
    pub a_max_angular_range: (f64, f64),
    /// (min, max) delay before a turning command activates, s.
    pub turning_delay_window: (f64, f64),
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            initial_fraction: 0.1,
            full_linear_range: (0.0, 7.0),
            full_angular_range: (-8.0, 8.0),
            linear_threshold: 0.8,
            angular_threshold: 0.6,
            delta: 0.1,
            a_max_linear_range: (1.0, 6.0),
            a_max_angular_range: (2.0, 10.0),
            turning_delay_window: (0.5, 2.0),
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.initial_fraction > 0.0 && self.initial_fraction <= 1.0) {
            return Err(Error::validation(
                "curriculum.initial_fraction",
                "must be in (0, 1]",
            ));
        }
        if !in_unit(self.linear_threshold) {
            return Err(Error::validation(
                "curriculum.linear_threshold",
                "must be in [0, 1]",
            ));
        }
        if !in_unit(self.angular_threshold) {
            return Err(Error::validation(
                "curriculum.angular_threshold",
                "must be in [0, 1]",
            ));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::validation("curriculum.delta", "must be in (0, 1]"));
        }
        for (field, (lo, hi)) in [
            ("curriculum.full_linear_range", self.full_linear_range),
            ("curriculum.full_angular_range", self.full_angular_range),
            ("curriculum.turning_delay_window", self.turning_delay_window),
        ] {
            if !(lo <= hi) {
                return Err(Error::validation(field, "min must not exceed max"));
            }
        }
        for (field, (lo, hi)) in [
            ("curriculum.a_max_linear_range", self.a_max_linear_range),
            ("curriculum.a_max_angular_range", self.a_max_angular_range),
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::validation(field, "must satisfy 0 < min <= max"));
            }
        }
        if self.turning_delay_window.0 < 0.0 {
            return Err(Error::validation(
                "curriculum.turning_delay_window",
                "delay must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Current position in the command curriculum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub config: CurriculumConfig,
    pub linear_fraction: f64,
    pub angular_fraction: f64,
}

impl CurriculumState {
    pub fn new(config: CurriculumConfig) -> Result<Self> {
        config.validate()?;
        Ok(CurriculumState {
            config,
            linear_fraction: config.initial_fraction,
            angular_fraction: config.initial_fraction,
        })
    }

    /// Sampling range for forward speed at the current fraction.
    pub fn linear_range(&self) -> (f64, f64) {
        let (lo, hi) = self.config.full_linear_range;
        (lo * self.linear_fraction, hi * self.linear_fraction)
    }

    pub fn angular_range(&self) -> (f64, f64) {
        let (lo, hi) = self.config.full_angular_range;
        (lo * self.angular_fraction, hi * self.angular_fraction)
    }

    /// Draw a fresh command for an episode starting at `episode_start`.
    /// Ramped values start at zero.
    pub fn sample_command<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        task: CommandTask,
        episode_start: f64,
    ) -> Command {
        let vx_target = uniform(rng, self.linear_range());
        let wz_target = uniform(rng, self.angular_range());
        let a_max_linear = uniform(rng, self.config.a_max_linear_range);
        let a_max_angular = uniform(rng, self.config.a_max_angular_range);
        let wz_activation_time = match task {
            CommandTask::Locomotion => episode_start,
            CommandTask::Turning => episode_start + uniform(rng, self.config.turning_delay_window),
        };
        Command {
            vx_target,
            vy_target: 0.0,
            wz_target,
            vx: 0.0,
            vy: 0.0,
            wz: 0.0,
            a_max_linear,
            a_max_angular,
            wz_activation_time,
        }
    }

    /// Per-iteration progression. Metrics are mean episodic tracking rewards
    /// normalized by their maximum attainable value. The two channels advance
    /// independently.
    pub fn update(&self, mean_linear_tracking: f64, mean_angular_tracking: f64) -> Result<Self> {
        for (name, v) in [
            ("linear", mean_linear_tracking),
            ("angular", mean_angular_tracking),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::arg(alloc::format!(
                    "{name} tracking metric {v} outside [0, 1]"
                )));
            }
        }
        let mut next = *self;
        if mean_linear_tracking > self.config.linear_threshold {
            next.linear_fraction = grow(self.linear_fraction, self.config.delta);
        }
        if mean_angular_tracking > self.config.angular_threshold {
            next.angular_fraction = grow(self.angular_fraction, self.config.delta);
        }
        Ok(next)
    }

    /// Combine the states of independent workers by taking the element-wise
    /// maximum fraction.
    pub fn merge(&self, other: &CurriculumState) -> CurriculumState {
        CurriculumState {
            config: self.config,
            linear_fraction: self.linear_fraction.max(other.linear_fraction),
            angular_fraction: self.angular_fraction.max(other.angular_fraction),
        }
    }
}

fn grow(fraction: f64, delta: f64) -> f64 {
    let next = (fraction + delta).min(1.0);
    if 1.0 - next < FRACTION_SNAP {
        1.0
    } else {
        next
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ramp_examples() {
        assert!((ramp_command(0.0, 5.0, 2.0, 0.02).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(ramp_command(1.0, 1.0, 2.0, 0.02).unwrap(), 1.0);
        assert_eq!(ramp_command(0.99, 1.0, 2.0, 0.02).unwrap(), 1.0);
        assert!((ramp_command(0.0, -5.0, 2.0, 0.02).unwrap() + 0.04).abs() < 1e-15);
    }

    #[test]
    fn ramp_rejects_bad_arguments() {
        assert!(matches!(
            ramp_command(0.0, 1.0, 0.0, 0.02),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            ramp_command(0.0, 1.0, 1.0, -0.02),
            Err(Error::InvalidArgument(_))
        ));
        assert!(ramp_command(0.0, 1.0, f64::NAN, 0.02).is_err());
    }

    #[test]
    fn initial_fraction_scales_linear_range() {
        let state = CurriculumState::new(CurriculumConfig::default()).unwrap();
        let (lo, hi) = state.linear_range();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.7).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let cmd = state.sample_command(&mut rng, CommandTask::Locomotion, 0.0);
            assert!((0.0..=0.7 + 1e-12).contains(&cmd.vx_target));
            assert!(cmd.wz_target.abs() <= 0.8 + 1e-12);
            assert!((1.0..=6.0).contains(&cmd.a_max_linear));
            assert!((2.0..=10.0).contains(&cmd.a_max_angular));
            assert_eq!(cmd.vx, 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_for_a_seed() {
        let state = CurriculumState::new(CurriculumConfig::default()).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| state.sample_command(&mut rng, CommandTask::Turning, 0.0))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn turning_command_is_held_until_activation() {
        let config = CurriculumConfig {
            turning_delay_window: (1.0, 2.0),
            ..CurriculumConfig::default()
        };
        let state = CurriculumState {
            angular_fraction: 1.0,
            ..CurriculumState::new(config).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cmd = state.sample_command(&mut rng, CommandTask::Turning, 0.0);
        cmd.wz_target = 3.0;
        let activation = cmd.wz_activation_time;
        assert!((1.0..=2.0).contains(&activation));
        let dt = 0.02;
        let mut t = 0.0;
        let mut seen_ramp = false;
        for _ in 0..200 {
            let before = cmd.wz;
            cmd.advance(t, dt).unwrap();
            if t < activation {
                assert_eq!(cmd.wz, 0.0, "yaw rate moved before activation at t = {t}");
            } else {
                assert!((cmd.wz - before).abs() <= cmd.a_max_angular * dt + 1e-12);
                seen_ramp |= cmd.wz > 0.0;
            }
            t += dt;
        }
        assert!(seen_ramp);
    }

    #[test]
    fn update_examples() {
        let state = CurriculumState::new(CurriculumConfig::default()).unwrap();
        let next = state.update(0.85, 0.3).unwrap();
        assert_eq!(next.linear_fraction, 0.2);
        assert_eq!(next.angular_fraction, 0.1);

        let full = CurriculumState {
            linear_fraction: 1.0,
            angular_fraction: 1.0,
            ..state
        };
        let next = full.update(0.99, 0.99).unwrap();
        assert_eq!(next.linear_fraction, 1.0);
        assert_eq!(next.angular_fraction, 1.0);

        let half = CurriculumState {
            linear_fraction: 0.5,
            ..state
        };
        assert_eq!(half.update(0.75, 0.0).unwrap().linear_fraction, 0.5);
        // threshold is strict
        assert_eq!(half.update(0.8, 0.0).unwrap().linear_fraction, 0.5);
    }

    #[test]
    fn update_rejects_out_of_range_metrics() {
        let state = CurriculumState::new(CurriculumConfig::default()).unwrap();
        assert!(state.update(1.2, 0.0).is_err());
        assert!(state.update(0.5, -0.1).is_err());
        assert!(state.update(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn nine_updates_reach_full_range() {
        let mut state = CurriculumState::new(CurriculumConfig::default()).unwrap();
        for _ in 0..9 {
            state = state.update(1.0, 1.0).unwrap();
        }
        assert_eq!(state.linear_fraction, 1.0);
        assert_eq!(state.angular_fraction, 1.0);
    }

    #[test]
    fn merge_takes_elementwise_max() {
        let a = CurriculumState::new(CurriculumConfig::default()).unwrap();
        let b = CurriculumState {
            linear_fraction: 0.4,
            ..a
        };
        let c = CurriculumState {
            angular_fraction: 0.7,
            ..a
        };
        let m = b.merge(&c);
        assert_eq!((m.linear_fraction, m.angular_fraction), (0.4, 0.7));
    }

    proptest! {
        #[test]
        fn ramp_converges_within_bound(
            start in -10.0f64..10.0,
            target in -10.0f64..10.0,
            a_max in 0.1f64..10.0,
            dt in 0.001f64..0.1,
        ) {
            let bound = ((target - start).abs() / (a_max * dt)).ceil() as usize;
            let mut v = start;
            let mut steps = 0;
            while v != target {
                let next = ramp_command(v, target, a_max, dt).unwrap();
                prop_assert!((next - v).abs() <= a_max * dt * (1.0 + 1e-12));
                v = next;
                steps += 1;
                prop_assert!(steps <= bound, "took {} steps, bound {}", steps, bound);
            }
            prop_assert_eq!(ramp_command(v, target, a_max, dt).unwrap(), target);
        }

        #[test]
        fn fractions_never_decrease(metrics in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..60)) {
            let mut state = CurriculumState::new(CurriculumConfig::default()).unwrap();
            for (lin, ang) in metrics {
                let next = state.update(lin, ang).unwrap();
                prop_assert!(next.linear_fraction >= state.linear_fraction);
                prop_assert!(next.angular_fraction >= state.angular_fraction);
                prop_assert!(next.linear_fraction <= 1.0 && next.angular_fraction <= 1.0);
                state = next;
            }
        }
    }
}
