//! Plot-ready logs: contact logs, gait diagrams, trajectories, training and
//! curriculum progress.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;
use spinelab_core::gait::{
    gait_intervals, timeline_from_intervals, ContactTimeline, Interval, IntervalKind,
};
use spinelab_core::model::{Command, Foot, RobotState, JOINT_NAMES, NUM_FEET};
use spinelab_core::policy::IterationLog;
use spinelab_core::reward::RewardBreakdown;

use crate::error::{LabError, Result};
use crate::table::{num, opt_num, read_records, OutputFormat, Table};

pub const CONTACT_LOG_HEADER: [&str; 5] = ["t", "LF", "RF", "LH", "RH"];

pub fn contact_log_table(tl: &ContactTimeline) -> Table {
    let mut t = Table::new(CONTACT_LOG_HEADER);
    for (i, row) in tl.contacts().iter().enumerate() {
        let mut cells = vec![num(i as f64 * tl.dt())];
        cells.extend(row.iter().map(|&c| json!(u8::from(c))));
        t.push(cells);
    }
    t
}

/// Contact log as CSV: header `t,LF,RF,LH,RH`, flags as 0/1.
pub fn write_contact_log<W: Write>(tl: &ContactTimeline, w: W) -> csv::Result<()> {
    contact_log_table(tl).write_csv(w)
}

#[derive(Debug, Deserialize)]
#[allow(non_snake_case)]
struct ContactRecord {
    t: f64,
    LF: u8,
    RF: u8,
    LH: u8,
    RH: u8,
}

fn flag(v: u8, path: &Path, row: usize) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(LabError::format(
            path,
            format!("row {row}: contact flags must be 0 or 1"),
        )),
    }
}

/// Reads a contact log, or the contact columns of a trajectory log. Sample
/// times must be uniformly spaced.
pub fn read_contact_log(path: &Path) -> Result<ContactTimeline> {
    let records: Vec<ContactRecord> = read_records(path)?;
    if records.len() < 2 {
        return Err(LabError::format(path, "need at least two samples"));
    }
    let dt = records[1].t - records[0].t;
    let mut contacts = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let expected = records[0].t + i as f64 * dt;
        if (r.t - expected).abs() > 1e-6 * dt.abs().max(1e-12) * (i as f64 + 1.0) {
            return Err(LabError::format(
                path,
                format!("row {i}: samples are not evenly spaced"),
            ));
        }
        contacts.push([
            flag(r.LF, path, i)?,
            flag(r.RF, path, i)?,
            flag(r.LH, path, i)?,
            flag(r.RH, path, i)?,
        ]);
    }
    Ok(ContactTimeline::new(dt, contacts)?)
}

pub const GAIT_DIAGRAM_HEADER: [&str; 6] = ["kind", "foot", "start", "end", "t_start", "t_end"];

/// Per-foot stance intervals and aerial windows. Sample ranges are half-open.
pub fn gait_diagram_table(tl: &ContactTimeline) -> Table {
    let mut t = Table::new(GAIT_DIAGRAM_HEADER);
    for iv in gait_intervals(tl) {
        let (kind, foot) = match iv.kind {
            IntervalKind::Contact(f) => ("contact", f.name()),
            IntervalKind::Aerial => ("aerial", ""),
        };
        t.push(vec![
            json!(kind),
            json!(foot),
            json!(iv.start),
            json!(iv.end),
            num(iv.start as f64 * tl.dt()),
            num(iv.end as f64 * tl.dt()),
        ]);
    }
    t
}

pub fn emit_gait_diagram(
    tl: &ContactTimeline,
    dir: &Path,
    stem: &str,
    format: OutputFormat,
) -> Result<PathBuf> {
    gait_diagram_table(tl).write(dir, stem, format)
}

#[derive(Debug, Deserialize)]
struct IntervalRecord {
    kind: String,
    foot: String,
    start: usize,
    end: usize,
    t_end: f64,
}

/// Rebuilds the contact timeline from an emitted gait diagram. The trace
/// length is the largest interval end; `dt` comes from the end times.
pub fn read_gait_diagram(path: &Path) -> Result<ContactTimeline> {
    let records: Vec<IntervalRecord> = read_records(path)?;
    let mut intervals = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let kind = match (r.kind.as_str(), r.foot.as_str()) {
            ("aerial", _) => IntervalKind::Aerial,
            ("contact", name) => IntervalKind::Contact(
                Foot::ALL
                    .into_iter()
                    .find(|f| f.name() == name)
                    .ok_or_else(|| {
                        LabError::format(path, format!("row {i}: unknown foot `{name}`"))
                    })?,
            ),
            (other, _) => {
                return Err(LabError::format(
                    path,
                    format!("row {i}: unknown kind `{other}`"),
                ))
            }
        };
        intervals.push(Interval {
            kind,
            start: r.start,
            end: r.end,
        });
    }
    let last = records
        .iter()
        .max_by_key(|r| r.end)
        .filter(|r| r.end > 0)
        .ok_or_else(|| LabError::format(path, "no intervals"))?;
    let dt = last.t_end / last.end as f64;
    Ok(timeline_from_intervals(dt, last.end, &intervals)?)
}

/// One control step of a rollout.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub state: RobotState,
    pub cmd: Command,
    pub reward: RewardBreakdown,
}

pub fn trajectory_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "t", "cmd_vx", "cmd_wz", "base_x", "base_y", "base_z", "roll", "pitch", "yaw", "v_x",
        "v_y", "v_z", "w_x", "w_y", "w_z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(JOINT_NAMES.iter().map(|n| format!("q_{n}")));
    cols.extend(Foot::ALL.iter().map(|f| f.name().to_string()));
    cols.extend(RewardBreakdown::TERM_NAMES.iter().map(|n| format!("r_{n}")));
    cols.push("reward_total".into());
    cols
}

/// Trajectory log: time, command, base pose and twist (base frame), joint
/// angles, contacts, reward breakdown.
pub fn trajectory_table(records: &[TrajectoryRecord]) -> Table {
    let mut t = Table::new(trajectory_columns());
    for r in records {
        let s = &r.state;
        let mut row = vec![num(s.t), num(r.cmd.vx), num(r.cmd.wz)];
        row.extend(s.base_position.iter().map(|&v| num(v)));
        row.extend(s.base_euler().iter().map(|&v| num(v)));
        row.extend(s.base_linear_velocity.iter().map(|&v| num(v)));
        row.extend(s.base_angular_velocity.iter().map(|&v| num(v)));
        row.extend(s.q.iter().map(|&v| num(v)));
        row.extend(s.foot_contact.iter().map(|&c| json!(u8::from(c))));
        row.extend(r.reward.terms().iter().map(|&v| num(v)));
        row.push(num(r.reward.total));
        t.push(row);
    }
    t
}

/// Contact timeline of a logged trajectory.
pub fn trajectory_contacts(records: &[TrajectoryRecord], dt: f64) -> Result<ContactTimeline> {
    let contacts: Vec<[bool; NUM_FEET]> = records.iter().map(|r| r.state.foot_contact).collect();
    Ok(ContactTimeline::new(dt, contacts)?)
}

pub fn training_log_table(log: &[IterationLog]) -> Table {
    let mut cols: Vec<String> = [
        "iteration",
        "samples",
        "episodes",
        "mean_reward",
        "mean_episode_return",
        "mean_linear_tracking",
        "mean_angular_tracking",
        "linear_fraction",
        "angular_fraction",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(RewardBreakdown::TERM_NAMES.iter().map(|n| format!("r_{n}")));
    cols.extend(
        [
            "reward_total",
            "policy_loss",
            "value_loss",
            "entropy",
            "approx_kl",
            "clip_fraction",
            "mean_action_std",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut t = Table::new(cols);
    for r in log {
        let mut row = vec![
            json!(r.iteration),
            json!(r.samples),
            json!(r.episodes),
            num(r.mean_reward),
            opt_num(r.mean_episode_return),
            num(r.mean_linear_tracking),
            opt_num(r.mean_angular_tracking),
            num(r.curriculum.linear_fraction),
            num(r.curriculum.angular_fraction),
        ];
        row.extend(r.reward.terms().iter().map(|&v| num(v)));
        row.extend(
            [
                r.reward.total,
                r.loss.policy_loss,
                r.loss.value_loss,
                r.loss.entropy,
                r.loss.approx_kl,
                r.loss.clip_fraction,
                r.mean_action_std,
            ]
            .map(num),
        );
        t.push(row);
    }
    t
}

/// Curriculum progression: iteration, both fractions and the metrics that
/// drove the update.
pub fn curriculum_log_table(log: &[IterationLog]) -> Table {
    let mut t = Table::new([
        "iteration",
        "linear_fraction",
        "angular_fraction",
        "mean_linear_tracking",
        "mean_angular_tracking",
    ]);
    for r in log {
        t.push(vec![
            json!(r.iteration),
            num(r.curriculum.linear_fraction),
            num(r.curriculum.angular_fraction),
            num(r.mean_linear_tracking),
            opt_num(r.mean_angular_tracking),
        ]);
    }
    t
}
