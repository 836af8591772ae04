use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use num_traits::Euclid;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::sim::freefall::wrap_angle;
use crate::{Error, Result};

/// Path-tracking report columns, in order.
pub const FIGURE8_COLUMNS: [&str; 4] = [
    "v_x (m/s)",
    "Total Time (s)",
    "Average Path Tracking Error (m)",
    "Average Velocity Tracking Error (m/s)",
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Line {
        start: Vector2<f64>,
        dir: Vector2<f64>,
        len: f64,
    },
    /// `sign` is +1 for counter-clockwise travel.
    Arc {
        center: Vector2<f64>,
        radius: f64,
        start_angle: f64,
        sign: f64,
        len: f64,
    },
}

impl Segment {
    fn len(&self) -> f64 {
        match *self {
            Segment::Line { len, .. } | Segment::Arc { len, .. } => len,
        }
    }

    fn point(&self, u: f64) -> PathPoint {
        match *self {
            Segment::Line { start, dir, .. } => {
                let p = start + dir * u;
                PathPoint {
                    x: p.x,
                    y: p.y,
                    heading: dir.y.atan2(dir.x),
                    curvature: 0.0,
                }
            }
            Segment::Arc {
                center,
                radius,
                start_angle,
                sign,
                ..
            } => {
                let th = start_angle + sign * u / radius;
                let (s, c) = th.sin_cos();
                PathPoint {
                    x: center.x + radius * c,
                    y: center.y + radius * s,
                    heading: wrap_angle(th + sign * PI / 2.0),
                    curvature: sign / radius,
                }
            }
        }
    }

    /// Closest point on the segment: `(arc length along it, distance)`.
    fn project(&self, p: Vector2<f64>) -> (f64, f64) {
        match *self {
            Segment::Line { start, dir, len } => {
                let d = p - start;
                let u = d.dot(&dir).clamp(0.0, len);
                if u > 0.0 && u < len {
                    (u, (d.x * dir.y - d.y * dir.x).abs())
                } else {
                    (u, (d - dir * u).norm())
                }
            }
            Segment::Arc {
                center,
                radius,
                start_angle,
                sign,
                len,
            } => {
                let d = p - center;
                let sweep = len / radius;
                let rel = Euclid::rem_euclid(&(sign * (d.y.atan2(d.x) - start_angle)), &TAU);
                if rel <= sweep {
                    (rel * radius, (d.norm() - radius).abs())
                } else {
                    let a = self.point(0.0);
                    let b = self.point(len);
                    let da = (p - Vector2::new(a.x, a.y)).norm();
                    let db = (p - Vector2::new(b.x, b.y)).norm();
                    if da <= db {
                        (0.0, da)
                    } else {
                        (len, db)
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    /// Tangent heading, rad.
    pub heading: f64,
    /// Signed curvature, 1/m (positive turning left).
    pub curvature: f64,
}

/// Two circles of radius `R` joined by straight segments of length `L` that
/// are internal tangents to both circles and cross at the figure's centre.
///
/// Arc length starts at the crossing, heading up the first straight toward
/// the right-hand circle, which is run clockwise; the left circle is run
/// counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure8Path {
    radius: f64,
    straight: f64,
    origin: Vector2<f64>,
    segments: [Segment; 5],
    starts: [f64; 5],
    total: f64,
}

impl Figure8Path {
    pub fn new(radius: f64, straight_length: f64) -> Result<Self> {
        Self::with_origin(radius, straight_length, 0.0, 0.0)
    }

    /// Same path with its crossing point at `(x0, y0)`.
    pub fn with_origin(radius: f64, straight_length: f64, x0: f64, y0: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::arg("figure-8 radius must be positive"));
        }
        if !(straight_length > 2.0 * radius) || !straight_length.is_finite() {
            return Err(Error::arg(
                "figure-8 straight length must exceed twice the radius",
            ));
        }
        let (r, l) = (radius, straight_length);
        let o = Vector2::new(x0, y0);
        let c = (0.25 * l * l + r * r).sqrt();
        let beta = (r / c).asin();
        let (sb, cb) = beta.sin_cos();
        let arc = r * (PI + 2.0 * beta);
        let up = Vector2::new(cb, sb);
        let back = Vector2::new(-cb, sb);
        let segments = [
            Segment::Line {
                start: o,
                dir: up,
                len: 0.5 * l,
            },
            Segment::Arc {
                center: o + Vector2::new(c, 0.0),
                radius: r,
                start_angle: PI / 2.0 + beta,
                sign: -1.0,
                len: arc,
            },
            Segment::Line {
                start: o - back * (0.5 * l),
                dir: back,
                len: l,
            },
            Segment::Arc {
                center: o - Vector2::new(c, 0.0),
                radius: r,
                start_angle: PI / 2.0 - beta,
                sign: 1.0,
                len: arc,
            },
            Segment::Line {
                start: o - up * (0.5 * l),
                dir: up,
                len: 0.5 * l,
            },
        ];
        let mut starts = [0.0; 5];
        let mut acc = 0.0;
        for (st, seg) in starts.iter_mut().zip(&segments) {
            *st = acc;
            acc += seg.len();
        }
        Ok(Figure8Path {
            radius,
            straight: straight_length,
            origin: o,
            segments,
            starts,
            total: acc,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn straight_length(&self) -> f64 {
        self.straight
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin.x, self.origin.y)
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    /// Pose on the path at arc length `s` (taken modulo the total length).
    pub fn point_at(&self, s: f64) -> PathPoint {
        let s = Euclid::rem_euclid(&s, &self.total);
        let i = self.starts.iter().rposition(|&st| st <= s).unwrap_or(0);
        let seg = &self.segments[i];
        seg.point((s - self.starts[i]).min(seg.len()))
    }

    /// Closest path point as `(arc length, distance)`. With a hint, only
    /// points within `window` arc length of it are considered (when any
    /// segment offers one), which keeps the two straights apart at the
    /// crossing.
    pub fn nearest(&self, x: f64, y: f64, hint: Option<(f64, f64)>) -> (f64, f64) {
        let p = Vector2::new(x, y);
        let mut global = (0.0, f64::INFINITY);
        let mut local: Option<(f64, f64)> = None;
        for (seg, &st) in self.segments.iter().zip(&self.starts) {
            let (u, d) = seg.project(p);
            let s = Euclid::rem_euclid(&(st + u), &self.total);
            if d < global.1 {
                global = (s, d);
            }
            if let Some((h, window)) = hint {
                if self.arc_gap(s, h).abs() <= window && local.is_none_or(|(_, ld)| d < ld) {
                    local = Some((s, d));
                }
            }
        }
        local.unwrap_or(global)
    }

    /// Like [`Figure8Path::nearest`] without a hint, but among the segments
    /// within `slack` of the closest one, picks the one whose tangent best
    /// matches `heading`. Resolves which straight a pose near the crossing
    /// is on.
    pub fn nearest_aligned(&self, x: f64, y: f64, heading: f64, slack: f64) -> (f64, f64) {
        let p = Vector2::new(x, y);
        let proj: Vec<(f64, f64)> = self
            .segments
            .iter()
            .zip(&self.starts)
            .map(|(seg, &st)| {
                let (u, d) = seg.project(p);
                (Euclid::rem_euclid(&(st + u), &self.total), d)
            })
            .collect();
        let d_min = proj.iter().map(|&(_, d)| d).fold(f64::INFINITY, f64::min);
        let mut best = (0.0, f64::INFINITY);
        let mut best_err = f64::INFINITY;
        for &(s, d) in proj.iter().filter(|&&(_, d)| d <= d_min + slack) {
            let err = wrap_angle(heading - self.point_at(s).heading).abs();
            if err < best_err {
                best = (s, d);
                best_err = err;
            }
        }
        best
    }

    /// Signed arc-length difference `to - from` folded into half a lap.
    pub fn arc_gap(&self, to: f64, from: f64) -> f64 {
        let half = 0.5 * self.total;
        Euclid::rem_euclid(&(to - from + half), &self.total) - half
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    /// Yaw, rad.
    pub heading: f64,
}

/// Proportional steering toward a point `lookahead` metres ahead of the
/// nearest path point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadingController {
    /// m
    pub lookahead: f64,
    /// 1/s
    pub kp: f64,
    /// Output clamp, rad/s.
    pub max_yaw_rate: f64,
}

impl Default for HeadingController {
    fn default() -> Self {
        HeadingController {
            lookahead: 0.3,
            kp: 4.0,
            max_yaw_rate: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringCommand {
    /// rad/s
    pub yaw_rate: f64,
    /// Wrapped to (-pi, pi].
    pub heading_error: f64,
    /// Arc length of the nearest path point.
    pub nearest_s: f64,
}

impl HeadingController {
    pub fn validate(&self) -> Result<()> {
        if !(self.kp > 0.0) || !(self.lookahead >= 0.0) || !(self.max_yaw_rate > 0.0) {
            return Err(Error::validation(
                "eval.controller",
                "kp and max_yaw_rate must be positive, lookahead non-negative",
            ));
        }
        Ok(())
    }

    pub fn command(
        &self,
        pose: &Pose2,
        path: &Figure8Path,
        hint: Option<(f64, f64)>,
    ) -> SteeringCommand {
        let (s, _) = path.nearest(pose.x, pose.y, hint);
        let target = path.point_at(s + self.lookahead);
        let (dx, dy) = (target.x - pose.x, target.y - pose.y);
        let desired = if dx == 0.0 && dy == 0.0 {
            target.heading
        } else {
            dy.atan2(dx)
        };
        let error = wrap_angle(desired - pose.heading);
        SteeringCommand {
            yaw_rate: (self.kp * error).clamp(-self.max_yaw_rate, self.max_yaw_rate),
            heading_error: error,
            nearest_s: s,
        }
    }
}

/// Yaw-rate command for `pose` from the nearest point on the whole path.
pub fn heading_p_controller(
    pose: &Pose2,
    path: &Figure8Path,
    controller: &HeadingController,
) -> f64 {
    controller.command(pose, path, None).yaw_rate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Body-frame forward speed, m/s.
    pub forward_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    /// Lap duration, s.
    pub total_time: f64,
    /// Mean distance to the tracked path point, m.
    pub avg_path_error: f64,
    /// Mean `|forward speed - vx_cmd|`, m/s.
    pub avg_velocity_error: f64,
}

/// Arc-length window for following progress along the path between samples.
fn tracking_window(path: &Figure8Path) -> f64 {
    0.25 * path.total_length()
}

/// Lap metrics for a logged trajectory. The lap starts at the first sample;
/// progress is the unwrapped arc length of the tracked nearest point, and the
/// lap ends where it first reaches one path length (interpolated between
/// samples). Errors are averaged over the samples inside the lap.
pub fn path_metrics(
    traj: &[TrajectorySample],
    path: &Figure8Path,
    vx_cmd: f64,
) -> Result<PathMetrics> {
    if traj.len() < 2 {
        return Err(Error::analysis("trajectory needs at least two samples"));
    }
    let window = tracking_window(path);
    let total = path.total_length();
    let (mut s_prev, d0) = path.nearest_aligned(traj[0].x, traj[0].y, traj[0].heading, 0.5);
    let mut progress = 0.0;
    let mut path_err = d0;
    let mut vel_err = (traj[0].forward_speed - vx_cmd).abs();
    let mut count = 1usize;
    for w in traj.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (s, d) = path.nearest(b.x, b.y, Some((s_prev, window)));
        let next = progress + path.arc_gap(s, s_prev);
        if next >= total {
            let f = (total - progress) / (next - progress);
            let lap_end = a.t + f * (b.t - a.t);
            if next == total {
                path_err += d;
                vel_err += (b.forward_speed - vx_cmd).abs();
                count += 1;
            }
            return Ok(PathMetrics {
                total_time: lap_end - traj[0].t,
                avg_path_error: path_err / count as f64,
                avg_velocity_error: vel_err / count as f64,
            });
        }
        progress = next;
        s_prev = s;
        path_err += d;
        vel_err += (b.forward_speed - vx_cmd).abs();
        count += 1;
    }
    Err(Error::analysis(alloc::format!(
        "trajectory covers {:.3} m of a {:.3} m lap",
        progress,
        total
    )))
}

/// Kinematic stand-in for a velocity-tracking policy: a unicycle at constant
/// forward speed whose yaw rate follows the command with a first-order lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnicycleTracker {
    pub dt: f64,
    /// Yaw-rate response time constant, s.
    pub yaw_rate_tau: f64,
    /// Stop after this many laps' worth of nominal time, as a safety bound.
    pub max_laps: f64,
}

impl Default for UnicycleTracker {
    fn default() -> Self {
        UnicycleTracker {
            dt: 0.02,
            yaw_rate_tau: 0.1,
            max_laps: 3.0,
        }
    }
}

impl UnicycleTracker {
    /// Flying start at the crossing, aligned with the path, at `vx_cmd`.
    /// Samples until one lap of progress is complete.
    pub fn run_lap(
        &self,
        path: &Figure8Path,
        controller: &HeadingController,
        vx_cmd: f64,
    ) -> Result<Vec<TrajectorySample>> {
        controller.validate()?;
        if !(vx_cmd > 0.0) || !(self.dt > 0.0) || !(self.yaw_rate_tau >= 0.0) {
            return Err(Error::arg(
                "vx_cmd and dt must be positive, yaw_rate_tau non-negative",
            ));
        }
        let start = path.point_at(0.0);
        let mut pose = Pose2 {
            x: start.x,
            y: start.y,
            heading: start.heading,
        };
        let mut wz = 0.0;
        let mut t = 0.0;
        let mut hint = (0.0, tracking_window(path));
        let mut progress = 0.0;
        let max_t = self.max_laps * path.total_length() / vx_cmd;
        let mut out = Vec::new();
        loop {
            out.push(TrajectorySample {
                t,
                x: pose.x,
                y: pose.y,
                heading: pose.heading,
                forward_speed: vx_cmd,
            });
            if progress > path.total_length() {
                return Ok(out);
            }
            if t > max_t {
                return Err(Error::analysis("tracker did not complete a lap"));
            }
            let cmd = controller.command(&pose, path, Some(hint));
            progress += path.arc_gap(cmd.nearest_s, hint.0);
            hint.0 = cmd.nearest_s;
            let alpha = if self.yaw_rate_tau > 0.0 {
                (self.dt / self.yaw_rate_tau).min(1.0)
            } else {
                1.0
            };
            wz += alpha * (cmd.yaw_rate - wz);
            pose.heading = wrap_angle(pose.heading + wz * self.dt);
            pose.x += vx_cmd * pose.heading.cos() * self.dt;
            pose.y += vx_cmd * pose.heading.sin() * self.dt;
            t += self.dt;
        }
    }
}

/// One row of the path-tracking report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure8Row {
    pub vx: f64,
    pub metrics: PathMetrics,
}

impl Figure8Row {
    /// Values in [`FIGURE8_COLUMNS`] order.
    pub fn values(&self) -> [f64; 4] {
        [
            self.vx,
            self.metrics.total_time,
            self.metrics.avg_path_error,
            self.metrics.avg_velocity_error,
        ]
    }
}
