//! Footfall analysis: touchdowns, stride period, phase offsets, aerial phases
//! and gallop classification from boolean contact timelines.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_traits::Euclid;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::model::{Foot, NUM_FEET};
use crate::reward::phase_distance;
use crate::{Error, Result};

/// Per-foot contact flags sampled at a fixed interval, columns LF, RF, LH, RH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactTimeline {
    dt: f64,
    contacts: Vec<[bool; NUM_FEET]>,
}

impl ContactTimeline {
    pub fn new(dt: f64, contacts: Vec<[bool; NUM_FEET]>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::validation(
                "dt",
                format!("must be positive, got {dt}"),
            ));
        }
        if contacts.len() < 2 {
            return Err(Error::validation(
                "contacts",
                format!("need at least 2 samples, got {}", contacts.len()),
            ));
        }
        Ok(Self { dt, contacts })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn contacts(&self) -> &[[bool; NUM_FEET]] {
        &self.contacts
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.contacts.len() as f64 * self.dt
    }

    pub fn column(&self, foot: Foot) -> impl Iterator<Item = bool> + '_ {
        let i = foot.index();
        self.contacts.iter().map(move |row| row[i])
    }

    /// Cyclic shift: sample `i` of the result is sample `i + k` of `self`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut contacts = self.contacts.clone();
        let n = contacts.len();
        contacts.rotate_left(k % n);
        Self {
            dt: self.dt,
            contacts,
        }
    }

    /// Resample at `factor`× the rate by repeating every sample.
    pub fn upsampled(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let contacts = self
            .contacts
            .iter()
            .flat_map(|row| core::iter::repeat_n(*row, factor))
            .collect();
        Self {
            dt: self.dt / factor as f64,
            contacts,
        }
    }

    /// Swap left and right columns.
    pub fn mirrored(&self) -> Self {
        let contacts = self
            .contacts
            .iter()
            .map(|row| {
                let mut out = [false; NUM_FEET];
                for foot in Foot::ALL {
                    out[foot.mirrored().index()] = row[foot.index()];
                }
                out
            })
            .collect();
        Self {
            dt: self.dt,
            contacts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitConfig {
    /// Minimum length of a no-contact run, in seconds, for the following
    /// rising edge to count as a touchdown. Also the minimum flight length.
    pub debounce_time: f64,
    /// Offsets closer than this to 0 (in cycle fractions) count as synchronous.
    pub sync_tolerance: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            debounce_time: 0.06,
            sync_tolerance: 0.05,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.debounce_time >= 0.0) {
            return Err(Error::validation(
                "gait.debounce_time",
                "must be non-negative",
            ));
        }
        if !(self.sync_tolerance > 0.0 && self.sync_tolerance < 0.25) {
            return Err(Error::validation(
                "gait.sync_tolerance",
                "must lie in (0, 0.25)",
            ));
        }
        Ok(())
    }

    /// Debounce window expressed in samples for a given sample interval.
    pub fn debounce_samples(&self, dt: f64) -> usize {
        let n = self.debounce_time / dt;
        // tolerate representation error so 0.06 / 0.02 gives 3, not 2
        ((n - 1e-9).ceil() as usize).max(1)
    }
}

pub type FootEvents = [Vec<f64>; NUM_FEET];

pub fn detect_touchdowns(tl: &ContactTimeline, cfg: &GaitConfig) -> FootEvents {
    let debounce = cfg.debounce_samples(tl.dt);
    let mut events: FootEvents = Default::default();
    for foot in Foot::ALL {
        let f = foot.index();
        let mut false_run = 0usize;
        for (i, row) in tl.contacts.iter().enumerate() {
            if row[f] {
                if i > 0 && false_run >= debounce {
                    events[f].push(i as f64 * tl.dt);
                }
                false_run = 0;
            } else {
                false_run += 1;
            }
        }
    }
    events
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn estimate_stride_period(events: &FootEvents) -> Result<f64> {
    if !events.iter().any(|e| e.len() >= 3) {
        return Err(Error::analysis(
            "stride period needs at least 3 touchdowns on one foot",
        ));
    }
    let mut intervals: Vec<f64> = events
        .iter()
        .flat_map(|e| e.windows(2).map(|w| w[1] - w[0]))
        .collect();
    Ok(median(&mut intervals))
}

fn circular_mean(fractions: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = fractions.fold((0.0, 0.0), |(s, c), x| {
        let a = TAU * x;
        (s + a.sin(), c + a.cos())
    });
    let m = Euclid::rem_euclid(&(s.atan2(c) / TAU), &1.0);
    if m >= 1.0 - 1e-12 {
        0.0
    } else {
        m
    }
}

/// Circular mean of `(t_trail - t_lead) / period mod 1` over lead touchdowns,
/// pairing each with its nearest trail touchdown.
pub fn pair_phase_offset(lead: &[f64], trail: &[f64], period: f64) -> Result<f64> {
    if lead.is_empty() || trail.is_empty() {
        return Err(Error::analysis(
            "phase offset needs touchdowns on both feet",
        ));
    }
    if !(period > 0.0) {
        return Err(Error::arg(format!("period must be positive, got {period}")));
    }
    let offsets = lead.iter().map(|&tl| {
        let nearest = trail
            .iter()
            .copied()
            .min_by(|a, b| (a - tl).abs().total_cmp(&(b - tl).abs()))
            .unwrap_or(tl);
        Euclid::rem_euclid(&((nearest - tl) / period), &1.0)
    });
    Ok(circular_mean(offsets))
}

/// Aerial-phase subclass of a gait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AerialClass {
    G0,
    /// Single flight with the limbs gathered under the body.
    GG,
    /// Single flight with the limbs extended.
    GE,
    G2,
    #[serde(rename = "none")]
    Unclassified,
}

impl AerialClass {
    pub fn name(self) -> &'static str {
        match self {
            AerialClass::G0 => "G0",
            AerialClass::GG => "GG",
            AerialClass::GE => "GE",
            AerialClass::G2 => "G2",
            AerialClass::Unclassified => "none",
        }
    }
}

/// A maximal all-feet-off run `[start, end)` in sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AerialRun {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AerialSummary {
    /// Flights of at least the debounce length that lie fully inside the trace.
    pub runs: Vec<AerialRun>,
    pub per_cycle: f64,
    pub count: usize,
    pub class: AerialClass,
}

/// All maximal all-off runs, regardless of length.
pub fn aerial_runs(tl: &ContactTimeline) -> Vec<AerialRun> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, row) in tl.contacts.iter().enumerate() {
        let airborne = !row.iter().any(|&c| c);
        match (airborne, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(AerialRun { start: s, end: i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(AerialRun {
            start: s,
            end: tl.contacts.len(),
        });
    }
    runs
}

// Gathered suspension follows fore-limb lift-off (feet tucked under the body,
// hind feet land next); extended suspension follows hind-limb lift-off.
fn suspension_kind(tl: &ContactTimeline, run: &AerialRun) -> Option<AerialClass> {
    let before = tl.contacts.get(run.start.checked_sub(1)?)?;
    let fore = before[Foot::LF.index()] || before[Foot::RF.index()];
    let hind = before[Foot::LH.index()] || before[Foot::RH.index()];
    match (fore, hind) {
        (true, false) => Some(AerialClass::GG),
        (false, true) => Some(AerialClass::GE),
        _ => None,
    }
}

pub fn count_aerial_phases(
    tl: &ContactTimeline,
    period: f64,
    cfg: &GaitConfig,
) -> Result<AerialSummary> {
    if !(period > 0.0) {
        return Err(Error::arg(format!("period must be positive, got {period}")));
    }
    let debounce = cfg.debounce_samples(tl.dt);
    let n = tl.contacts.len();
    let runs: Vec<AerialRun> = aerial_runs(tl)
        .into_iter()
        .filter(|r| r.start > 0 && r.end < n && r.end - r.start >= debounce)
        .collect();
    let cycles = tl.duration() / period;
    let per_cycle = if cycles > 0.0 {
        runs.len() as f64 / cycles
    } else {
        0.0
    };
    let count = per_cycle.round() as usize;
    let class = match count {
        0 => AerialClass::G0,
        1 => {
            let (mut gg, mut ge) = (0usize, 0usize);
            for r in &runs {
                match suspension_kind(tl, r) {
                    Some(AerialClass::GG) => gg += 1,
                    Some(AerialClass::GE) => ge += 1,
                    _ => {}
                }
            }
            if gg > ge {
                AerialClass::GG
            } else if ge > gg {
                AerialClass::GE
            } else {
                AerialClass::Unclassified
            }
        }
        2 => AerialClass::G2,
        _ => AerialClass::Unclassified,
    };
    Ok(AerialSummary {
        runs,
        per_cycle,
        count,
        class,
    })
}

/// Fraction of samples in contact per foot, measured over the longest whole
/// number of cycles that fits in the trace (the whole trace if shorter).
pub fn duty_factors(tl: &ContactTimeline, period: f64) -> [f64; NUM_FEET] {
    let n = tl.contacts.len();
    let mut window = n;
    if period > 0.0 {
        let cycles = (tl.duration() / period + 1e-9).floor();
        if cycles >= 1.0 {
            let samples = (cycles * period / tl.dt).round() as usize;
            window = samples.clamp(1, n);
        }
    }
    let mut out = [0.0; NUM_FEET];
    for (f, slot) in out.iter_mut().enumerate() {
        let on = tl.contacts[..window].iter().filter(|row| row[f]).count();
        *slot = on as f64 / window as f64;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitFamily {
    Trot,
    Bound,
    Pace,
    TransverseGallop,
    RotaryGallop,
    Other,
}

impl GaitFamily {
    pub fn name(self) -> &'static str {
        match self {
            GaitFamily::Trot => "trot",
            GaitFamily::Bound => "bound",
            GaitFamily::Pace => "pace",
            GaitFamily::TransverseGallop => "transverse_gallop",
            GaitFamily::RotaryGallop => "rotary_gallop",
            GaitFamily::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitLabel {
    pub family: GaitFamily,
    pub aerial_class: AerialClass,
    /// Feet in touchdown order within a cycle, starting after the longest
    /// pause between consecutive touchdowns.
    pub footfall_order: [Foot; NUM_FEET],
    /// Fore-pair offset, trail relative to lead, in [0, 0.5].
    pub front_offset: f64,
    pub rear_offset: f64,
    pub front_lead: Foot,
    pub rear_lead: Foot,
    pub duty_factor: [f64; NUM_FEET],
    pub stride_period: f64,
    pub aerial_per_cycle: f64,
}

/// Offset of a left/right pair folded onto [0, 0.5], together with the foot
/// that touches down first.
fn folded_pair(events: &FootEvents, a: Foot, b: Foot, period: f64) -> Result<(f64, Foot)> {
    let d = pair_phase_offset(&events[a.index()], &events[b.index()], period)?;
    if d <= 0.5 {
        Ok((d, a))
    } else {
        Ok((1.0 - d, b))
    }
}

const ROTARY: [Foot; 4] = [Foot::LH, Foot::RH, Foot::RF, Foot::LF];
const ROTARY_MIRROR: [Foot; 4] = [Foot::RH, Foot::LH, Foot::LF, Foot::RF];
const TRANSVERSE: [Foot; 4] = [Foot::LH, Foot::RH, Foot::LF, Foot::RF];
const TRANSVERSE_MIRROR: [Foot; 4] = [Foot::RH, Foot::LH, Foot::RF, Foot::LF];

fn is_rotation(order: &[Foot; 4], pattern: &[Foot; 4]) -> bool {
    (0..4).any(|k| (0..4).all(|i| order[i] == pattern[(i + k) % 4]))
}

/// Cyclic touchdown order relative to LH, started after the largest gap
/// (a hind foot wins ties).
fn footfall_order(events: &FootEvents, period: f64) -> Result<[Foot; NUM_FEET]> {
    let mut phases = [(0.0, Foot::LH); NUM_FEET];
    for (slot, foot) in phases.iter_mut().zip(Foot::ALL) {
        let phase = if foot == Foot::LH {
            0.0
        } else {
            pair_phase_offset(&events[Foot::LH.index()], &events[foot.index()], period)?
        };
        *slot = (phase, foot);
    }
    phases.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.index().cmp(&b.1.index())));
    let mut start = 0;
    let mut widest = -1.0;
    for i in 0..NUM_FEET {
        let prev = phases[(i + NUM_FEET - 1) % NUM_FEET].0;
        let gap = Euclid::rem_euclid(&(phases[i].0 - prev), &1.0);
        let gap = if i == 0 && gap == 0.0 { 1.0 } else { gap };
        let tie =
            (gap - widest).abs() <= 1e-9 && !phases[i].1.is_fore() && phases[start].1.is_fore();
        if gap > widest + 1e-9 || tie {
            widest = gap;
            start = i;
        }
    }
    let mut order = [Foot::LH; NUM_FEET];
    for (i, slot) in order.iter_mut().enumerate() {
        *slot = phases[(start + i) % NUM_FEET].1;
    }
    Ok(order)
}

pub fn classify_gait(tl: &ContactTimeline, cfg: &GaitConfig) -> Result<GaitLabel> {
    let events = detect_touchdowns(tl, cfg);
    let period = estimate_stride_period(&events)?;
    if tl.duration() + tl.dt < 3.0 * period {
        return Err(Error::analysis(format!(
            "need at least 3 strides, trace covers {:.2}",
            tl.duration() / period
        )));
    }
    for foot in Foot::ALL {
        if events[foot.index()].is_empty() {
            return Err(Error::analysis(format!(
                "foot {} never touches down",
                foot.name()
            )));
        }
    }

    let (front_offset, front_lead) = folded_pair(&events, Foot::LF, Foot::RF, period)?;
    let (rear_offset, rear_lead) = folded_pair(&events, Foot::LH, Foot::RH, period)?;
    let offset =
        |a: Foot, b: Foot| pair_phase_offset(&events[a.index()], &events[b.index()], period);
    let sync = |x: f64| phase_distance(x, 0.0) < cfg.sync_tolerance;

    let order = footfall_order(&events, period)?;
    let family = if sync(front_offset) && sync(rear_offset) {
        if sync(offset(Foot::LH, Foot::LF)?) {
            GaitFamily::Other
        } else {
            GaitFamily::Bound
        }
    } else if sync(offset(Foot::LF, Foot::RH)?) && sync(offset(Foot::RF, Foot::LH)?) {
        GaitFamily::Trot
    } else if sync(offset(Foot::LF, Foot::LH)?) && sync(offset(Foot::RF, Foot::RH)?) {
        GaitFamily::Pace
    } else if sync(front_offset) || sync(rear_offset) {
        GaitFamily::Other
    } else if is_rotation(&order, &ROTARY) || is_rotation(&order, &ROTARY_MIRROR) {
        GaitFamily::RotaryGallop
    } else if is_rotation(&order, &TRANSVERSE) || is_rotation(&order, &TRANSVERSE_MIRROR) {
        GaitFamily::TransverseGallop
    } else {
        GaitFamily::Other
    };

    let aerial = count_aerial_phases(tl, period, cfg)?;
    Ok(GaitLabel {
        family,
        aerial_class: aerial.class,
        footfall_order: order,
        front_offset,
        rear_offset,
        front_lead,
        rear_lead,
        duty_factor: duty_factors(tl, period),
        stride_period: period,
        aerial_per_cycle: aerial.per_cycle,
    })
}

/// Touchdown phase and duty factor of one foot in a synthetic pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootPattern {
    pub touchdown: f64,
    pub duty: f64,
}

/// Periodic footfall pattern, per foot in LF, RF, LH, RH order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootfallPattern {
    pub feet: [FootPattern; NUM_FEET],
}

impl FootfallPattern {
    fn with(lf: (f64, f64), rf: (f64, f64), lh: (f64, f64), rh: (f64, f64)) -> Self {
        let p = |(touchdown, duty)| FootPattern { touchdown, duty };
        Self {
            feet: [p(lf), p(rf), p(lh), p(rh)],
        }
    }

    /// Diagonal pairs land together.
    pub fn trot() -> Self {
        Self::with((0.0, 0.5), (0.5, 0.5), (0.5, 0.5), (0.0, 0.5))
    }

    /// Hind pair then fore pair, two flights.
    pub fn bound() -> Self {
        Self::with((0.5, 0.3), (0.5, 0.3), (0.0, 0.3), (0.0, 0.3))
    }

    /// LH, RH, LF, RF with a single flight after the fore feet leave.
    pub fn transverse_gallop() -> Self {
        Self::with((0.5, 0.2), (0.65, 0.2), (0.0, 0.38), (0.15, 0.38))
    }

    /// LH, RH, RF, LF with overlapping girdles and no flight.
    pub fn rotary_g0() -> Self {
        Self::with((0.65, 0.4), (0.5, 0.4), (0.0, 0.4), (0.15, 0.4))
    }

    /// LH, RH, RF, LF with an extended and a gathered flight.
    pub fn rotary_g2() -> Self {
        Self::with((0.65, 0.19), (0.5, 0.19), (0.0, 0.19), (0.15, 0.19))
    }

    pub fn timeline(
        &self,
        samples_per_cycle: usize,
        cycles: usize,
        dt: f64,
    ) -> Result<ContactTimeline> {
        if samples_per_cycle == 0 {
            return Err(Error::arg("samples_per_cycle must be positive"));
        }
        let contacts = (0..samples_per_cycle * cycles)
            .map(|i| {
                let phase = (i % samples_per_cycle) as f64 / samples_per_cycle as f64;
                let mut row = [false; NUM_FEET];
                for (c, p) in row.iter_mut().zip(&self.feet) {
                    // small slack keeps phase boundaries on exact sample indices
                    *c = Euclid::rem_euclid(&(phase - p.touchdown + 1e-9), &1.0) < p.duty;
                }
                row
            })
            .collect();
        ContactTimeline::new(dt, contacts)
    }
}

/// Rolling footfall tracker used inside the live reward path. Keeps roughly
/// two strides of touchdowns and the running air time of each foot.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineGaitTracker {
    dt: f64,
    debounce: usize,
    t: f64,
    touchdowns: [VecDeque<f64>; NUM_FEET],
    false_run: [usize; NUM_FEET],
    seen: bool,
}

const TRACKER_HISTORY: usize = 8;

impl OnlineGaitTracker {
    pub fn new(dt: f64, cfg: &GaitConfig) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::arg(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            dt,
            debounce: cfg.debounce_samples(dt),
            t: 0.0,
            touchdowns: Default::default(),
            false_run: [0; NUM_FEET],
            seen: false,
        })
    }

    pub fn reset(&mut self) {
        self.t = 0.0;
        self.touchdowns = Default::default();
        self.false_run = [0; NUM_FEET];
        self.seen = false;
    }

    pub fn push(&mut self, contacts: [bool; NUM_FEET]) {
        for (f, &c) in contacts.iter().enumerate() {
            if c {
                if self.seen && self.false_run[f] >= self.debounce {
                    let q = &mut self.touchdowns[f];
                    q.push_back(self.t);
                    if q.len() > TRACKER_HISTORY {
                        q.pop_front();
                    }
                }
                self.false_run[f] = 0;
            } else {
                self.false_run[f] += 1;
            }
        }
        self.seen = true;
        self.t += self.dt;
    }

    /// Seconds since each foot last left the ground (0 while in contact).
    pub fn air_times(&self) -> [f64; NUM_FEET] {
        self.false_run.map(|n| n as f64 * self.dt)
    }

    pub fn stride_period(&self) -> Option<f64> {
        let events: FootEvents = self.touchdowns.clone().map(Vec::from);
        estimate_stride_period(&events).ok()
    }

    /// Folded front and rear offsets over the last two strides, once every
    /// foot has touched down inside that window.
    pub fn offsets(&self) -> Option<(f64, f64)> {
        let period = self.stride_period()?;
        let since = self.t - 2.0 * period - self.dt;
        let events: FootEvents = self
            .touchdowns
            .clone()
            .map(|q| q.into_iter().filter(|&t| t >= since).collect());
        let front = folded_pair(&events, Foot::LF, Foot::RF, period).ok()?.0;
        let rear = folded_pair(&events, Foot::LH, Foot::RH, period).ok()?.0;
        Some((front, rear))
    }
}

/// Whether a contact interval belongs to a foot or to an all-off window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalKind {
    Contact(Foot),
    Aerial,
}

/// Half-open sample range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub kind: IntervalKind,
    pub start: usize,
    pub end: usize,
}

/// Per-foot stance intervals followed by every all-off window.
pub fn gait_intervals(tl: &ContactTimeline) -> Vec<Interval> {
    let mut out = Vec::new();
    for foot in Foot::ALL {
        let mut start = None;
        for (i, c) in tl.column(foot).enumerate() {
            match (c, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push(Interval {
                        kind: IntervalKind::Contact(foot),
                        start: s,
                        end: i,
                    });
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(Interval {
                kind: IntervalKind::Contact(foot),
                start: s,
                end: tl.len(),
            });
        }
    }
    out.extend(aerial_runs(tl).into_iter().map(|r| Interval {
        kind: IntervalKind::Aerial,
        start: r.start,
        end: r.end,
    }));
    out
}

/// Rebuild a timeline of `len` samples from its contact intervals.
pub fn timeline_from_intervals(
    dt: f64,
    len: usize,
    intervals: &[Interval],
) -> Result<ContactTimeline> {
    let mut contacts = alloc::vec![[false; NUM_FEET]; len];
    for iv in intervals {
        if iv.start > iv.end || iv.end > len {
            return Err(Error::validation(
                "interval",
                format!("[{}, {}) outside trace of {len} samples", iv.start, iv.end),
            ));
        }
        if let IntervalKind::Contact(foot) = iv.kind {
            for row in &mut contacts[iv.start..iv.end] {
                row[foot.index()] = true;
            }
        }
    }
    ContactTimeline::new(dt, contacts)
}
