use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{LogRecord, SimLog};
use crate::contact::ContactWorld;
use crate::controller::{predicted_steady_state, ControllerParams, SteadyState};
use crate::error::{Error, Result};
use crate::math::{self, Vec6};
use crate::wrench::ThresholdFilter;

/// Relative band around a predicted value.
pub const COMPLETION_BAND: f64 = 0.02;
/// How long every channel must stay in band (s).
pub const COMPLETION_HOLD: f64 = 1.0;
/// Trailing-mean window applied to the filtered wrench before band checks (s).
pub const SMOOTHING_WINDOW: f64 = 0.1;

/// Names of the twelve analyzed channels.
pub const CHANNELS: [&str; 12] =
    ["ee_fx", "ee_fy", "ee_fz", "ee_tx", "ee_ty", "ee_tz", "vx", "vy", "vz", "wx", "wy", "wz"];

fn window_len(seconds: f64, dt: f64) -> usize {
    (libm::round(seconds / dt) as usize).max(1)
}

/// Band per wrench channel: 2 % of the target, or the filter threshold
/// where the target is zero.
fn wrench_bands(target: &[f64; 6], filter: &ThresholdFilter) -> [f64; 6] {
    core::array::from_fn(|i| {
        if target[i] != 0.0 {
            COMPLETION_BAND * math::abs(target[i])
        } else {
            filter.thresholds()[i]
        }
    })
}

/// Online grasp-complete detector: all six smoothed wrench channels inside
/// their bands around the predicted steady state, while in contact, for
/// [`COMPLETION_HOLD`] seconds.
#[derive(Debug, Clone)]
pub struct CompletionTracker {
    target: [f64; 6],
    bands: [f64; 6],
    window: usize,
    hold: usize,
    recent: VecDeque<Vec6>,
    in_band_run: usize,
    done_at: Option<f64>,
}

impl CompletionTracker {
    pub fn new(steady: &SteadyState, filter: &ThresholdFilter, dt: f64) -> Self {
        let s = steady.wrench().stacked();
        let target = [s[0], s[1], s[2], s[3], s[4], s[5]];
        CompletionTracker {
            target,
            bands: wrench_bands(&target, filter),
            window: window_len(SMOOTHING_WINDOW, dt),
            hold: window_len(COMPLETION_HOLD, dt),
            recent: VecDeque::new(),
            in_band_run: 0,
            done_at: None,
        }
    }

    /// Feeds one record; returns the completion time once reached.
    pub fn push(&mut self, rec: &LogRecord) -> Option<f64> {
        if self.done_at.is_some() {
            return self.done_at;
        }
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(rec.wrench.stacked());
        let full = self.recent.len() == self.window;
        let mean = self.recent.iter().fold(Vec6::zeros(), |a, b| a + b) / self.recent.len() as f64;
        let ok = full
            && rec.contact
            && (0..6).all(|i| math::abs(mean[i] - self.target[i]) <= self.bands[i]);
        self.in_band_run = if ok { self.in_band_run + 1 } else { 0 };
        if self.in_band_run >= self.hold {
            self.done_at = Some(rec.t);
        }
        self.done_at
    }
}

/// Mean over the trailing `window` samples (fewer at the start).
pub fn trailing_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let lo = (i + 1).saturating_sub(window);
        let s: f64 = values[lo..=i].iter().sum();
        out.push(s / (i + 1 - lo) as f64);
    }
    out
}

/// Time of the first sample after the last one outside `target ± band`.
/// `None` if the final sample itself is outside.
pub fn settle_time(times: &[f64], values: &[f64], target: f64, band: f64) -> Option<f64> {
    let outside = |v: &f64| math::abs(v - target) > band;
    match values.iter().rposition(outside) {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub samples: usize,
    pub end_time: f64,
    /// First sample with a non-zero filtered `f_z`.
    pub contact_time: Option<f64>,
    /// When `v_z` entered and stayed within 2 % of `v_dz` before contact.
    pub approach_settle_time: Option<f64>,
    /// Settle time per entry of [`CHANNELS`].
    pub settle_times: [Option<f64>; 12],
    /// Means over the last 5 % of samples.
    pub final_wrench: [f64; 6],
    pub final_velocity: [f64; 6],
    pub predicted: SteadyState,
    /// `final_wrench − predicted wrench`.
    pub deltas: [f64; 6],
    pub grasp_complete: bool,
    pub grasp_time: Option<f64>,
    pub halt_time: Option<f64>,
}

fn channel(rec: &LogRecord, i: usize) -> f64 {
    match i {
        0..=5 => rec.wrench.stacked()[i],
        6..=8 => rec.velocity.linear[i - 6],
        _ => rec.velocity.angular[i - 9],
    }
}

fn tail_mean(values: &[f64]) -> f64 {
    let n = values.len();
    let k = ((n as f64 * 0.05) as usize).max(1).min(n);
    values[n - k..].iter().sum::<f64>() / k as f64
}

pub fn analyze(log: &SimLog, params: &ControllerParams, world: &ContactWorld) -> Result<ConvergenceReport> {
    if log.records.is_empty() {
        return Err(Error::invalid("log is empty"));
    }
    let predicted = predicted_steady_state(params, world)?;
    let recs = &log.records;
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let series: Vec<Vec<f64>> = (0..12).map(|c| recs.iter().map(|r| channel(r, c)).collect()).collect();

    let contact_idx = recs.iter().position(|r| r.wrench.force.z != 0.0);
    let contact_time = contact_idx.map(|i| times[i]);
    let approach_end = contact_idx.unwrap_or(recs.len());
    let approach_settle_time = if approach_end > 0 {
        settle_time(
            &times[..approach_end],
            &series[8][..approach_end],
            params.v_dz,
            COMPLETION_BAND * math::abs(params.v_dz),
        )
    } else {
        None
    };

    let final_all: Vec<f64> = series.iter().map(|s| tail_mean(s)).collect();
    let window = window_len(SMOOTHING_WINDOW, log.dt);
    let thresholds = log.filter.thresholds();
    let settle_times = core::array::from_fn(|c| {
        let target = final_all[c];
        let (values, floor) = if c < 6 {
            (trailing_mean(&series[c], window), thresholds[c])
        } else if c < 9 {
            (series[c].clone(), COMPLETION_BAND * math::abs(params.v_dz))
        } else {
            (series[c].clone(), 1e-4)
        };
        let band = (COMPLETION_BAND * math::abs(target)).max(floor);
        settle_time(&times, &values, target, band)
    });

    let pred = predicted.wrench().stacked();
    let final_wrench: [f64; 6] = core::array::from_fn(|i| final_all[i]);
    let final_velocity: [f64; 6] = core::array::from_fn(|i| final_all[6 + i]);
    let deltas = core::array::from_fn(|i| final_wrench[i] - pred[i]);

    let mut tracker = CompletionTracker::new(&predicted, &log.filter, log.dt);
    let grasp_time = recs.iter().filter_map(|r| tracker.push(r)).next();

    Ok(ConvergenceReport {
        samples: recs.len(),
        end_time: *times.last().unwrap(),
        contact_time,
        approach_settle_time,
        settle_times,
        final_wrench,
        final_velocity,
        predicted,
        deltas,
        grasp_complete: grasp_time.is_some(),
        grasp_time,
        halt_time: log.halt.as_ref().map(|h| h.t),
    })
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => alloc::format!("{x}"),
        None => String::from("none"),
    }
}

impl ConvergenceReport {
    /// `key=value` lines, one fact per line, stable order.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples={}", self.samples);
        let _ = writeln!(s, "end_time={}", self.end_time);
        let _ = writeln!(s, "contact_time={}", opt(self.contact_time));
        let _ = writeln!(s, "approach_settle_time={}", opt(self.approach_settle_time));
        for (name, t) in CHANNELS.iter().zip(&self.settle_times) {
            let _ = writeln!(s, "settle_time.{name}={}", opt(*t));
        }
        for (i, name) in CHANNELS[..6].iter().enumerate() {
            let _ = writeln!(s, "final.{name}={}", self.final_wrench[i]);
        }
        for (i, name) in CHANNELS[6..].iter().enumerate() {
            let _ = writeln!(s, "final.{name}={}", self.final_velocity[i]);
        }
        let _ = writeln!(s, "predicted.v_free={}", self.predicted.v_free);
        let _ = writeln!(s, "predicted.f_zf={}", self.predicted.f_zf);
        let _ = writeln!(s, "predicted.tau_zf={}", self.predicted.tau_zf);
        let _ = writeln!(s, "predicted.omega_z_flat={}", self.predicted.omega_z_flat);
        let _ = writeln!(s, "predicted.omega_z_unmodified={}", opt(self.predicted.omega_z_unmodified));
        for (i, name) in CHANNELS[..6].iter().enumerate() {
            let _ = writeln!(s, "delta.{name}={}", self.deltas[i]);
        }
        let _ = writeln!(s, "grasp_complete={}", self.grasp_complete);
        let _ = writeln!(s, "grasp_time={}", opt(self.grasp_time));
        let _ = writeln!(s, "halt_time={}", opt(self.halt_time));
        s
    }
}
