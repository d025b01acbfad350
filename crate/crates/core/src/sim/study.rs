//! Canned experiments: the per-driver feedback comparison, the spacing
//! behaviour of velocity matching, and the stock ACC under dynamic set points.

use serde::Serialize;

use crate::analytics::{self, LabeledTrace, Report};
use crate::coach::{ControlObjective, FeedbackType};
use crate::director::{Schedule, SegmentConfig};
use crate::driver::{presets, DriverParams};

use super::{run, DriverKind, SimConfig, SimError, Trace};

/// Default duration of each experiment segment, seconds.
pub const SEGMENT_DURATION: f64 = 360.0;

fn segment(label: &str, objective: ControlObjective, feedback: FeedbackType, duration: f64) -> SegmentConfig {
    SegmentConfig {
        label: label.into(),
        objective,
        feedback,
        duration,
    }
}

/// Warm-up, then constant time-gap (instructed, coached, ghost), velocity
/// matching (instructed, coached) and dynamic time-gap (instructed, coached).
pub fn study_segments(duration: f64) -> Vec<SegmentConfig> {
    use FeedbackType::*;
    let ctg = ControlObjective::constant;
    let vm = || ControlObjective::VelocityMatching;
    let dtg = ControlObjective::dynamic;
    vec![
        segment("normal_driving", vm(), Instructed, duration),
        segment("ctg_instructed", ctg(), Instructed, duration),
        segment("ctg_coached", ctg(), Coached, duration),
        segment("ctg_ghost", ctg(), Ghost, duration),
        segment("vm_instructed", vm(), Instructed, duration),
        segment("vm_coached", vm(), Coached, duration),
        segment("dtg_instructed", dtg(), Instructed, duration),
        segment("dtg_coached", dtg(), Coached, duration),
    ]
}

pub fn study_schedule(duration: f64) -> Schedule {
    Schedule::build(&study_segments(duration)).expect("built-in schedule is valid")
}

/// Aggregate comparison of one treatment mode against its baseline.
#[derive(Debug, Clone, Serialize)]
pub struct ModeComparison {
    pub baseline: String,
    pub treatment: String,
    /// Mean over drivers of |mean time-gap error|.
    pub baseline_abs_mean: f64,
    pub treatment_abs_mean: f64,
    /// Mean over drivers of the time-gap error std.
    pub baseline_std: f64,
    pub treatment_std: f64,
    /// Pooled mean of |time-gap error| over every kept sample.
    pub baseline_pooled_abs: f64,
    pub treatment_pooled_abs: f64,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub traces: Vec<LabeledTrace>,
    pub report: Report,
}

impl StudyResult {
    pub fn compare(&self, baseline: &str, treatment: &str) -> Option<ModeComparison> {
        let summary = |m: &str| self.report.summary.iter().find(|s| s.mode == m);
        let (b, t) = (summary(baseline)?, summary(treatment)?);
        Some(ModeComparison {
            baseline: baseline.into(),
            treatment: treatment.into(),
            baseline_abs_mean: b.abs_mean,
            treatment_abs_mean: t.abs_mean,
            baseline_std: b.std,
            treatment_std: t.std,
            baseline_pooled_abs: self.pooled_abs(baseline),
            treatment_pooled_abs: self.pooled_abs(treatment),
        })
    }

    fn pooled_abs(&self, mode: &str) -> f64 {
        let mut all = Vec::new();
        for lt in &self.traces {
            for (m, group) in lt.trace.by_mode() {
                if m == mode {
                    let kept = analytics::preprocess_samples(&group);
                    all.extend(analytics::sample_errors(&kept).0.into_iter().map(f64::abs));
                }
            }
        }
        all.iter().sum::<f64>() / all.len().max(1) as f64
    }
}

/// Run the schedule once per driver preset and build the report.
pub fn comparative_study(schedule: &Schedule, drivers: &[(String, DriverParams)], seed: u64) -> Result<StudyResult, SimError> {
    let mut traces = Vec::with_capacity(drivers.len());
    for (name, params) in drivers {
        let mut cfg = SimConfig::new(schedule.clone(), DriverKind::Model(params.clone()));
        cfg.seed = seed;
        traces.push(LabeledTrace {
            driver: name.clone(),
            trace: run(&cfg)?,
        });
    }
    let report = analytics::report(&traces, &[]);
    Ok(StudyResult { traces, report })
}

/// The full study schedule with 360 s segments over the six built-in presets.
pub fn default_study(seed: u64) -> Result<StudyResult, SimError> {
    let drivers: Vec<(String, DriverParams)> = presets().into_iter().map(|(n, p)| (n.to_owned(), p)).collect();
    comparative_study(&study_schedule(SEGMENT_DURATION), &drivers, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpacingResult {
    /// Mean gap over the final `window` seconds, per initial gap.
    pub final_gaps: Vec<(f64, f64)>,
    /// Largest minus smallest of the final mean gaps.
    pub spread: f64,
}

/// Coached runs of one objective from several initial gaps; returns how far
/// apart the final mean gaps end up.
pub fn spacing_study(
    objective: ControlObjective,
    initial_gaps: &[f64],
    params: &DriverParams,
    duration: f64,
    window: f64,
    seed: u64,
) -> Result<SpacingResult, SimError> {
    let schedule = Schedule::single("spacing", objective, FeedbackType::Coached, duration)
        .map_err(|e| SimError::Config(vec![e.to_string()]))?;
    let mut final_gaps = Vec::new();
    for &s0 in initial_gaps {
        let mut cfg = SimConfig::new(schedule.clone(), DriverKind::Model(params.clone()));
        cfg.initial_gap = s0;
        cfg.seed = seed;
        let trace = run(&cfg)?;
        let tail: Vec<f64> = trace
            .samples
            .iter()
            .filter(|s| s.t >= duration - window)
            .map(|s| s.s)
            .collect();
        final_gaps.push((s0, tail.iter().sum::<f64>() / tail.len().max(1) as f64));
    }
    let lo = final_gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let hi = final_gaps.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpacingResult {
        final_gaps,
        spread: hi - lo,
    })
}

/// Stock ACC following the dynamic time-gap schedule.
pub fn acc_dynamic_run(duration: f64, seed: u64) -> Result<Trace, SimError> {
    let schedule = Schedule::single("dtg_acc", ControlObjective::dynamic(), FeedbackType::Instructed, duration)
        .map_err(|e| SimError::Config(vec![e.to_string()]))?;
    let mut cfg = SimConfig::new(schedule, DriverKind::Acc);
    cfg.seed = seed;
    run(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_schedule_shape() {
        let s = study_schedule(SEGMENT_DURATION);
        // dynamic segments expand into six 60 s pieces each
        assert_eq!(s.len(), 6 + 2 * 6);
        assert_eq!(s.total_duration(), 8.0 * 360.0);
    }
}
