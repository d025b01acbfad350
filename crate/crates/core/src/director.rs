//! Experiment director: a timed sequence of (objective, feedback) segments.
//!
//! Time is kept in integer nanoseconds so that segment boundaries and the
//! publish cadence do not drift when a fixed `dt` is accumulated over an hour
//! of simulated driving.

use serde::{Deserialize, Serialize};

use crate::coach::{ControlObjective, FeedbackType};

pub const PUBLISH_PERIOD: f64 = 0.5;
/// A reverse command issued later than this into a segment restarts it.
pub const REVERSE_RESTART_AFTER: f64 = 2.0;

const NS_PER_S: f64 = 1e9;

fn to_ns(seconds: f64) -> u64 {
    (seconds * NS_PER_S).round().max(0.0) as u64
}

fn to_s(ns: u64) -> f64 {
    ns as f64 / NS_PER_S
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DirectorError {
    #[error("segment {label:?}: duration {duration} must be positive")]
    Duration { label: String, duration: f64 },
    #[error("segment {label:?}: {reason}")]
    Segment { label: String, reason: String },
    #[error("schedule is empty")]
    Empty,
}

/// One entry of a schedule document, before dynamic expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub label: String,
    pub objective: ControlObjective,
    pub feedback: FeedbackType,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSegment {
    pub label: String,
    pub objective: ControlObjective,
    pub feedback: FeedbackType,
    pub duration: f64,
    /// Resolved set point; `None` for velocity matching.
    pub set_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    segments: Vec<ExperimentSegment>,
}

impl Schedule {
    /// Validate segments and expand dynamic time-gap objectives into one
    /// sub-segment per period, cycling through the set points.
    pub fn build(config: &[SegmentConfig]) -> Result<Self, DirectorError> {
        let mut segments = Vec::new();
        for seg in config {
            if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                return Err(DirectorError::Duration {
                    label: seg.label.clone(),
                    duration: seg.duration,
                });
            }
            seg.objective.validate().map_err(|e| DirectorError::Segment {
                label: seg.label.clone(),
                reason: e.to_string(),
            })?;
            if seg.feedback == FeedbackType::Ghost && !seg.objective.is_time_gap() {
                return Err(DirectorError::Segment {
                    label: seg.label.clone(),
                    reason: "ghost feedback requires a time-gap objective".into(),
                });
            }
            match &seg.objective {
                ControlObjective::ConstantTimeGap { tau_star } => {
                    segments.push(expanded(seg, seg.duration, Some(*tau_star)))
                }
                ControlObjective::VelocityMatching => segments.push(expanded(seg, seg.duration, None)),
                ControlObjective::DynamicTimeGap { values, period } => {
                    let total = to_ns(seg.duration);
                    let step = to_ns(*period);
                    let mut start = 0u64;
                    let mut k = 0usize;
                    while start < total {
                        let len = step.min(total - start);
                        segments.push(expanded(seg, to_s(len), Some(values[k % values.len()])));
                        start += len;
                        k += 1;
                    }
                }
            }
        }
        if segments.is_empty() {
            return Err(DirectorError::Empty);
        }
        Ok(Self { segments })
    }

    pub fn single(label: &str, objective: ControlObjective, feedback: FeedbackType, duration: f64) -> Result<Self, DirectorError> {
        Self::build(&[SegmentConfig {
            label: label.into(),
            objective,
            feedback,
            duration,
        }])
    }

    pub fn segments(&self) -> &[ExperimentSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        to_s(self.segments.iter().map(|s| to_ns(s.duration)).sum())
    }
}

fn expanded(seg: &SegmentConfig, duration: f64, set_point: Option<f64>) -> ExperimentSegment {
    ExperimentSegment {
        label: seg.label.clone(),
        objective: seg.objective.clone(),
        feedback: seg.feedback,
        duration,
        set_point,
    }
}

/// What the coach needs to know about the active segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directive {
    pub set_point: Option<f64>,
    pub feedback: FeedbackType,
    pub mode_label: String,
}

impl Directive {
    /// Objective as seen by the coach for this instant.
    pub fn objective(&self) -> ControlObjective {
        match self.set_point {
            Some(tau_star) => ControlObjective::ConstantTimeGap { tau_star },
            None => ControlObjective::VelocityMatching,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCommand {
    Advance,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum DirectorEvent {
    SegmentChanged { from: usize, to: usize },
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DirectorState {
    pub segment_index: usize,
    elapsed_ns: u64,
    total_ns: u64,
    last_publish_ns: Option<u64>,
    pub finished: bool,
}

impl DirectorState {
    pub fn elapsed_in_segment(&self) -> f64 {
        to_s(self.elapsed_ns)
    }

    pub fn total_elapsed(&self) -> f64 {
        to_s(self.total_ns)
    }

    pub fn last_publish(&self) -> Option<f64> {
        self.last_publish_ns.map(to_s)
    }
}

#[derive(Debug, Clone)]
pub struct Director {
    schedule: Schedule,
    state: DirectorState,
    publish_period_ns: u64,
    reverse_restart_after_ns: u64,
}

impl Director {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            state: DirectorState::default(),
            publish_period_ns: to_ns(PUBLISH_PERIOD),
            reverse_restart_after_ns: to_ns(REVERSE_RESTART_AFTER),
        }
    }

    pub fn with_reverse_threshold(mut self, seconds: f64) -> Self {
        self.reverse_restart_after_ns = to_ns(seconds);
        self
    }

    pub fn with_state(mut self, state: DirectorState) -> Self {
        self.state = state;
        self
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn state(&self) -> &DirectorState {
        &self.state
    }

    pub fn current_segment(&self) -> &ExperimentSegment {
        &self.schedule.segments[self.state.segment_index]
    }

    pub fn is_finished(&self) -> bool {
        self.state.finished
    }

    /// Advance time. Crossing a boundary carries the remainder into the next
    /// segment; expiring the last segment finishes the run.
    pub fn tick(&mut self, dt: f64) -> Vec<DirectorEvent> {
        let dt_ns = to_ns(dt);
        let mut events = Vec::new();
        self.state.total_ns += dt_ns;
        if self.state.finished {
            return events;
        }
        self.state.elapsed_ns += dt_ns;
        loop {
            let duration = to_ns(self.current_segment().duration);
            if self.state.elapsed_ns < duration {
                break;
            }
            self.state.elapsed_ns -= duration;
            let from = self.state.segment_index;
            if from + 1 < self.schedule.len() {
                self.state.segment_index += 1;
                events.push(DirectorEvent::SegmentChanged { from, to: from + 1 });
            } else {
                self.state.elapsed_ns = 0;
                self.state.finished = true;
                events.push(DirectorEvent::Completed);
                break;
            }
        }
        events
    }

    /// True when a publish boundary has been crossed since the last publish.
    pub fn publish_due(&self) -> bool {
        match self.state.last_publish_ns {
            None => true,
            Some(last) => {
                self.state.total_ns / self.publish_period_ns > last / self.publish_period_ns
            }
        }
    }

    pub fn mark_published(&mut self) {
        self.state.last_publish_ns = Some(self.state.total_ns);
    }

    /// `Some(directive)` if a publish is due, marking it as published.
    pub fn poll_publish(&mut self) -> Option<Directive> {
        if self.publish_due() {
            self.mark_published();
            Some(self.current_directive())
        } else {
            None
        }
    }

    pub fn current_directive(&self) -> Directive {
        let seg = self.current_segment();
        Directive {
            set_point: seg.set_point,
            feedback: seg.feedback,
            mode_label: seg.label.clone(),
        }
    }

    pub fn handle_command(&mut self, cmd: ModeCommand) -> Option<DirectorEvent> {
        if self.state.finished {
            return None;
        }
        let from = self.state.segment_index;
        match cmd {
            ModeCommand::Advance => {
                self.state.elapsed_ns = 0;
                if from + 1 < self.schedule.len() {
                    self.state.segment_index += 1;
                    Some(DirectorEvent::SegmentChanged { from, to: from + 1 })
                } else {
                    self.state.finished = true;
                    Some(DirectorEvent::Completed)
                }
            }
            ModeCommand::Reverse => {
                let restart = self.state.elapsed_ns > self.reverse_restart_after_ns || from == 0;
                self.state.elapsed_ns = 0;
                if restart {
                    None
                } else {
                    self.state.segment_index -= 1;
                    Some(DirectorEvent::SegmentChanged { from, to: from - 1 })
                }
            }
        }
    }
}
