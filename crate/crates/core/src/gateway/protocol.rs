//! Newline-delimited JSON messages exchanged with live clients.

use serde::{Deserialize, Serialize};

use crate::analytics::Report;
use crate::coach::{CoachCue, FeedbackType};
use crate::director::{Directive, ModeCommand};
use crate::sim::TraceSample;

/// One tick of the live loop as seen by the driver.
///
/// In ghost feedback neither the lead speed nor the gap is sent, so the lead
/// cannot be drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub t: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_lead: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub tau: Option<f64>,
    pub set_point: Option<f64>,
    pub mode: String,
    pub feedback: FeedbackType,
    pub cue: CoachCue,
}

impl StatePayload {
    pub fn from_sample(sample: &TraceSample) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        let visible = sample.feedback != FeedbackType::Ghost;
        Self {
            t: sample.t,
            v: sample.v,
            v_lead: if visible { finite(sample.v_lead) } else { None },
            s: if visible { finite(sample.s) } else { None },
            tau: finite(sample.tau),
            set_point: sample.set_point,
            mode: sample.mode.clone(),
            feedback: sample.feedback,
            cue: sample.cue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StatePayload),
    /// Sent when the cue changes.
    Cue { t: f64, cue: CoachCue },
    /// Sent on every director publish.
    Directive {
        t: f64,
        set_point: Option<f64>,
        feedback: FeedbackType,
        mode: String,
    },
    /// Sent once when the schedule completes.
    Report(Report),
    Error { message: String },
}

impl ServerMessage {
    pub fn directive(t: f64, d: &Directive) -> Self {
        ServerMessage::Directive {
            t,
            set_point: d.set_point,
            feedback: d.feedback,
            mode: d.mode_label.clone(),
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        ServerMessage::Error {
            message: message.into(),
        }
    }

    /// Single-line JSON, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Throttle axis in `[-1, 1]`; negative values brake.
    Input { throttle: f64 },
    ModeCmd { command: ModeCommand },
}

impl ClientMessage {
    pub fn parse(line: &str) -> Result<Self, String> {
        let msg: ClientMessage = serde_json::from_str(line.trim()).map_err(|e| format!("bad message: {e}"))?;
        if let ClientMessage::Input { throttle } = msg {
            if !(-1.0..=1.0).contains(&throttle) {
                return Err(format!("throttle {throttle} outside [-1, 1]"));
            }
        }
        Ok(msg)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}
