//! Cue computation: time-gap and relative-velocity dead-bands mapped onto a
//! three-valued signal.

use serde::{Deserialize, Serialize};

/// Time-gap dead-band around the set point, seconds.
pub const TIME_GAP_DEADBAND: f64 = 0.05;
/// Relative-velocity dead-band, m/s.
pub const VELOCITY_DEADBAND: f64 = 0.4;
/// Below this ego speed the time-gap is not computed.
pub const MIN_SPEED: f64 = 1.0;

pub const CONSTANT_TIME_GAP: f64 = 2.25;
pub const DYNAMIC_TIME_GAPS: [f64; 2] = [2.25, 1.8];
pub const DYNAMIC_PERIOD: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoachCue {
    /// High pitch.
    Accelerate,
    /// Low pitch.
    Decelerate,
    None,
}

impl CoachCue {
    pub fn as_str(self) -> &'static str {
        match self {
            CoachCue::Accelerate => "accelerate",
            CoachCue::Decelerate => "decelerate",
            CoachCue::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "accelerate" => Some(CoachCue::Accelerate),
            "decelerate" => Some(CoachCue::Decelerate),
            "none" => Some(CoachCue::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackType {
    /// Driver's own perception only; no cue is played.
    Instructed,
    /// Perception plus CAN-derived cues.
    Coached,
    /// Cues relative to a virtual lead vehicle the driver cannot see.
    Ghost,
}

impl FeedbackType {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackType::Instructed => "instructed",
            FeedbackType::Coached => "coached",
            FeedbackType::Ghost => "ghost",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "instructed" => Some(FeedbackType::Instructed),
            "coached" => Some(FeedbackType::Coached),
            "ghost" => Some(FeedbackType::Ghost),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlObjective {
    ConstantTimeGap {
        #[serde(default = "default_tau_star")]
        tau_star: f64,
    },
    VelocityMatching,
    DynamicTimeGap {
        #[serde(default = "default_dynamic_values")]
        values: Vec<f64>,
        #[serde(default = "default_dynamic_period")]
        period: f64,
    },
}

fn default_tau_star() -> f64 {
    CONSTANT_TIME_GAP
}

fn default_dynamic_values() -> Vec<f64> {
    DYNAMIC_TIME_GAPS.to_vec()
}

fn default_dynamic_period() -> f64 {
    DYNAMIC_PERIOD
}

impl ControlObjective {
    pub fn constant() -> Self {
        ControlObjective::ConstantTimeGap {
            tau_star: CONSTANT_TIME_GAP,
        }
    }

    pub fn dynamic() -> Self {
        ControlObjective::DynamicTimeGap {
            values: DYNAMIC_TIME_GAPS.to_vec(),
            period: DYNAMIC_PERIOD,
        }
    }

    pub fn is_time_gap(&self) -> bool {
        !matches!(self, ControlObjective::VelocityMatching)
    }

    pub fn validate(&self) -> Result<(), CoachError> {
        match self {
            ControlObjective::ConstantTimeGap { tau_star } if !(*tau_star > 0.0) => {
                Err(CoachError::InvalidObjective(format!("tau_star {tau_star} must be positive")))
            }
            ControlObjective::DynamicTimeGap { values, period } => {
                if !(*period > 0.0) {
                    return Err(CoachError::InvalidObjective(format!(
                        "period {period} must be positive"
                    )));
                }
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
                    return Err(CoachError::InvalidObjective(
                        "dynamic set points must be non-empty and positive".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Kinematic state a cue is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapState {
    pub s: f64,
    /// `v_lead - v`
    pub delta_v: f64,
    pub tau: f64,
}

impl GapState {
    pub fn from_kinematics(s: f64, v: f64, delta_v: f64) -> Result<Self, CoachError> {
        Ok(Self {
            s,
            delta_v,
            tau: compute_time_gap(s, v)?,
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CoachError {
    #[error("ego speed {0} m/s is too low to compute a time-gap")]
    DegenerateSpeed(f64),
    #[error("ghost feedback is not defined for velocity matching")]
    UnsupportedCombination,
    #[error("time-gap objective requires a set point")]
    MissingSetPoint,
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
}

pub fn compute_time_gap(s: f64, v: f64) -> Result<f64, CoachError> {
    if !(v > MIN_SPEED) {
        return Err(CoachError::DegenerateSpeed(v));
    }
    Ok(s / v)
}

/// Gap shorter than the band asks to back off; longer asks to close in.
pub fn time_gap_cue(tau: f64, tau_star: f64, deadband: f64) -> CoachCue {
    if tau < tau_star - deadband {
        CoachCue::Decelerate
    } else if tau > tau_star + deadband {
        CoachCue::Accelerate
    } else {
        CoachCue::None
    }
}

pub fn velocity_cue(delta_v: f64, deadband: f64) -> CoachCue {
    if delta_v > deadband {
        CoachCue::Accelerate
    } else if delta_v < -deadband {
        CoachCue::Decelerate
    } else {
        CoachCue::None
    }
}

/// One coach update with the default dead-bands.
///
/// `tau_star_now` is the director's current set point; it is ignored for
/// velocity matching.
pub fn step(
    objective: &ControlObjective,
    feedback: FeedbackType,
    gap: &GapState,
    tau_star_now: Option<f64>,
) -> Result<CoachCue, CoachError> {
    match (feedback, objective) {
        (FeedbackType::Ghost, ControlObjective::VelocityMatching) => {
            Err(CoachError::UnsupportedCombination)
        }
        (FeedbackType::Instructed, _) => Ok(CoachCue::None),
        (_, ControlObjective::VelocityMatching) => Ok(velocity_cue(gap.delta_v, VELOCITY_DEADBAND)),
        (_, _) => {
            let tau_star = tau_star_now.ok_or(CoachError::MissingSetPoint)?;
            Ok(time_gap_cue(gap.tau, tau_star, TIME_GAP_DEADBAND))
        }
    }
}
