//! Fixed-step closed-loop simulation, CAN log synthesis and replay.

mod canlog;
mod engine;
pub mod study;
mod trace;

use serde::{Deserialize, Serialize};

use crate::codec::{Catalog, CodecError};
use crate::coach::CoachError;
use crate::director::Schedule;
use crate::driver::DriverParams;
use crate::fusion::{DEFAULT_TOLERANCE, DEFAULT_WINDOW};

pub use canlog::{replay, synth_can_log, CanSensor, CanSynth, ReplayOptions, ReplayOutput};
pub use engine::{run, Simulation, StepOutput};
pub use trace::{read_trace_csv, write_trace_csv, RunStats, Trace, TraceSample, TRACE_HEADER};

pub const DEFAULT_DT: f64 = 0.05;
pub const LEAD_SPEED: f64 = 29.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum LeadProfile {
    Constant {
        speed: f64,
    },
    /// `(start_time, speed)` steps; before the first step the first speed holds.
    PiecewiseConstant {
        steps: Vec<(f64, f64)>,
    },
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
}

impl Default for LeadProfile {
    fn default() -> Self {
        LeadProfile::Sinusoidal {
            mean: LEAD_SPEED,
            amplitude: 0.5,
            period: 120.0,
        }
    }
}

impl LeadProfile {
    pub fn speed_at(&self, t: f64) -> f64 {
        match self {
            LeadProfile::Constant { speed } => *speed,
            LeadProfile::PiecewiseConstant { steps } => steps
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .or(steps.first())
                .map(|&(_, v)| v)
                .unwrap_or(LEAD_SPEED),
            LeadProfile::Sinusoidal {
                mean,
                amplitude,
                period,
            } => mean + amplitude * (std::f64::consts::TAU * t / period).sin(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            LeadProfile::Constant { speed } if !(*speed >= 0.0) => {
                Err(format!("lead speed {speed} must be non-negative"))
            }
            LeadProfile::PiecewiseConstant { steps } if steps.is_empty() => {
                Err("piecewise lead profile needs at least one step".into())
            }
            LeadProfile::PiecewiseConstant { steps }
                if steps.windows(2).any(|w| w[1].0 < w[0].0) || steps.iter().any(|s| !(s.1 >= 0.0)) =>
            {
                Err("piecewise lead steps must be time-ordered with non-negative speeds".into())
            }
            LeadProfile::Sinusoidal {
                mean,
                amplitude,
                period,
            } if !(*period > 0.0) || !(mean - amplitude.abs() >= 0.0) => {
                Err("sinusoidal lead needs period > 0 and mean >= |amplitude|".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriverKind {
    /// Modeled human; behaviour follows the directive's feedback type.
    Model(DriverParams),
    /// Stock constant-time-gap ACC.
    Acc,
    /// Throttle supplied each tick from outside (live sessions).
    HumanInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanPathConfig {
    pub catalog: Catalog,
    pub dist_noise_std: f64,
    pub vel_noise_std: f64,
    pub distractors: u8,
    pub tolerance: f64,
    pub window: f64,
}

impl Default for CanPathConfig {
    fn default() -> Self {
        Self {
            catalog: Catalog::builtin(),
            dist_noise_std: 0.0,
            vel_noise_std: 0.0,
            distractors: 4,
            tolerance: DEFAULT_TOLERANCE,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sensing {
    Truth,
    CanPath(CanPathConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub initial_speed: f64,
    pub initial_gap: f64,
    pub lead_profile: LeadProfile,
    pub ghost_speed: f64,
    pub schedule: Schedule,
    pub driver: DriverKind,
    pub sensing: Sensing,
    pub seed: u64,
    /// Report degenerate speeds as NaN time-gaps instead of failing.
    pub tolerate_low_speed: bool,
}

impl SimConfig {
    /// 20 Hz, 29 m/s at the 2.25 s set point, perturbed lead, truth sensing.
    pub fn new(schedule: Schedule, driver: DriverKind) -> Self {
        Self {
            dt: DEFAULT_DT,
            duration: schedule.total_duration(),
            initial_speed: LEAD_SPEED,
            initial_gap: LEAD_SPEED * crate::coach::CONSTANT_TIME_GAP,
            lead_profile: LeadProfile::default(),
            ghost_speed: crate::ghost::DEFAULT_GHOST_SPEED,
            schedule,
            driver,
            sensing: Sensing::Truth,
            seed: 42,
            tolerate_low_speed: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut problems = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            problems.push(format!("dt {} must be positive", self.dt));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            problems.push(format!("duration {} must be positive", self.duration));
        }
        if !(self.initial_speed >= 0.0) {
            problems.push("initial speed must be non-negative".into());
        }
        if !self.initial_gap.is_finite() {
            problems.push("initial gap must be finite".into());
        }
        if !(self.ghost_speed > 0.0) {
            problems.push("ghost speed must be positive".into());
        }
        if let Err(e) = self.lead_profile.validate() {
            problems.push(e);
        }
        if let DriverKind::Model(p) = &self.driver {
            if let Err(e) = p.validate() {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config(problems))
        }
    }

    pub fn ticks(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("t={t:.2}s: {source}")]
    Coach {
        t: f64,
        #[source]
        source: CoachError,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
