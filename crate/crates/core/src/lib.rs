//! Human-in-the-loop car-following coach.
//!
//! The crate decodes ego speed and radar tracks from CAN logs, associates the
//! low-rate lead-vehicle distance with the high-rate raw tracks, and turns the
//! resulting time-gap or relative velocity into a three-valued audible cue
//! (accelerate, decelerate, silence). Around that core sit a virtual "ghost"
//! lead vehicle, a timed experiment director, driver models, a fixed-step
//! closed-loop simulator, the error analytics used to compare feedback
//! conditions, and a line-oriented streaming gateway for live sessions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod codec;
pub mod coach;
pub mod config;
pub mod director;
pub mod driver;
pub mod fusion;
pub mod gateway;
pub mod ghost;
pub mod sim;

pub use coach::{CoachCue, ControlObjective, FeedbackType, GapState};
pub use codec::{CanFrame, Catalog};
pub use director::{Directive, Schedule};
pub use sim::{SimConfig, Trace, TraceSample};

/// Loop period shared by the radar tracks, the cue loop and the simulator.
pub const TICK_HZ: f64 = 20.0;
