use std::collections::VecDeque;

use crate::analytics::{self, LabeledTrace, Report};
use crate::coach::CoachCue;
use crate::director::DirectorEvent;
use crate::sim::{SimConfig, SimError, Simulation, Trace};

use super::protocol::{ClientMessage, ServerMessage, StatePayload};

/// Driver label used for the report of a live session.
pub const LIVE_DRIVER: &str = "live";

/// A simulation advanced tick by tick with inputs queued from outside.
///
/// Inputs queued before a tick are applied at the start of that tick, so
/// they shape the state reported by the tick after it.
pub struct LiveSession {
    sim: Simulation,
    inbox: VecDeque<ClientMessage>,
    samples: Trace,
    last_cue: Option<CoachCue>,
    finished: bool,
}

impl LiveSession {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        let sim = Simulation::new(config)?;
        Ok(Self {
            samples: Trace {
                fingerprint: sim.fingerprint(),
                ..Trace::default()
            },
            sim,
            inbox: VecDeque::new(),
            last_cue: None,
            finished: false,
        })
    }

    pub fn push(&mut self, msg: ClientMessage) {
        self.inbox.push_back(msg);
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn trace(&self) -> &Trace {
        &self.samples
    }

    pub fn into_trace(self) -> Trace {
        self.samples
    }

    pub fn report(&self) -> Report {
        analytics::report(
            &[LabeledTrace {
                driver: LIVE_DRIVER.into(),
                trace: self.samples.clone(),
            }],
            &[],
        )
    }

    /// Apply queued inputs, advance one tick and return the messages to
    /// broadcast. After completion this returns nothing.
    pub fn tick(&mut self) -> Result<Vec<ServerMessage>, SimError> {
        if self.finished {
            return Ok(Vec::new());
        }
        let mut completed = false;
        while let Some(msg) = self.inbox.pop_front() {
            match msg {
                ClientMessage::Input { throttle } => self.sim.set_throttle(throttle),
                ClientMessage::ModeCmd { command } => {
                    completed |= self.sim.handle_command(command) == Some(DirectorEvent::Completed);
                }
            }
        }
        let mut out = Vec::new();
        if !completed {
            let step = self.sim.step()?;
            let t = step.sample.t;
            if let Some(d) = &step.published {
                out.push(ServerMessage::directive(t, d));
            }
            if self.last_cue != Some(step.sample.cue) {
                self.last_cue = Some(step.sample.cue);
                out.push(ServerMessage::Cue { t, cue: step.sample.cue });
            }
            out.push(ServerMessage::State(StatePayload::from_sample(&step.sample)));
            self.samples.samples.push(step.sample);
            completed = step.events.contains(&DirectorEvent::Completed) || self.sim.director().is_finished();
        }
        if completed {
            self.finished = true;
            self.samples.stats = self.sim.stats().clone();
            out.push(ServerMessage::Report(self.report()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coach::{ControlObjective, FeedbackType};
    use crate::director::{ModeCommand, Schedule};
    use crate::sim::DriverKind;

    fn session(duration: f64) -> LiveSession {
        let sched = Schedule::build(&[
            crate::director::SegmentConfig {
                label: "ctg_coached".into(),
                objective: ControlObjective::constant(),
                feedback: FeedbackType::Coached,
                duration,
            },
            crate::director::SegmentConfig {
                label: "ctg_ghost".into(),
                objective: ControlObjective::constant(),
                feedback: FeedbackType::Ghost,
                duration,
            },
        ])
        .unwrap();
        LiveSession::new(SimConfig::new(sched, DriverKind::HumanInput)).unwrap()
    }

    fn states(msgs: &[ServerMessage]) -> Vec<&StatePayload> {
        msgs.iter()
            .filter_map(|m| match m {
                ServerMessage::State(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn throttle_applies_next_tick() {
        let mut s = session(5.0);
        s.tick().unwrap();
        s.push(ClientMessage::Input { throttle: 0.5 });
        let v0 = s.simulation().speed();
        let msgs = s.tick().unwrap();
        assert_eq!(states(&msgs)[0].v, v0);
        let msgs = s.tick().unwrap();
        assert!((states(&msgs)[0].v - (v0 + 1.0 * 0.05)).abs() < 1e-9);
    }

    #[test]
    fn full_run_ends_with_report() {
        let mut s = session(5.0);
        let mut all = Vec::new();
        while !s.is_finished() {
            all.extend(s.tick().unwrap());
        }
        assert_eq!(states(&all).len(), 201);
        assert!(matches!(all.last(), Some(ServerMessage::Report(_))));
        let ghost = states(&all).into_iter().filter(|s| s.feedback == FeedbackType::Ghost);
        assert!(ghost.clone().count() > 90);
        assert!(ghost.into_iter().all(|s| s.v_lead.is_none() && s.s.is_none()));
        assert!(s.tick().unwrap().is_empty());
    }

    #[test]
    fn advance_on_last_segment_completes() {
        let mut s = session(5.0);
        s.tick().unwrap();
        s.push(ClientMessage::ModeCmd {
            command: ModeCommand::Advance,
        });
        let msgs = s.tick().unwrap();
        assert_eq!(states(&msgs)[0].mode, "ctg_ghost");
        s.push(ClientMessage::ModeCmd {
            command: ModeCommand::Advance,
        });
        let msgs = s.tick().unwrap();
        assert!(states(&msgs).is_empty());
        assert!(matches!(msgs.last(), Some(ServerMessage::Report(_))));
        assert!(s.is_finished());
    }
}
