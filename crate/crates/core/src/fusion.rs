//! Lead-vehicle association between the 1 Hz lead distance and the buffer of
//! 20 Hz raw radar tracks.
//!
//! The stock radar reports a low-rate distance to the lead vehicle but no
//! relative velocity for it. The raw tracks carry both. Matching the latest
//! lead distance against recently buffered tracks identifies which raw return
//! is the lead and therefore which relative velocity belongs to it.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW: f64 = 1.5;
pub const DEFAULT_TOLERANCE: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarTrack {
    pub track_index: u8,
    pub rel_dist: f64,
    /// `v_lead - v`; negative when closing in.
    pub rel_vel: f64,
    pub timestamp: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadTrace {
    pub lead_dist: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadEstimate {
    pub s: f64,
    pub delta_v: f64,
    pub source_track: u8,
    /// Seconds since the matched raw sample.
    pub age: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FusionError {
    #[error("track at t={timestamp} is older than newest buffered sample t={newest}")]
    OutOfOrder { timestamp: f64, newest: f64 },
    #[error("track index {0} out of range")]
    TrackIndex(u8),
}

/// Time-ordered ring of recent raw tracks.
#[derive(Debug, Clone)]
pub struct TrackBuffer {
    window: f64,
    entries: VecDeque<RadarTrack>,
}

impl Default for TrackBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW)
    }
}

impl TrackBuffer {
    pub fn new(window: f64) -> Self {
        Self {
            window,
            entries: VecDeque::new(),
        }
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn newest_timestamp(&self) -> Option<f64> {
        self.entries.back().map(|t| t.timestamp)
    }

    pub fn oldest_timestamp(&self) -> Option<f64> {
        self.entries.front().map(|t| t.timestamp)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RadarTrack> {
        self.entries.iter()
    }

    pub fn push(&mut self, track: RadarTrack) -> Result<(), FusionError> {
        if track.track_index as usize >= crate::codec::TRACK_COUNT {
            return Err(FusionError::TrackIndex(track.track_index));
        }
        if let Some(newest) = self.newest_timestamp() {
            if track.timestamp < newest {
                return Err(FusionError::OutOfOrder {
                    timestamp: track.timestamp,
                    newest,
                });
            }
        }
        let now = track.timestamp;
        self.entries.push_back(track);
        while let Some(front) = self.entries.front() {
            if now - front.timestamp > self.window {
                self.entries.pop_front();
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Best valid track within `tolerance` of `lead.lead_dist`.
    ///
    /// Candidates are ranked by distance mismatch, then recency, then track
    /// index. Returns `None` when nothing falls inside the tolerance.
    pub fn associate(&self, lead: &LeadTrace, tolerance: f64) -> Option<LeadEstimate> {
        let newest = self.newest_timestamp()?;
        self.entries
            .iter()
            .filter(|t| t.valid)
            .map(|t| ((t.rel_dist - lead.lead_dist).abs(), t))
            .filter(|(mismatch, _)| *mismatch <= tolerance)
            .min_by(|(ma, a), (mb, b)| rank(*ma, a, *mb, b))
            .map(|(_, t)| LeadEstimate {
                s: t.rel_dist,
                delta_v: t.rel_vel,
                source_track: t.track_index,
                age: newest - t.timestamp,
            })
    }
}

fn rank(ma: f64, a: &RadarTrack, mb: f64, b: &RadarTrack) -> Ordering {
    ma.total_cmp(&mb)
        .then_with(|| b.timestamp.total_cmp(&a.timestamp))
        .then_with(|| a.track_index.cmp(&b.track_index))
}

impl LeadEstimate {
    /// Constant relative-velocity dead reckoning.
    pub fn extrapolate(&self, dt: f64) -> LeadEstimate {
        LeadEstimate {
            s: self.s + self.delta_v * dt,
            age: self.age + dt,
            ..*self
        }
    }
}
