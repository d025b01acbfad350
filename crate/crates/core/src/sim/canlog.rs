//! CAN log synthesis from traces and trace reconstruction from CAN logs.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::codec::{track_message_name, CanFrame, Catalog, CodecError, EGO_SPEED, LEAD_INFO, TRACK_COUNT};
use crate::coach::{self, CoachCue, ControlObjective, FeedbackType, GapState, MIN_SPEED};
use crate::director::{Director, Schedule};
use crate::fusion::{LeadEstimate, LeadTrace, RadarTrack, TrackBuffer, DEFAULT_TOLERANCE, DEFAULT_WINDOW};

use super::{SimError, Trace, TraceSample};

/// Distractor objects are placed at least this far beyond the tolerance.
const DISTRACTOR_MARGIN: f64 = 5.0;
const DISTRACTOR_RANGE: (f64, f64) = (5.0, 200.0);

fn track_index(name: &str) -> Option<u8> {
    let idx: u8 = name.strip_prefix("TRACK_")?.parse().ok()?;
    ((idx as usize) < TRACK_COUNT).then_some(idx)
}

/// Generates the per-tick frame set: ego speed and tracks every tick, the
/// lead distance at its own lower rate.
#[derive(Debug, Clone)]
pub struct CanSynth {
    catalog: Catalog,
    rng: ChaCha8Rng,
    lead_slot: u8,
    distractors: u8,
    lead_every: u64,
    pub tolerance: f64,
    pub dist_noise_std: f64,
    pub vel_noise_std: f64,
}

impl CanSynth {
    pub fn new(catalog: Catalog, distractors: u8, dt: f64, seed: u64) -> Result<Self, CodecError> {
        for name in [EGO_SPEED, LEAD_INFO] {
            catalog
                .message_by_name(name)
                .ok_or_else(|| CodecError::UnknownName(name.into()))?;
        }
        let lead_hz = catalog.message_by_name(LEAD_INFO).map(|m| m.hz).unwrap_or(1.0);
        let lead_every = ((1.0 / (lead_hz * dt)).round() as u64).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0AC_CA11);
        let lead_slot = rng.random_range(0..TRACK_COUNT as u8);
        Ok(Self {
            catalog,
            rng,
            lead_slot,
            distractors: distractors.min(TRACK_COUNT as u8 - 1),
            lead_every,
            tolerance: DEFAULT_TOLERANCE,
            dist_noise_std: 0.0,
            vel_noise_std: 0.0,
        })
    }

    pub fn lead_slot(&self) -> u8 {
        self.lead_slot
    }

    fn noisy(&mut self, value: f64, std: f64) -> f64 {
        if std > 0.0 {
            let n = Normal::new(0.0, std).expect("positive std");
            value + n.sample(&mut self.rng)
        } else {
            value
        }
    }

    fn track_frame(&self, slot: u8, dist: f64, vel: f64, t: f64) -> Result<CanFrame, CodecError> {
        let values = HashMap::from([("rel_dist", dist), ("rel_vel", vel), ("valid", 1.0)]);
        self.catalog.encode_frame(&track_message_name(slot as usize), &values, t, 0)
    }

    /// Frames for tick `k` at time `t`. A non-finite `s` emits ego speed only.
    pub fn tick_frames(&mut self, k: u64, t: f64, v: f64, s: f64, delta_v: f64) -> Result<Vec<CanFrame>, CodecError> {
        let mut frames = Vec::with_capacity(2 + self.distractors as usize + 1);
        frames.push(self.catalog.encode_frame(EGO_SPEED, &HashMap::from([("speed", v)]), t, 0)?);
        if !s.is_finite() || !delta_v.is_finite() {
            return Ok(frames);
        }

        let mut tracks: Vec<(u8, f64, f64)> = Vec::with_capacity(1 + self.distractors as usize);
        let dist = self.noisy(s, self.dist_noise_std);
        let vel = self.noisy(delta_v, self.vel_noise_std);
        tracks.push((self.lead_slot, dist, vel));
        for i in 0..self.distractors {
            let slot = (self.lead_slot + 1 + i) % TRACK_COUNT as u8;
            let d = loop {
                let d = self.rng.random_range(DISTRACTOR_RANGE.0..DISTRACTOR_RANGE.1);
                if (d - s).abs() > self.tolerance + DISTRACTOR_MARGIN {
                    break d;
                }
            };
            let dv = self.rng.random_range(-5.0..5.0);
            tracks.push((slot, d, dv));
        }
        tracks.sort_by_key(|(slot, _, _)| *slot);
        for (slot, d, dv) in tracks {
            frames.push(self.track_frame(slot, d, dv, t)?);
        }

        if k.is_multiple_of(self.lead_every) {
            frames.push(self.catalog.encode_frame(LEAD_INFO, &HashMap::from([("lead_dist", s)]), t, 0)?);
        }
        Ok(frames)
    }
}

/// Build a CAN log from a trace, one frame set per sample.
///
/// The track slot of the lead and the distractor placement come from a fixed
/// seed, so the log is a pure function of its inputs.
pub fn synth_can_log(trace: &Trace, catalog: &Catalog, n_distractors: u8) -> Result<Vec<CanFrame>, SimError> {
    if trace.is_empty() {
        return Ok(Vec::new());
    }
    let dt = match trace.samples.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => super::DEFAULT_DT,
    };
    let mut synth = CanSynth::new(catalog.clone(), n_distractors, dt, 0)?;
    let mut frames = Vec::new();
    for (k, s) in trace.samples.iter().enumerate() {
        frames.extend(synth.tick_frames(k as u64, s.t, s.v, s.s, s.delta_v)?);
    }
    Ok(frames)
}

/// Decoding, track buffering and lead association for one receiver.
#[derive(Debug, Clone)]
pub struct CanSensor {
    catalog: Catalog,
    buffer: TrackBuffer,
    tolerance: f64,
    /// Latest association and the time of the raw sample it came from.
    estimate: Option<(LeadEstimate, f64)>,
    speed: Option<f64>,
    /// Estimates older than this are treated as lost.
    pub stale_after: f64,
    skipped: usize,
    /// Names of the messages seen per id, cached.
    names: HashMap<u16, String>,
}

impl CanSensor {
    pub fn new(catalog: Catalog, tolerance: f64, window: f64) -> Self {
        let names = catalog.messages().map(|m| (m.id, m.name.clone())).collect();
        Self {
            catalog,
            buffer: TrackBuffer::new(window),
            tolerance,
            estimate: None,
            speed: None,
            stale_after: 2.5,
            skipped: 0,
            names,
        }
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn speed(&self) -> Option<f64> {
        self.speed
    }

    /// Consume frames sharing one timestamp. Returns true if ego speed was
    /// among them.
    pub fn ingest(&mut self, frames: &[CanFrame]) -> bool {
        let mut had_speed = false;
        let mut lead: Option<LeadTrace> = None;
        for frame in frames {
            let values = match self.catalog.decode_frame(frame) {
                Ok(v) => v,
                Err(e) => {
                    log::debug!("skipping frame {frame}: {e}");
                    self.skipped += 1;
                    continue;
                }
            };
            let get = |n: &str| values.iter().find(|(k, _)| k == n).map(|(_, v)| *v);
            let name = self.names.get(&frame.id).map(String::as_str).unwrap_or("");
            if name == EGO_SPEED {
                if let Some(v) = get("speed") {
                    self.speed = Some(v);
                    had_speed = true;
                }
            } else if name == LEAD_INFO {
                if let Some(d) = get("lead_dist") {
                    lead = Some(LeadTrace {
                        lead_dist: d,
                        timestamp: frame.timestamp,
                    });
                }
            } else if let Some(idx) = track_index(name) {
                let (Some(rel_dist), Some(rel_vel)) = (get("rel_dist"), get("rel_vel")) else {
                    self.skipped += 1;
                    continue;
                };
                let track = RadarTrack {
                    track_index: idx,
                    rel_dist,
                    rel_vel,
                    timestamp: frame.timestamp,
                    valid: get("valid").map(|v| v > 0.5).unwrap_or(true),
                };
                if let Err(e) = self.buffer.push(track) {
                    log::debug!("dropping track: {e}");
                    self.skipped += 1;
                }
            }
        }
        if let Some(lead) = lead {
            if let Some(est) = self.buffer.associate(&lead, self.tolerance) {
                let matched_at = self.buffer.newest_timestamp().unwrap_or(lead.timestamp) - est.age;
                self.estimate = Some((est, matched_at));
            }
        }
        had_speed
    }

    /// Dead-reckoned lead estimate at time `t`.
    pub fn estimate_at(&self, t: f64) -> Option<LeadEstimate> {
        let (est, matched_at) = self.estimate?;
        let since = t - matched_at;
        if since < 0.0 || since > self.stale_after {
            return None;
        }
        Some(est.extrapolate(since - est.age))
    }

    pub fn gap_at(&self, t: f64) -> Option<GapState> {
        let est = self.estimate_at(t)?;
        let v = self.speed?;
        let tau = if v > MIN_SPEED { est.s / v } else { f64::NAN };
        Some(GapState {
            s: est.s,
            delta_v: est.delta_v,
            tau,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    /// Schedule the cue column is recomputed against. Defaults to a single
    /// coached constant time-gap segment spanning the log.
    pub schedule: Option<Schedule>,
    pub tolerance: f64,
    pub window: f64,
    pub stale_after: f64,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self {
            schedule: None,
            tolerance: DEFAULT_TOLERANCE,
            window: DEFAULT_WINDOW,
            stale_after: 2.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub trace: Trace,
    /// Frames that could not be decoded.
    pub skipped: usize,
    /// Samples without a lead estimate.
    pub unmatched: usize,
}

/// Rebuild a trace from time-ordered frames.
///
/// One sample is produced per distinct timestamp that carries ego speed.
pub fn replay(frames: &[CanFrame], catalog: &Catalog, opts: &ReplayOptions) -> Result<ReplayOutput, SimError> {
    if let Some(w) = frames.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(SimError::Codec(CodecError::OutOfOrder {
            line: w + 2,
            previous: frames[w].timestamp,
            timestamp: frames[w + 1].timestamp,
        }));
    }
    let schedule = match &opts.schedule {
        Some(s) => s.clone(),
        None => {
            let span = match (frames.first(), frames.last()) {
                (Some(a), Some(b)) => b.timestamp - a.timestamp,
                _ => 0.0,
            };
            Schedule::single(
                "replay",
                ControlObjective::constant(),
                FeedbackType::Coached,
                span.max(1.0) + 1.0,
            )
            .map_err(|e| SimError::Config(vec![e.to_string()]))?
        }
    };
    let mut director = Director::new(schedule);
    let mut sensor = CanSensor::new(catalog.clone(), opts.tolerance, opts.window);
    sensor.stale_after = opts.stale_after;

    let mut samples = Vec::new();
    let mut unmatched = 0;
    let mut last_t: Option<f64> = None;
    let mut start = 0;
    while start < frames.len() {
        let t = frames[start].timestamp;
        let end = start + frames[start..].iter().take_while(|f| f.timestamp == t).count();
        if sensor.ingest(&frames[start..end]) {
            if let Some(prev) = last_t {
                director.tick(t - prev);
            }
            last_t = Some(t);
            let directive = director.current_directive();
            let v = sensor.speed().unwrap_or(f64::NAN);
            let sample = match sensor.gap_at(t) {
                Some(gap) => {
                    let cue = if gap.tau.is_finite() {
                        coach::step(&directive.objective(), directive.feedback, &gap, directive.set_point)
                            .unwrap_or(CoachCue::None)
                    } else {
                        CoachCue::None
                    };
                    TraceSample {
                        t,
                        v,
                        v_lead: v + gap.delta_v,
                        s: gap.s,
                        delta_v: gap.delta_v,
                        tau: gap.tau,
                        set_point: directive.set_point,
                        cue,
                        mode: directive.mode_label,
                        feedback: directive.feedback,
                    }
                }
                None => {
                    unmatched += 1;
                    TraceSample {
                        t,
                        v,
                        v_lead: f64::NAN,
                        s: f64::NAN,
                        delta_v: f64::NAN,
                        tau: f64::NAN,
                        set_point: directive.set_point,
                        cue: CoachCue::None,
                        mode: directive.mode_label,
                        feedback: directive.feedback,
                    }
                }
            };
            samples.push(sample);
        }
        start = end;
    }
    if unmatched > 0 {
        log::warn!("{unmatched} samples without a lead match");
    }
    if sensor.skipped() > 0 {
        log::warn!("{} frames could not be decoded", sensor.skipped());
    }
    Ok(ReplayOutput {
        trace: Trace {
            samples,
            ..Trace::default()
        },
        skipped: sensor.skipped(),
        unmatched,
    })
}
