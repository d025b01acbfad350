//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use cancoach::coach::CoachCue;
use cancoach::fusion::{LeadEstimate, LeadTrace, RadarTrack};
use rand::Rng;

/// Cue from the defining inequalities on the time-gap error.
pub fn oracle_time_gap_cue(tau: f64, tau_star: f64, band: f64) -> CoachCue {
    let too_close = tau_star - tau > band;
    let too_far = tau - tau_star > band;
    match (too_close, too_far) {
        (true, false) => CoachCue::Decelerate,
        (false, true) => CoachCue::Accelerate,
        _ => CoachCue::None,
    }
}

pub fn oracle_velocity_cue(delta_v: f64, band: f64) -> CoachCue {
    if delta_v.abs() <= band || delta_v.is_nan() {
        CoachCue::None
    } else if delta_v > 0.0 {
        CoachCue::Accelerate
    } else {
        CoachCue::Decelerate
    }
}

/// Exhaustive association: every valid track within tolerance is a
/// candidate; the winner has the smallest mismatch, then the newest
/// timestamp, then the lowest index.
pub fn oracle_associate(tracks: &[RadarTrack], lead: &LeadTrace, tolerance: f64) -> Option<LeadEstimate> {
    let newest = tracks.iter().map(|t| t.timestamp).fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<&RadarTrack> = None;
    for t in tracks {
        if !t.valid || (t.rel_dist - lead.lead_dist).abs() > tolerance {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (mt, mb) = ((t.rel_dist - lead.lead_dist).abs(), (b.rel_dist - lead.lead_dist).abs());
                mt < mb
                    || (mt == mb && t.timestamp > b.timestamp)
                    || (mt == mb && t.timestamp == b.timestamp && t.track_index < b.track_index)
            }
        };
        if better {
            best = Some(t);
        }
    }
    best.map(|t| LeadEstimate {
        s: t.rel_dist,
        delta_v: t.rel_vel,
        source_track: t.track_index,
        age: newest - t.timestamp,
    })
}

/// Percentile by linear interpolation between closest ranks, written from
/// the definition with an insertion sort.
pub fn oracle_percentile(data: &[f64], p: f64) -> f64 {
    let mut v: Vec<f64> = Vec::with_capacity(data.len());
    for &x in data {
        let pos = v.iter().position(|&y| y > x).unwrap_or(v.len());
        v.insert(pos, x);
    }
    let h = (v.len() - 1) as f64 * p / 100.0;
    let i = h.floor() as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] + (h - i as f64) * (v[i + 1] - v[i])
}

/// Two-pass mean and sample standard deviation.
pub fn oracle_mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mut sum = 0.0;
    for v in x {
        sum += v;
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for v in x {
        ss += (v - mean) * (v - mean);
    }
    (mean, (ss / (n - 1.0)).sqrt())
}

/// A 16-track buffer snapshot spanning `ticks` 20 Hz ticks where only
/// `lead_slot` is within `tolerance` of the returned lead distance.
pub fn unique_lead_scene(rng: &mut impl Rng, ticks: usize, tolerance: f64) -> (Vec<RadarTrack>, LeadTrace, u8, f64) {
    let lead_slot = rng.random_range(0..16u8);
    let lead_dist = rng.random_range(10.0..150.0);
    let lead_vel = rng.random_range(-5.0..5.0);
    let distractors: Vec<(f64, f64)> = (0..16)
        .map(|_| {
            let off = rng.random_range(tolerance + 1.0..60.0);
            let d = if rng.random_bool(0.5) && lead_dist - off > 1.0 {
                lead_dist - off
            } else {
                lead_dist + off
            };
            (d, rng.random_range(-10.0..10.0))
        })
        .collect();
    let t_end = 10.0;
    let mut tracks = Vec::new();
    for k in 0..ticks {
        let t = t_end - (ticks - 1 - k) as f64 * 0.05;
        for slot in 0..16u8 {
            let (d, v) = if slot == lead_slot {
                (lead_dist + rng.random_range(-0.4 * tolerance..0.4 * tolerance), lead_vel)
            } else {
                distractors[slot as usize]
            };
            tracks.push(RadarTrack {
                track_index: slot,
                rel_dist: d,
                rel_vel: v,
                timestamp: t,
                valid: slot == lead_slot || rng.random_bool(0.8),
            });
        }
    }
    let lead = LeadTrace {
        lead_dist,
        timestamp: t_end,
    };
    (tracks, lead, lead_slot, lead_vel)
}

/// Unstructured scene: distances on a coarse grid so that ties in mismatch
/// and timestamp are common.
pub fn random_scene(rng: &mut impl Rng) -> (Vec<RadarTrack>, LeadTrace) {
    let ticks = rng.random_range(1..=30);
    let lead_dist = rng.random_range(0..40) as f64 * 0.5;
    let mut tracks = Vec::new();
    for k in 0..ticks {
        let t = k as f64 * 0.05;
        for slot in 0..16u8 {
            if rng.random_bool(0.3) {
                continue;
            }
            tracks.push(RadarTrack {
                track_index: slot,
                rel_dist: rng.random_range(0..40) as f64 * 0.5,
                rel_vel: rng.random_range(-400..400) as f64 * 0.01,
                timestamp: t,
                valid: rng.random_bool(0.85),
            });
        }
    }
    let lead = LeadTrace {
        lead_dist,
        timestamp: (ticks - 1) as f64 * 0.05,
    };
    (tracks, lead)
}

pub fn rms(pairs: impl IntoIterator<Item = (f64, f64)>) -> (f64, usize) {
    let (mut ss, mut n) = (0.0, 0usize);
    for (a, b) in pairs {
        ss += (a - b) * (a - b);
        n += 1;
    }
    ((ss / n.max(1) as f64).sqrt(), n)
}
