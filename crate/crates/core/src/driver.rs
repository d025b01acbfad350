//! Longitudinal driver models.
//!
//! The human models are constant-time-gap linear laws with perception noise,
//! a per-driver bias on the target time-gap and, when coached, a delayed
//! response to the audible cue. The ACC model is a noiseless constant-time-gap
//! controller.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coach::{CoachCue, FeedbackType, GapState};

pub const MAX_ACCEL: f64 = 2.0;
pub const MAX_DECEL: f64 = -3.0;
/// Weight of the perception term while coached.
pub const COACHED_PERCEPTION_WEIGHT: f64 = 0.25;

pub const ACC_GAIN_GAP: f64 = 0.23;
pub const ACC_GAIN_SPEED: f64 = 0.4;
/// Rate at which the ACC moves its internal time-gap towards a new setting, s/s.
pub const ACC_SET_POINT_SLEW: f64 = 0.05;

pub fn clamp_accel(a: f64) -> f64 {
    a.clamp(MAX_DECEL, MAX_ACCEL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverParams {
    pub reaction_delay: f64,
    /// Multiplicative noise on the perceived space-gap.
    pub gap_noise_frac: f64,
    pub relvel_noise_std: f64,
    /// Correlation time of the perception noise; 0 gives white noise.
    pub noise_corr_time: f64,
    /// The driver's idea of the set point is `target_bias * tau_star`.
    pub target_bias: f64,
    pub cue_accel: f64,
    pub gain_s: f64,
    pub gain_v: f64,
    /// Std of the driver's own pedal imprecision, m/s^2.
    pub pedal_noise_std: f64,
    /// Correlation time of the pedal imprecision; 0 gives white noise.
    pub pedal_corr_time: f64,
    pub seed: u64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            reaction_delay: 0.5,
            gap_noise_frac: 0.10,
            relvel_noise_std: 0.3,
            noise_corr_time: 15.0,
            target_bias: 1.0,
            cue_accel: 0.3,
            gain_s: 0.05,
            gain_v: 0.4,
            pedal_noise_std: 0.2,
            pedal_corr_time: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DriverError {
    #[error("driver parameter {0} must be non-negative and finite")]
    Negative(&'static str),
    #[error("unknown driver preset {0:?}")]
    UnknownPreset(String),
}

impl DriverParams {
    pub fn noiseless() -> Self {
        Self {
            gap_noise_frac: 0.0,
            relvel_noise_std: 0.0,
            pedal_noise_std: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let checks = [
            ("reaction_delay", self.reaction_delay),
            ("gap_noise_frac", self.gap_noise_frac),
            ("relvel_noise_std", self.relvel_noise_std),
            ("noise_corr_time", self.noise_corr_time),
            ("target_bias", self.target_bias),
            ("cue_accel", self.cue_accel),
            ("gain_s", self.gain_s),
            ("gain_v", self.gain_v),
            ("pedal_noise_std", self.pedal_noise_std),
            ("pedal_corr_time", self.pedal_corr_time),
        ];
        for (name, v) in checks {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DriverError::Negative(name));
            }
        }
        Ok(())
    }
}

/// Six driver presets spanning the spread of an observed cohort: a driver who
/// follows too close, several who hang back, one strongly conservative driver
/// and one close to the target. Reaction delays include hearing the cue and
/// moving the foot; the cue response is a firm pedal change.
pub fn presets() -> Vec<(&'static str, DriverParams)> {
    let p = |bias: f64, noise: f64, delay: f64, seed: u64| DriverParams {
        target_bias: bias,
        gap_noise_frac: noise,
        reaction_delay: delay,
        cue_accel: 0.5,
        seed,
        ..DriverParams::default()
    };
    vec![
        ("driver1", p(0.87, 0.08, 1.5, 1)),
        ("driver2", p(1.06, 0.14, 1.5, 2)),
        ("driver3", p(1.17, 0.18, 1.6, 3)),
        ("driver4", p(1.60, 0.25, 1.8, 4)),
        ("driver5", p(1.17, 0.18, 1.5, 5)),
        ("driver6", p(0.97, 0.17, 1.4, 6)),
    ]
}

pub fn preset(name: &str) -> Result<DriverParams, DriverError> {
    presets()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| p)
        .ok_or_else(|| DriverError::UnknownPreset(name.to_owned()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceivedState {
    pub s_perc: f64,
    pub delta_v_perc: f64,
}

/// Apply perception noise given two standard-normal draws.
pub fn apply_noise(gap: &GapState, params: &DriverParams, n1: f64, n2: f64) -> PerceivedState {
    PerceivedState {
        s_perc: (gap.s * (1.0 + params.gap_noise_frac * n1)).max(0.0),
        delta_v_perc: gap.delta_v + params.relvel_noise_std * n2,
    }
}

/// Seeded source of perception noise.
///
/// Each channel is a unit-variance Gauss-Markov process, so marginally every
/// draw is standard normal while consecutive draws are correlated over
/// `noise_corr_time`. Two normals are consumed per call regardless of state.
#[derive(Debug, Clone)]
pub struct Perceiver {
    rng: ChaCha8Rng,
    n: [f64; 2],
    started: bool,
}

impl Perceiver {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n: [0.0; 2],
            started: false,
        }
    }

    fn draw(&mut self, dt: f64, corr_time: f64) -> (f64, f64) {
        let rho = if corr_time > 0.0 { (-dt / corr_time).exp() } else { 0.0 };
        let innovation = (1.0 - rho * rho).sqrt();
        for n in self.n.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *n = if self.started { rho * *n + innovation * z } else { z };
        }
        self.started = true;
        (self.n[0], self.n[1])
    }

    pub fn perceive(&mut self, gap: &GapState, params: &DriverParams, dt: f64) -> PerceivedState {
        let (n1, n2) = self.draw(dt, params.noise_corr_time);
        apply_noise(gap, params, n1, n2)
    }
}

/// Perception-only term: spacing towards the driver's biased target plus
/// relative-velocity damping. Without a set point only the damping remains.
fn perception_term(p: &PerceivedState, v: f64, tau_star: Option<f64>, params: &DriverParams) -> f64 {
    let spacing = match tau_star {
        Some(tau_star) => params.gain_s * (p.s_perc - params.target_bias * tau_star * v),
        None => 0.0,
    };
    spacing + params.gain_v * p.delta_v_perc
}

pub fn instructed_accel(p: &PerceivedState, v: f64, tau_star: Option<f64>, params: &DriverParams) -> f64 {
    clamp_accel(perception_term(p, v, tau_star, params))
}

/// Cues heard by the driver, stored on change.
#[derive(Debug, Clone, Default)]
pub struct CueHistory {
    entries: VecDeque<(f64, CoachCue)>,
}

impl CueHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `cue` at time `t`; times must be non-decreasing.
    pub fn record(&mut self, t: f64, cue: CoachCue) {
        match self.entries.back() {
            Some(&(_, last)) if last == cue => {}
            _ => self.entries.push_back((t, cue)),
        }
    }

    /// Cue that was playing at time `t`.
    pub fn active_at(&self, t: f64) -> CoachCue {
        self.entries
            .iter()
            .rev()
            .find(|(ts, _)| *ts <= t)
            .map(|&(_, c)| c)
            .unwrap_or(CoachCue::None)
    }

    /// Drop entries that can no longer be the active cue for any time >= `t`.
    pub fn prune_before(&mut self, t: f64) {
        while self.entries.len() > 1 && self.entries[1].0 <= t {
            self.entries.pop_front();
        }
    }
}

pub fn cue_term(cue: CoachCue, params: &DriverParams) -> f64 {
    match cue {
        CoachCue::Accelerate => params.cue_accel,
        CoachCue::Decelerate => -params.cue_accel,
        CoachCue::None => 0.0,
    }
}

/// Acceleration of a driver following cues heard `reaction_delay` ago.
///
/// Coached drivers keep a down-weighted perception term; in ghost mode there
/// is nothing to see, so only the cue acts.
pub fn coached_accel(
    p: &PerceivedState,
    v: f64,
    tau_star: Option<f64>,
    cues: &CueHistory,
    t: f64,
    params: &DriverParams,
    feedback: FeedbackType,
) -> f64 {
    let heard = cues.active_at(t - params.reaction_delay);
    let mut a = cue_term(heard, params);
    match feedback {
        FeedbackType::Coached => a += COACHED_PERCEPTION_WEIGHT * perception_term(p, v, tau_star, params),
        FeedbackType::Instructed => return instructed_accel(p, v, tau_star, params),
        FeedbackType::Ghost => {}
    }
    clamp_accel(a)
}

/// Constant-time-gap ACC law.
pub fn acc_accel(gap: &GapState, v: f64, tau_star: f64, k1: f64, k2: f64) -> f64 {
    clamp_accel(acc_raw(gap, v, tau_star, k1, k2))
}

fn acc_raw(gap: &GapState, v: f64, tau_star: f64, k1: f64, k2: f64) -> f64 {
    k1 * (gap.s - tau_star * v) + k2 * gap.delta_v
}

/// Stateful ACC that slews its internal time-gap setting.
#[derive(Debug, Clone)]
pub struct AccController {
    pub k1: f64,
    pub k2: f64,
    pub slew: f64,
    setting: Option<f64>,
    saturated_ticks: u64,
}

impl Default for AccController {
    fn default() -> Self {
        Self {
            k1: ACC_GAIN_GAP,
            k2: ACC_GAIN_SPEED,
            slew: ACC_SET_POINT_SLEW,
            setting: None,
            saturated_ticks: 0,
        }
    }
}

impl AccController {
    pub fn setting(&self) -> Option<f64> {
        self.setting
    }

    /// Ticks on which the unclamped command left the actuator range.
    pub fn saturated_ticks(&self) -> u64 {
        self.saturated_ticks
    }

    /// With no time-gap set point the ACC holds speed relative to the lead.
    pub fn accel(&mut self, gap: &GapState, v: f64, tau_star: Option<f64>, dt: f64) -> f64 {
        let Some(target) = tau_star else {
            return clamp_accel(self.k2 * gap.delta_v);
        };
        let setting = match self.setting {
            None => target,
            Some(cur) if self.slew > 0.0 => {
                let max_step = self.slew * dt;
                cur + (target - cur).clamp(-max_step, max_step)
            }
            Some(_) => target,
        };
        self.setting = Some(setting);
        let raw = acc_raw(gap, v, setting, self.k1, self.k2);
        if raw >= MAX_ACCEL || raw <= MAX_DECEL {
            self.saturated_ticks += 1;
        }
        clamp_accel(raw)
    }
}

const PEDAL_STREAM: u64 = 0x9EDA_1000;

/// Modeled human whose behaviour follows the active feedback type.
///
/// The control law of the active mode is summed with the driver's pedal
/// imprecision, which acts in every mode.
#[derive(Debug, Clone)]
pub struct HumanDriver {
    pub params: DriverParams,
    perceiver: Perceiver,
    pedal: Perceiver,
    cues: CueHistory,
}

impl HumanDriver {
    pub fn new(params: DriverParams) -> Self {
        Self {
            perceiver: Perceiver::new(params.seed),
            pedal: Perceiver::new(params.seed ^ PEDAL_STREAM),
            params,
            cues: CueHistory::new(),
        }
    }

    /// `cue` is what the coach emits at `t`; the driver reacts to it later.
    #[allow(clippy::too_many_arguments)]
    pub fn accel(
        &mut self,
        t: f64,
        dt: f64,
        v: f64,
        gap: &GapState,
        tau_star: Option<f64>,
        feedback: FeedbackType,
        cue: CoachCue,
    ) -> f64 {
        let perceived = self.perceiver.perceive(gap, &self.params, dt);
        self.cues.record(t, cue);
        let a = match feedback {
            FeedbackType::Instructed => instructed_accel(&perceived, v, tau_star, &self.params),
            _ => coached_accel(&perceived, v, tau_star, &self.cues, t, &self.params, feedback),
        };
        self.cues.prune_before(t - self.params.reaction_delay);
        let (n, _) = self.pedal.draw(dt, self.params.pedal_corr_time);
        clamp_accel(a + self.params.pedal_noise_std * n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gap(s: f64, dv: f64, v: f64) -> GapState {
        GapState { s, delta_v: dv, tau: s / v }
    }

    #[test]
    fn zero_noise_is_identity() {
        let params = DriverParams::noiseless();
        let mut p = Perceiver::new(7);
        let g = gap(65.0, -0.3, 29.0);
        for _ in 0..10 {
            let out = p.perceive(&g, &params, 0.05);
            assert_eq!(out, PerceivedState { s_perc: 65.0, delta_v_perc: -0.3 });
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let params = DriverParams::default();
        let g = gap(65.0, 0.0, 29.0);
        let mut a = Perceiver::new(42);
        let mut b = Perceiver::new(42);
        let mut c = Perceiver::new(43);
        let xs: Vec<_> = (0..50).map(|_| a.perceive(&g, &params, 0.05)).collect();
        let ys: Vec<_> = (0..50).map(|_| b.perceive(&g, &params, 0.05)).collect();
        let zs: Vec<_> = (0..50).map(|_| c.perceive(&g, &params, 0.05)).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn noise_formula() {
        let params = DriverParams::default();
        let p = apply_noise(&gap(65.0, 0.0, 29.0), &params, 1.0, 0.0);
        assert!((p.s_perc - 71.5).abs() < 1e-12);
        let p = apply_noise(&gap(65.0, 0.0, 29.0), &params, -20.0, 0.0);
        assert_eq!(p.s_perc, 0.0);
    }

    #[test]
    fn noise_marginal_is_standard_normal() {
        let params = DriverParams {
            gap_noise_frac: 0.001,
            ..DriverParams::default()
        };
        let mut p = Perceiver::new(3);
        let g = gap(1000.0, 0.0, 29.0);
        // 0.05 s steps, 15 s correlation: ~2e5 draws give ~700 independent samples
        let n: Vec<f64> = (0..200_000)
            .map(|_| p.perceive(&g, &params, 0.05).s_perc - 1000.0)
            .collect();
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        let var = n.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n.len() as f64;
        assert!(mean.abs() < 0.2, "mean {mean}");
        assert!((var - 1.0).abs() < 0.25, "var {var}");
    }

    #[test]
    fn instructed_examples() {
        let params = DriverParams::noiseless();
        let v = 29.0;
        let eq = PerceivedState { s_perc: 2.25 * v, delta_v_perc: 0.0 };
        assert_eq!(instructed_accel(&eq, v, Some(2.25), &params), 0.0);
        let ahead = PerceivedState { s_perc: 2.25 * v + 10.0, delta_v_perc: 0.0 };
        assert!((instructed_accel(&ahead, v, Some(2.25), &params) - 0.5).abs() < 1e-12);
        let close = PerceivedState { s_perc: 0.0, delta_v_perc: -10.0 };
        assert_eq!(instructed_accel(&close, v, Some(2.25), &params), MAX_DECEL);

        let biased = DriverParams { target_bias: 1.6, ..params };
        let eq = PerceivedState { s_perc: 1.6 * 2.25 * v, delta_v_perc: 0.0 };
        assert!(instructed_accel(&eq, v, Some(2.25), &biased).abs() < 1e-12);
    }

    #[test]
    fn coached_examples() {
        let params = DriverParams::noiseless();
        let v = 29.0;
        let eq = PerceivedState { s_perc: 2.25 * v, delta_v_perc: 0.0 };
        let mut cues = CueHistory::new();
        cues.record(9.0, CoachCue::Accelerate);
        let a = coached_accel(&eq, v, Some(2.25), &cues, 10.0, &params, FeedbackType::Ghost);
        assert_eq!(a, 0.3);

        let mut silent = CueHistory::new();
        silent.record(0.0, CoachCue::None);
        assert_eq!(coached_accel(&eq, v, Some(2.25), &silent, 10.0, &params, FeedbackType::Ghost), 0.0);
        assert_eq!(coached_accel(&eq, v, Some(2.25), &silent, 10.0, &params, FeedbackType::Coached), 0.0);
    }

    #[test]
    fn cue_reaction_is_delayed() {
        let params = DriverParams::noiseless();
        let eq = PerceivedState { s_perc: 65.25, delta_v_perc: 0.0 };
        let mut cues = CueHistory::new();
        cues.record(0.0, CoachCue::None);
        cues.record(5.0, CoachCue::Decelerate);
        let at = |t: f64| coached_accel(&eq, 29.0, Some(2.25), &cues, t, &params, FeedbackType::Ghost);
        assert_eq!(at(5.0), 0.0);
        assert_eq!(at(5.49), 0.0);
        assert_eq!(at(5.5), -0.3);
    }

    #[test]
    fn history_pruning_keeps_active_cue() {
        let mut h = CueHistory::new();
        h.record(0.0, CoachCue::Accelerate);
        h.record(1.0, CoachCue::None);
        h.record(2.0, CoachCue::Decelerate);
        h.prune_before(1.5);
        assert_eq!(h.active_at(1.5), CoachCue::None);
        assert_eq!(h.active_at(2.5), CoachCue::Decelerate);
    }

    #[test]
    fn acc_examples() {
        let v = 29.0;
        assert_eq!(acc_accel(&gap(2.25 * v, 0.0, v), v, 2.25, ACC_GAIN_GAP, ACC_GAIN_SPEED), 0.0);
        let a = acc_accel(&gap(2.25 * v + 5.0, 0.0, v), v, 2.25, ACC_GAIN_GAP, ACC_GAIN_SPEED);
        assert!((a - 1.15).abs() < 1e-12);
        assert_eq!(acc_accel(&gap(5.0, -5.0, v), v, 2.25, ACC_GAIN_GAP, ACC_GAIN_SPEED), MAX_DECEL);
    }

    #[test]
    fn acc_slews_setting() {
        let mut acc = AccController::default();
        let g = gap(65.25, 0.0, 29.0);
        acc.accel(&g, 29.0, Some(2.25), 0.05);
        assert_eq!(acc.setting(), Some(2.25));
        acc.accel(&g, 29.0, Some(1.8), 0.05);
        assert!((acc.setting().unwrap() - (2.25 - 0.0025)).abs() < 1e-12);
    }

    #[test]
    fn presets_are_valid() {
        let all = presets();
        assert_eq!(all.len(), 6);
        for (_, p) in &all {
            p.validate().unwrap();
        }
        assert!((preset("driver4").unwrap().target_bias - 1.6).abs() < 1e-12);
        assert!(preset("driver9").is_err());
    }
}
