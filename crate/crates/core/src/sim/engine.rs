use crate::coach::{self, CoachCue, CoachError, FeedbackType, GapState};
use crate::director::{Director, DirectorEvent, Directive, ModeCommand};
use crate::driver::{clamp_accel, AccController, HumanDriver, MAX_ACCEL, MAX_DECEL};
use crate::ghost::GhostState;

use super::canlog::{CanSensor, CanSynth};
use super::{DriverKind, Sensing, SimConfig, SimError, RunStats, Trace, TraceSample};

/// Map a throttle axis in `[-1, 1]` onto the acceleration range.
pub fn throttle_to_accel(throttle: f64) -> f64 {
    let th = if throttle.is_finite() { throttle.clamp(-1.0, 1.0) } else { 0.0 };
    if th >= 0.0 {
        th * MAX_ACCEL
    } else {
        -th * MAX_DECEL
    }
}

enum DriverImpl {
    Human(Box<HumanDriver>),
    Acc(AccController),
    Input,
}

struct CanPath {
    synth: CanSynth,
    sensor: CanSensor,
}

/// Everything produced by one tick.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub sample: TraceSample,
    pub published: Option<Directive>,
    pub events: Vec<DirectorEvent>,
    pub accel: f64,
}

/// Closed-loop simulation advanced one fixed tick at a time.
///
/// Per tick: director update and publish, lead (or ghost) speed, sensing,
/// coach cue, driver acceleration, ego integration. The recorded sample holds
/// the state at the start of the tick together with the cue issued for it.
pub struct Simulation {
    config: SimConfig,
    k: u64,
    v: f64,
    s: f64,
    director: Director,
    ghost: Option<(GhostState, (String, u64))>,
    command_epoch: u64,
    driver: DriverImpl,
    can: Option<CanPath>,
    throttle: f64,
    stats: RunStats,
}

fn mix_seed(sim_seed: u64, driver_seed: u64) -> u64 {
    sim_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ driver_seed
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let driver = match &config.driver {
            DriverKind::Model(params) => {
                let mut params = params.clone();
                params.seed = mix_seed(config.seed, params.seed);
                DriverImpl::Human(Box::new(HumanDriver::new(params)))
            }
            DriverKind::Acc => DriverImpl::Acc(AccController::default()),
            DriverKind::HumanInput => DriverImpl::Input,
        };
        let can = match &config.sensing {
            Sensing::Truth => None,
            Sensing::CanPath(cfg) => {
                let mut synth = CanSynth::new(cfg.catalog.clone(), cfg.distractors, config.dt, config.seed)?;
                synth.tolerance = cfg.tolerance;
                synth.dist_noise_std = cfg.dist_noise_std;
                synth.vel_noise_std = cfg.vel_noise_std;
                let sensor = CanSensor::new(cfg.catalog.clone(), cfg.tolerance, cfg.window);
                Some(CanPath { synth, sensor })
            }
        };
        Ok(Self {
            director: Director::new(config.schedule.clone()),
            v: config.initial_speed,
            s: config.initial_gap,
            k: 0,
            ghost: None,
            command_epoch: 0,
            driver,
            can,
            throttle: 0.0,
            stats: RunStats::default(),
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.config.dt
    }

    pub fn tick_index(&self) -> u64 {
        self.k
    }

    pub fn speed(&self) -> f64 {
        self.v
    }

    pub fn gap(&self) -> f64 {
        self.s
    }

    pub fn director(&self) -> &Director {
        &self.director
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn set_throttle(&mut self, throttle: f64) {
        self.throttle = if throttle.is_finite() { throttle.clamp(-1.0, 1.0) } else { 0.0 };
    }

    pub fn throttle(&self) -> f64 {
        self.throttle
    }

    pub fn handle_command(&mut self, cmd: ModeCommand) -> Option<DirectorEvent> {
        self.command_epoch += 1;
        self.director.handle_command(cmd)
    }

    fn coach_error(&self, source: CoachError) -> SimError {
        SimError::Coach {
            t: self.time(),
            source,
        }
    }

    fn gap_state(&self, s: f64, v: f64, delta_v: f64) -> Result<GapState, SimError> {
        match GapState::from_kinematics(s, v, delta_v) {
            Ok(g) => Ok(g),
            Err(CoachError::DegenerateSpeed(_)) if self.config.tolerate_low_speed => Ok(GapState {
                s,
                delta_v,
                tau: f64::NAN,
            }),
            Err(e) => Err(self.coach_error(e)),
        }
    }

    pub fn step(&mut self) -> Result<StepOutput, SimError> {
        let dt = self.config.dt;
        let t = self.time();

        // 1. director
        let events = if self.k > 0 { self.director.tick(dt) } else { Vec::new() };
        let published = self.director.poll_publish();
        if published.is_some() {
            self.stats.directive_publishes += 1;
        }
        let directive = self.director.current_directive();

        // 2. lead or ghost
        let v_lead_real = self.config.lead_profile.speed_at(t);
        if directive.feedback == FeedbackType::Ghost {
            let key = (directive.mode_label.clone(), self.command_epoch);
            if self.ghost.as_ref().map(|(_, k)| k) != Some(&key) {
                let ghost = GhostState::new(self.config.ghost_speed)
                    .map_err(|e| SimError::Config(vec![e.to_string()]))?;
                self.ghost = Some((ghost, key));
            }
        } else {
            self.ghost = None;
        }

        // 3. sensing: the driver sees the world, the coach sees its sensors
        let (true_gap, v_lead) = match &self.ghost {
            Some((g, _)) => {
                let gap = match g.gap_state(self.v) {
                    Ok(gap) => gap,
                    Err(CoachError::DegenerateSpeed(_)) if self.config.tolerate_low_speed => GapState {
                        s: g.virtual_gap,
                        delta_v: g.v_ghost - self.v,
                        tau: f64::NAN,
                    },
                    Err(e) => return Err(self.coach_error(e)),
                };
                (gap, g.v_ghost)
            }
            None => (self.gap_state(self.s, self.v, v_lead_real - self.v)?, v_lead_real),
        };
        let sensed = match (&mut self.can, &self.ghost) {
            (Some(can), None) => {
                let frames = can.synth.tick_frames(self.k, t, self.v, true_gap.s, true_gap.delta_v)?;
                can.sensor.ingest(&frames);
                can.sensor.gap_at(t)
            }
            _ => Some(true_gap),
        };

        // 4. coach
        let cue = match sensed {
            Some(g) if g.tau.is_finite() || directive.set_point.is_none() => {
                coach::step(&directive.objective(), directive.feedback, &g, directive.set_point)
                    .map_err(|e| self.coach_error(e))?
            }
            _ => CoachCue::None,
        };

        // 5. driver
        let accel = match &mut self.driver {
            DriverImpl::Human(h) => h.accel(t, dt, self.v, &true_gap, directive.set_point, directive.feedback, cue),
            DriverImpl::Acc(acc) => {
                let g = sensed.unwrap_or(true_gap);
                acc.accel(&g, self.v, directive.set_point, dt)
            }
            DriverImpl::Input => clamp_accel(throttle_to_accel(self.throttle)),
        };
        if accel >= MAX_ACCEL || accel <= MAX_DECEL {
            self.stats.accel_saturated_ticks += 1;
        }

        let (s_rec, dv_rec, tau_rec) = match sensed {
            Some(g) => (g.s, g.delta_v, g.tau),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let sample = TraceSample {
            t,
            v: self.v,
            v_lead: if sensed.is_some() { self.v + dv_rec } else { f64::NAN },
            s: s_rec,
            delta_v: dv_rec,
            tau: tau_rec,
            set_point: directive.set_point,
            cue,
            mode: directive.mode_label,
            feedback: directive.feedback,
        };
        debug_assert!(sensed.is_none() || self.can.is_some() || (sample.v_lead - v_lead).abs() < 1e-9);

        // 6. ego integration
        let v_next = (self.v + accel * dt).max(0.0);
        self.s += (v_lead_real - v_next) * dt;
        if let Some((g, _)) = &mut self.ghost {
            if g.step(v_next, dt) {
                self.stats.ghost_resets += 1;
            }
        }
        self.v = v_next;
        self.k += 1;

        Ok(StepOutput {
            sample,
            published,
            events,
            accel,
        })
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.config)
    }
}

/// FNV-1a over the debug form of the configuration.
pub(crate) fn fingerprint(config: &SimConfig) -> String {
    let text = format!("{config:?}");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Run the configured duration, recording one sample per tick including both
/// endpoints.
pub fn run(config: &SimConfig) -> Result<Trace, SimError> {
    let mut sim = Simulation::new(config.clone())?;
    let ticks = config.ticks();
    let mut samples = Vec::with_capacity(ticks as usize + 1);
    for _ in 0..=ticks {
        samples.push(sim.step()?.sample);
    }
    let mut stats = sim.stats().clone();
    if let DriverImpl::Acc(acc) = &sim.driver {
        stats.accel_saturated_ticks = acc.saturated_ticks();
    }
    Ok(Trace {
        samples,
        fingerprint: sim.fingerprint(),
        stats,
    })
}
