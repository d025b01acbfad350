//! C ABI over the cancoach library.
//!
//! Every fallible function returns a [`CcStatus`]. On failure a description
//! is kept per thread and can be read with [`cc_last_error`]. Objects are
//! opaque handles created by `*_new` style functions and released with the
//! matching `*_free`. Panics never cross the boundary; they are reported as
//! `CC_STATUS_PANIC`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cancoach::analytics;
use cancoach::codec::{self, CanFrame, Catalog, CodecError};
use cancoach::coach::{self, CoachCue, CoachError, FeedbackType};
use cancoach::config::{self, ConfigError};
use cancoach::director::{Director, DirectorEvent, Directive, ModeCommand};
use cancoach::ghost::GhostState;
use cancoach::sim::{study, SimError, Simulation};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    RangeError = 4,
    NotFound = 5,
    Unsupported = 6,
    IoError = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcCue {
    None = 0,
    Accelerate = 1,
    Decelerate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcFeedback {
    Instructed = 0,
    Coached = 1,
    Ghost = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcModeCommand {
    Advance = 0,
    Reverse = 1,
}

/// Bit set in the `events` output of [`cc_director_tick`].
pub const CC_EVENT_SEGMENT_CHANGED: u32 = 1;
pub const CC_EVENT_COMPLETED: u32 = 2;

/// A classic CAN frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcFrame {
    pub timestamp: f64,
    pub bus: u8,
    pub id: u16,
    pub len: u8,
    pub data: [u8; 8],
}

/// Directive published by the director. `set_point` is NaN for velocity
/// matching.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcDirective {
    pub set_point: f64,
    pub feedback: CcFeedback,
    pub segment_index: usize,
}

/// One simulation tick. Quantities that are unavailable are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcSample {
    pub t: f64,
    pub v: f64,
    pub v_lead: f64,
    pub s: f64,
    pub delta_v: f64,
    pub tau: f64,
    pub set_point: f64,
    pub cue: CcCue,
    pub feedback: CcFeedback,
    pub segment_index: usize,
    pub published: bool,
    pub finished: bool,
}

pub struct CcCatalog(Catalog);

pub struct CcGhost(GhostState);

pub struct CcDirector(Director);

pub struct CcSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(CcStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(CcStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Failure(CcStatus::InvalidArgument, msg.into())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        let status = match &e {
            CodecError::Range { .. } | CodecError::IdRange(_) | CodecError::PayloadTooLong(_) => CcStatus::RangeError,
            CodecError::UnknownMessage(_) | CodecError::UnknownName(_) | CodecError::MissingSignal(_) => {
                CcStatus::NotFound
            }
            CodecError::Truncated { .. } | CodecError::Layout(_) => CcStatus::InvalidArgument,
            _ => CcStatus::ParseError,
        };
        Failure(status, e.to_string())
    }
}

impl From<CoachError> for Failure {
    fn from(e: CoachError) -> Self {
        let status = match e {
            CoachError::DegenerateSpeed(_) => CcStatus::RangeError,
            CoachError::UnsupportedCombination => CcStatus::Unsupported,
            _ => CcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let status = match e {
            ConfigError::Io { .. } => CcStatus::IoError,
            ConfigError::Syntax(_) => CcStatus::ParseError,
            ConfigError::Invalid(_) => CcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Coach { source, t } => {
                let Failure(status, msg) = Failure::from(source);
                Failure(status, format!("t={t:.2}s: {msg}"))
            }
            SimError::Codec(c) => c.into(),
            SimError::Io(io) => Failure(CcStatus::IoError, io.to_string()),
            other => Failure(CcStatus::InvalidArgument, other.to_string()),
        }
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn cue_out(c: CoachCue) -> CcCue {
    match c {
        CoachCue::None => CcCue::None,
        CoachCue::Accelerate => CcCue::Accelerate,
        CoachCue::Decelerate => CcCue::Decelerate,
    }
}

fn feedback_out(f: FeedbackType) -> CcFeedback {
    match f {
        FeedbackType::Instructed => CcFeedback::Instructed,
        FeedbackType::Coached => CcFeedback::Coached,
        FeedbackType::Ghost => CcFeedback::Ghost,
    }
}

fn command_in(c: CcModeCommand) -> ModeCommand {
    match c {
        CcModeCommand::Advance => ModeCommand::Advance,
        CcModeCommand::Reverse => ModeCommand::Reverse,
    }
}

fn frame_in(f: &CcFrame) -> Result<CanFrame, Failure> {
    if f.len > 8 {
        return Err(Failure(CcStatus::RangeError, format!("frame length {} exceeds 8", f.len)));
    }
    Ok(CanFrame::new(f.timestamp, f.bus, f.id, &f.data[..f.len as usize])?)
}

fn frame_out(f: &CanFrame) -> CcFrame {
    let payload = f.payload();
    let mut data = [0u8; 8];
    data[..payload.len()].copy_from_slice(payload);
    CcFrame {
        timestamp: f.timestamp,
        bus: f.bus,
        id: f.id,
        len: payload.len() as u8,
        data,
    }
}

fn directive_out(d: &Directive, segment_index: usize) -> CcDirective {
    CcDirective {
        set_point: d.set_point.unwrap_or(f64::NAN),
        feedback: feedback_out(d.feedback),
        segment_index,
    }
}

/// Message describing the last failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn string_out(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul removed").into_raw()
}

// ---- coach ----

/// `s / v`; fails with `CC_STATUS_RANGE_ERROR` when `v` is at or below 1 m/s.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_time_gap(s: f64, v: f64, out: *mut f64) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = coach::compute_time_gap(s, v)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn cc_time_gap_cue(tau: f64, tau_star: f64, deadband: f64) -> CcCue {
    cue_out(coach::time_gap_cue(tau, tau_star, deadband))
}

#[no_mangle]
pub extern "C" fn cc_velocity_cue(delta_v: f64, deadband: f64) -> CcCue {
    cue_out(coach::velocity_cue(delta_v, deadband))
}

/// Integer percent reduction from `baseline` to `treatment`. Fails with
/// `CC_STATUS_INVALID_ARGUMENT` when the baseline is not positive.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_percent_reduction(baseline: f64, treatment: f64, out: *mut i32) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = analytics::percent_reduction(baseline, treatment)
            .ok_or_else(|| Failure::invalid(format!("no reduction from baseline {baseline} to {treatment}")))?;
        Ok(())
    })
}

// ---- codec ----

/// Parse one `<ts> <bus> <ID>#<HEX>` log line.
///
/// # Safety
/// `line` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_parse_log_line(line: *const c_char, out: *mut CcFrame) -> CcStatus {
    guard(|| {
        let line = str_arg(line, "line")?;
        let out = out_arg(out, "out")?;
        *out = frame_out(&codec::parse_log_line(line)?);
        Ok(())
    })
}

/// The built-in vehicle catalog.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_catalog_builtin(out: *mut *mut CcCatalog) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = boxed(CcCatalog(Catalog::builtin()));
        Ok(())
    })
}

/// Parse a TOML catalog document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_catalog_load(text: *const c_char, out: *mut *mut CcCatalog) -> CcStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        *out = boxed(CcCatalog(codec::load_catalog(text)?));
        Ok(())
    })
}

/// # Safety
/// `catalog` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_catalog_free(catalog: *mut CcCatalog) {
    free(catalog)
}

/// Decode one named signal from `frame`.
///
/// # Safety
/// Pointers must be valid; `signal` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cc_catalog_decode(
    catalog: *const CcCatalog,
    frame: *const CcFrame,
    signal: *const c_char,
    out: *mut f64,
) -> CcStatus {
    guard(|| {
        let catalog = &handle(catalog, "catalog")?.0;
        let frame = frame_in(handle(frame, "frame")?)?;
        let signal = str_arg(signal, "signal")?;
        let out = out_arg(out, "out")?;
        let values = catalog.decode_with(&frame, |name, v| (name, v))?;
        *out = values
            .into_iter()
            .find(|(n, _)| *n == signal)
            .map(|(_, v)| v)
            .ok_or_else(|| Failure(CcStatus::NotFound, format!("message 0x{:03X} has no signal {signal}", frame.id)))?;
        Ok(())
    })
}

/// Encode `message` from `count` signal name/value pairs. Every signal of the
/// message must be given.
///
/// # Safety
/// `names` and `values` must each point to `count` elements; other pointers
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_catalog_encode(
    catalog: *const CcCatalog,
    message: *const c_char,
    names: *const *const c_char,
    values: *const f64,
    count: usize,
    timestamp: f64,
    bus: u8,
    out: *mut CcFrame,
) -> CcStatus {
    guard(|| {
        let catalog = &handle(catalog, "catalog")?.0;
        let message = str_arg(message, "message")?;
        let out = out_arg(out, "out")?;
        if count > 0 && (names.is_null() || values.is_null()) {
            return Err(Failure::null("names/values"));
        }
        let mut map = HashMap::with_capacity(count);
        for i in 0..count {
            map.insert(str_arg(*names.add(i), "signal name")?, *values.add(i));
        }
        *out = frame_out(&catalog.encode_frame(message, &map, timestamp, bus)?);
        Ok(())
    })
}

// ---- ghost ----

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_ghost_new(v_ghost: f64, out: *mut *mut CcGhost) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = GhostState::new(v_ghost).map_err(|e| Failure(CcStatus::RangeError, e.to_string()))?;
        *out = boxed(CcGhost(g));
        Ok(())
    })
}

/// Advance the virtual gap by `dt`. `reset` (may be null) receives whether
/// the gap left its bounds and was re-initialised.
///
/// # Safety
/// `ghost` must be a live handle; `reset` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cc_ghost_step(ghost: *mut CcGhost, v_ego: f64, dt: f64, reset: *mut bool) -> CcStatus {
    guard(|| {
        let g = &mut handle_mut(ghost, "ghost")?.0;
        if dt < 0.0 || !dt.is_finite() || !v_ego.is_finite() {
            return Err(Failure::invalid(format!("bad step v_ego={v_ego} dt={dt}")));
        }
        let r = g.step(v_ego, dt);
        if let Some(out) = reset.as_mut() {
            *out = r;
        }
        Ok(())
    })
}

/// # Safety
/// `ghost` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_ghost_gap(ghost: *const CcGhost, out: *mut f64) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(ghost, "ghost")?.0.virtual_gap;
        Ok(())
    })
}

/// # Safety
/// `ghost` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_ghost_reset_count(ghost: *const CcGhost, out: *mut u32) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(ghost, "ghost")?.0.reset_count;
        Ok(())
    })
}

/// # Safety
/// `ghost` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_ghost_free(ghost: *mut CcGhost) {
    free(ghost)
}

// ---- director ----

/// The eight-segment study schedule with `segment_duration` seconds per
/// segment.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_director_new_study(segment_duration: f64, out: *mut *mut CcDirector) -> CcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if segment_duration <= 0.0 || !segment_duration.is_finite() {
            return Err(Failure(CcStatus::RangeError, format!("segment duration {segment_duration}")));
        }
        *out = boxed(CcDirector(Director::new(study::study_schedule(segment_duration))));
        Ok(())
    })
}

/// Director for the `[[segment]]` entries of a run configuration document.
/// `base_dir` (may be null) resolves relative paths in the document.
///
/// # Safety
/// `toml` must be NUL-terminated, `base_dir` null or NUL-terminated, `out`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn cc_director_from_config(
    toml: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut CcDirector,
) -> CcStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let base = if base_dir.is_null() { "." } else { str_arg(base_dir, "base_dir")? };
        let out = out_arg(out, "out")?;
        let cfg = config::parse_config(text, Path::new(base))?;
        *out = boxed(CcDirector(Director::new(cfg.schedule)));
        Ok(())
    })
}

/// # Safety
/// `director` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_director_free(director: *mut CcDirector) {
    free(director)
}

/// Advance the clock by `dt`. `events` (may be null) receives a mask of
/// `CC_EVENT_*` bits.
///
/// # Safety
/// `director` must be a live handle; `events` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cc_director_tick(director: *mut CcDirector, dt: f64, events: *mut u32) -> CcStatus {
    guard(|| {
        let d = &mut handle_mut(director, "director")?.0;
        if dt < 0.0 || !dt.is_finite() {
            return Err(Failure::invalid(format!("dt {dt}")));
        }
        let mask = d.tick(dt).iter().fold(0, |m, e| {
            m | match e {
                DirectorEvent::SegmentChanged { .. } => CC_EVENT_SEGMENT_CHANGED,
                DirectorEvent::Completed => CC_EVENT_COMPLETED,
            }
        });
        if let Some(out) = events.as_mut() {
            *out = mask;
        }
        Ok(())
    })
}

/// If a publish is due, mark it and fill `out`; `published` tells which.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_director_poll_publish(
    director: *mut CcDirector,
    published: *mut bool,
    out: *mut CcDirective,
) -> CcStatus {
    guard(|| {
        let d = &mut handle_mut(director, "director")?.0;
        let published = out_arg(published, "published")?;
        let out = out_arg(out, "out")?;
        let idx = d.state().segment_index;
        match d.poll_publish() {
            Some(dir) => {
                *out = directive_out(&dir, idx);
                *published = true;
            }
            None => *published = false,
        }
        Ok(())
    })
}

/// The directive in force now, without publishing.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_director_current(director: *const CcDirector, out: *mut CcDirective) -> CcStatus {
    guard(|| {
        let d = &handle(director, "director")?.0;
        *out_arg(out, "out")? = directive_out(&d.current_directive(), d.state().segment_index);
        Ok(())
    })
}

/// Apply an operator command. `events` (may be null) receives `CC_EVENT_*`
/// bits.
///
/// # Safety
/// `director` must be a live handle; `events` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cc_director_command(
    director: *mut CcDirector,
    command: CcModeCommand,
    events: *mut u32,
) -> CcStatus {
    guard(|| {
        let d = &mut handle_mut(director, "director")?.0;
        let mask = match d.handle_command(command_in(command)) {
            Some(DirectorEvent::SegmentChanged { .. }) => CC_EVENT_SEGMENT_CHANGED,
            Some(DirectorEvent::Completed) => CC_EVENT_COMPLETED,
            None => 0,
        };
        if let Some(out) = events.as_mut() {
            *out = mask;
        }
        Ok(())
    })
}

/// Seconds elapsed in the current segment.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_director_elapsed(director: *const CcDirector, out: *mut f64) -> CcStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(director, "director")?.0.state().elapsed_in_segment();
        Ok(())
    })
}

/// # Safety
/// `director` must be a live handle or null (reported as finished).
#[no_mangle]
pub unsafe extern "C" fn cc_director_is_finished(director: *const CcDirector) -> bool {
    director.as_ref().is_none_or(|d| d.0.is_finished())
}

/// Label of the current segment; release with [`cc_string_free`]. Null on
/// error.
///
/// # Safety
/// `director` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_director_mode_label(director: *const CcDirector) -> *mut c_char {
    let mut label = ptr::null_mut();
    guard(|| {
        label = string_out(&handle(director, "director")?.0.current_segment().label);
        Ok(())
    });
    label
}

// ---- simulation ----

/// Simulation from a run configuration document. `base_dir` (may be null)
/// resolves relative catalog paths.
///
/// # Safety
/// `toml` must be NUL-terminated, `base_dir` null or NUL-terminated, `out`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn cc_sim_from_config(
    toml: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut CcSimulation,
) -> CcStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let base = if base_dir.is_null() { "." } else { str_arg(base_dir, "base_dir")? };
        let out = out_arg(out, "out")?;
        let cfg = config::parse_config(text, Path::new(base))?;
        *out = boxed(CcSimulation(Simulation::new(cfg)?));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cc_sim_free(sim: *mut CcSimulation) {
    free(sim)
}

/// Advance one tick and report the state at its start.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_sim_step(sim: *mut CcSimulation, out: *mut CcSample) -> CcStatus {
    guard(|| {
        let sim = &mut handle_mut(sim, "sim")?.0;
        let out = out_arg(out, "out")?;
        let step = sim.step()?;
        let s = &step.sample;
        *out = CcSample {
            t: s.t,
            v: s.v,
            v_lead: s.v_lead,
            s: s.s,
            delta_v: s.delta_v,
            tau: s.tau,
            set_point: s.set_point.unwrap_or(f64::NAN),
            cue: cue_out(s.cue),
            feedback: feedback_out(s.feedback),
            segment_index: sim.director().state().segment_index,
            published: step.published.is_some(),
            finished: sim.director().is_finished(),
        };
        Ok(())
    })
}

/// Throttle for the next tick, in `[-1, 1]`. Only used by `kind = "human"`
/// drivers.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_sim_set_throttle(sim: *mut CcSimulation, throttle: f64) -> CcStatus {
    guard(|| {
        let sim = &mut handle_mut(sim, "sim")?.0;
        if !(-1.0..=1.0).contains(&throttle) {
            return Err(Failure(CcStatus::RangeError, format!("throttle {throttle} outside [-1, 1]")));
        }
        sim.set_throttle(throttle);
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle; `events` null or valid.
#[no_mangle]
pub unsafe extern "C" fn cc_sim_command(sim: *mut CcSimulation, command: CcModeCommand, events: *mut u32) -> CcStatus {
    guard(|| {
        let sim = &mut handle_mut(sim, "sim")?.0;
        let mask = match sim.handle_command(command_in(command)) {
            Some(DirectorEvent::SegmentChanged { .. }) => CC_EVENT_SEGMENT_CHANGED,
            Some(DirectorEvent::Completed) => CC_EVENT_COMPLETED,
            None => 0,
        };
        if let Some(out) = events.as_mut() {
            *out = mask;
        }
        Ok(())
    })
}
