use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cancoach_ffi::*;

fn last_error() -> String {
    let p = cc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn pure_functions() {
    let mut tau = 0.0;
    assert_eq!(unsafe { cc_time_gap(65.25, 29.0, &mut tau) }, CcStatus::Ok);
    assert_eq!(tau, 2.25);
    assert_eq!(unsafe { cc_time_gap(65.0, 0.5, &mut tau) }, CcStatus::RangeError);
    assert!(last_error().contains("too low"));
    assert_eq!(unsafe { cc_time_gap(65.0, 29.0, ptr::null_mut()) }, CcStatus::NullPointer);

    assert_eq!(cc_time_gap_cue(2.0, 2.25, 0.05), CcCue::Decelerate);
    assert_eq!(cc_time_gap_cue(2.3, 2.25, 0.05), CcCue::None);
    assert_eq!(cc_time_gap_cue(2.5, 2.25, 0.05), CcCue::Accelerate);
    assert_eq!(cc_velocity_cue(0.41, 0.4), CcCue::Accelerate);
    assert_eq!(cc_velocity_cue(-0.41, 0.4), CcCue::Decelerate);
    assert_eq!(cc_velocity_cue(0.4, 0.4), CcCue::None);

    let mut pct = 0;
    assert_eq!(unsafe { cc_percent_reduction(0.30, 0.02, &mut pct) }, CcStatus::Ok);
    assert_eq!(pct, 93);
    assert_eq!(unsafe { cc_percent_reduction(0.0, 0.02, &mut pct) }, CcStatus::InvalidArgument);

    let v = unsafe { CStr::from_ptr(cc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn catalog_round_trip() {
    let mut cat = ptr::null_mut();
    assert_eq!(unsafe { cc_catalog_builtin(&mut cat) }, CcStatus::Ok);

    let names = [c("rel_dist"), c("rel_vel"), c("valid")];
    let name_ptrs: Vec<*const c_char> = names.iter().map(|n| n.as_ptr()).collect();
    let values = [42.17, -1.25, 1.0];
    let mut frame = CcFrame {
        timestamp: 0.0,
        bus: 0,
        id: 0,
        len: 0,
        data: [0; 8],
    };
    let msg = c("TRACK_03");
    let status = unsafe {
        cc_catalog_encode(cat, msg.as_ptr(), name_ptrs.as_ptr(), values.as_ptr(), 3, 1.5, 0, &mut frame)
    };
    assert_eq!(status, CcStatus::Ok);
    assert_eq!(frame.id, 0x213);
    assert_eq!(frame.len, 8);

    for (name, want) in names.iter().zip(values) {
        let mut got = f64::NAN;
        assert_eq!(unsafe { cc_catalog_decode(cat, &frame, name.as_ptr(), &mut got) }, CcStatus::Ok);
        assert!((got - want).abs() < 1e-9, "{name:?}: {got} vs {want}");
    }

    let mut got = 0.0;
    let bogus = c("nope");
    assert_eq!(unsafe { cc_catalog_decode(cat, &frame, bogus.as_ptr(), &mut got) }, CcStatus::NotFound);
    let status = unsafe {
        cc_catalog_encode(cat, msg.as_ptr(), name_ptrs.as_ptr(), values.as_ptr(), 2, 1.5, 0, &mut frame)
    };
    assert_eq!(status, CcStatus::NotFound);
    assert!(last_error().contains("valid"));
    let too_far = [1000.0, 0.0, 1.0];
    let status = unsafe {
        cc_catalog_encode(cat, msg.as_ptr(), name_ptrs.as_ptr(), too_far.as_ptr(), 3, 1.5, 0, &mut frame)
    };
    assert_eq!(status, CcStatus::RangeError);

    let line = c("12.500000 0 0B4#00000B54");
    assert_eq!(unsafe { cc_parse_log_line(line.as_ptr(), &mut frame) }, CcStatus::Ok);
    assert_eq!((frame.id, frame.len, frame.timestamp), (0xB4, 4, 12.5));
    let speed = c("speed");
    assert_eq!(unsafe { cc_catalog_decode(cat, &frame, speed.as_ptr(), &mut got) }, CcStatus::Ok);
    assert!((got - 29.0).abs() < 1e-9);
    let bad = c("12.5 0 9999#00");
    assert_eq!(unsafe { cc_parse_log_line(bad.as_ptr(), &mut frame) }, CcStatus::RangeError);

    unsafe { cc_catalog_free(cat) };
    unsafe { cc_catalog_free(ptr::null_mut()) };

    let mut loaded = ptr::null_mut();
    let junk = c("[[message]]\nname = 3");
    assert_eq!(unsafe { cc_catalog_load(junk.as_ptr(), &mut loaded) }, CcStatus::ParseError);
    assert!(loaded.is_null());
}

#[test]
fn ghost_handle() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { cc_ghost_new(29.0, &mut g) }, CcStatus::Ok);
    let mut reset = true;
    for _ in 0..200 {
        assert_eq!(unsafe { cc_ghost_step(g, 30.0, 0.05, &mut reset) }, CcStatus::Ok);
        assert!(!reset);
    }
    let mut gap = 0.0;
    unsafe { cc_ghost_gap(g, &mut gap) };
    assert!((gap - 55.0).abs() < 1e-9);
    // closing at 3.55 m per tick from 55: the 24th tick would pass -30 and
    // resets instead, the remaining 16 ticks leave 65 - 56.8
    for _ in 0..40 {
        unsafe { cc_ghost_step(g, 100.0, 0.05, &mut reset) };
    }
    let mut count = 0;
    unsafe { cc_ghost_reset_count(g, &mut count) };
    assert_eq!(count, 1);
    unsafe { cc_ghost_gap(g, &mut gap) };
    assert!((gap - 8.2).abs() < 1e-9, "{gap}");
    assert_eq!(unsafe { cc_ghost_step(g, 30.0, -1.0, ptr::null_mut()) }, CcStatus::InvalidArgument);
    unsafe { cc_ghost_free(g) };

    assert_eq!(unsafe { cc_ghost_new(0.0, &mut g) }, CcStatus::RangeError);
}

#[test]
fn director_handle() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { cc_director_new_study(360.0, &mut d) }, CcStatus::Ok);
    let mut publishes = 0;
    let mut published = false;
    let mut dir = CcDirective {
        set_point: 0.0,
        feedback: CcFeedback::Coached,
        segment_index: 0,
    };
    let mut events = 0;
    for k in 0..=7200 {
        if k > 0 {
            unsafe { cc_director_tick(d, 0.05, &mut events) };
        }
        unsafe { cc_director_poll_publish(d, &mut published, &mut dir) };
        publishes += published as u32;
        if k == 7199 {
            assert_eq!(dir.segment_index, 0);
        }
    }
    assert_eq!(publishes, 721);
    assert_eq!(events, CC_EVENT_SEGMENT_CHANGED);
    unsafe { cc_director_current(d, &mut dir) };
    assert_eq!(dir.segment_index, 1);
    assert_eq!(dir.set_point, 2.25);
    assert_eq!(dir.feedback, CcFeedback::Instructed);

    let label = unsafe { cc_director_mode_label(d) };
    assert_eq!(unsafe { CStr::from_ptr(label) }.to_str().unwrap(), "ctg_instructed");
    unsafe { cc_string_free(label) };

    unsafe { cc_director_command(d, CcModeCommand::Reverse, &mut events) };
    assert_eq!(events, CC_EVENT_SEGMENT_CHANGED);
    unsafe { cc_director_current(d, &mut dir) };
    assert_eq!(dir.segment_index, 0);
    assert!(dir.set_point.is_nan());
    // the dynamic segment expands into 60 s pieces, 18 segments in all
    let mut advances = 0;
    while !unsafe { cc_director_is_finished(d) } {
        unsafe { cc_director_command(d, CcModeCommand::Advance, &mut events) };
        advances += 1;
    }
    assert_eq!(advances, 18);
    assert_eq!(events, CC_EVENT_COMPLETED);
    assert!(unsafe { cc_director_is_finished(d) });
    unsafe { cc_director_free(d) };
}

const CONFIG: &str = r#"
seed = 3
[driver]
kind = "human"

[[segment]]
label = "ctg_coached"
objective = { kind = "constant_time_gap" }
feedback = "coached"
duration = 2

[[segment]]
label = "ctg_ghost"
objective = { kind = "constant_time_gap" }
feedback = "ghost"
duration = 2
"#;

#[test]
fn simulation_handle() {
    let text = c(CONFIG);
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { cc_director_from_config(text.as_ptr(), ptr::null(), &mut d) }, CcStatus::Ok);
    unsafe { cc_director_free(d) };

    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { cc_sim_from_config(text.as_ptr(), ptr::null(), &mut sim) }, CcStatus::Ok);
    let mut s = std::mem::MaybeUninit::<CcSample>::zeroed();
    assert_eq!(unsafe { cc_sim_step(sim, s.as_mut_ptr()) }, CcStatus::Ok);
    let first = unsafe { s.assume_init() };
    assert_eq!(first.t, 0.0);
    assert!(first.published);
    assert_eq!(first.feedback, CcFeedback::Coached);

    assert_eq!(unsafe { cc_sim_set_throttle(sim, 1.0) }, CcStatus::Ok);
    assert_eq!(unsafe { cc_sim_set_throttle(sim, 1.5) }, CcStatus::RangeError);
    let mut sample = first;
    unsafe { cc_sim_step(sim, &mut sample) };
    unsafe { cc_sim_step(sim, &mut sample) };
    assert!(sample.v > first.v);

    let mut ticks = 3;
    while !sample.finished {
        assert_eq!(unsafe { cc_sim_step(sim, &mut sample) }, CcStatus::Ok);
        ticks += 1;
        if sample.feedback == CcFeedback::Ghost {
            assert_eq!(sample.segment_index, 1);
        }
    }
    assert_eq!(ticks, 81);
    unsafe { cc_sim_free(sim) };

    let bad = c("seed = 1\n");
    assert_eq!(unsafe { cc_sim_from_config(bad.as_ptr(), ptr::null(), &mut sim) }, CcStatus::InvalidArgument);
    assert!(last_error().contains("segment"));
    let syntax = c("seed = ");
    assert_eq!(unsafe { cc_sim_from_config(syntax.as_ptr(), ptr::null(), &mut sim) }, CcStatus::ParseError);
}

#[test]
fn errors_are_per_thread() {
    let mut tau = 0.0;
    unsafe { cc_time_gap(1.0, 0.0, &mut tau) };
    let here = last_error();
    std::thread::spawn(|| assert!(cc_last_error().is_null())).join().unwrap();
    assert_eq!(last_error(), here);
}

/// The generated header must compile as C and C++ on its own.
#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cancoach.h");
    assert!(header.exists(), "missing {}", header.display());
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .output();
        match out {
            Ok(out) => assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr)),
            Err(e) => eprintln!("skipping {compiler}: {e}"),
        }
    }
}
