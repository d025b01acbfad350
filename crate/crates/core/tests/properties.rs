mod common;

use std::collections::HashMap;

use cancoach::analytics::{self, FilterThresholds};
use cancoach::codec::{format_log, load_catalog, parse_log, parse_log_line, ByteOrder, CanFrame};
use cancoach::coach::{self, CoachCue, FeedbackType, TIME_GAP_DEADBAND, VELOCITY_DEADBAND};
use cancoach::director::{Director, ModeCommand};
use cancoach::driver::preset;
use cancoach::fusion::{TrackBuffer, DEFAULT_TOLERANCE};
use cancoach::ghost::{GhostState, GHOST_MAX_GAP, GHOST_MIN_GAP};
use cancoach::sim::{self, study, DriverKind, SimConfig, TraceSample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

/// Payload bits of a signal, LSB of the raw value first, derived from the
/// byte/bit description rather than the sawtooth walk.
fn oracle_bits(start: u32, len: u32, order: ByteOrder) -> Option<Vec<u32>> {
    match order {
        ByteOrder::Little => (start + len <= 64).then(|| (start..start + len).collect()),
        ByteOrder::Big => {
            // number bits in transmission order: byte 0 bit 7 is 0, byte 0 bit 0 is 7
            let to_seq = |b: u32| (b / 8) * 8 + (7 - b % 8);
            let from_seq = |n: u32| (n / 8) * 8 + (7 - n % 8);
            let msb = to_seq(start);
            if msb + len > 64 {
                return None;
            }
            Some((0..len).map(|i| from_seq(msb + len - 1 - i)).collect())
        }
    }
}

fn catalog_text(start: u32, len: u32, order: ByteOrder, signed: bool, scale: f64) -> String {
    format!(
        "[[message]]\nname = \"M\"\nid = 0x100\nhz = 10\ndlc = 8\n\n[[message.signal]]\nname = \"x\"\nstart_bit = {start}\nlength = {len}\norder = \"{}\"\nsigned = {signed}\nscale = {scale:?}\noffset = -3.0\n",
        match order {
            ByteOrder::Big => "big",
            ByteOrder::Little => "little",
        }
    )
}

fn cue_rank(c: CoachCue) -> i8 {
    match c {
        CoachCue::Decelerate => -1,
        CoachCue::None => 0,
        CoachCue::Accelerate => 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn signal_layout_matches_oracle(
        start in 0u32..64,
        len in 1u32..=32,
        big in any::<bool>(),
        signed in any::<bool>(),
        scale in prop::sample::select(vec![1.0, 0.5, 0.01, 0.1, 2.0]),
        frac in 0.0f64..1.0,
    ) {
        let order = if big { ByteOrder::Big } else { ByteOrder::Little };
        let Some(bits) = oracle_bits(start, len, order) else {
            prop_assert!(load_catalog(&catalog_text(start, len, order, signed, scale)).is_err());
            return Ok(());
        };
        let cat = load_catalog(&catalog_text(start, len, order, signed, scale)).unwrap();
        let sig = cat.message_by_name("M").unwrap().signal("x").unwrap().clone();
        let (lo, hi) = sig.raw_range();
        let raw = lo + ((hi - lo) as f64 * frac).floor() as i128;
        let value = sig.to_physical(raw);
        let frame = cat.encode_frame("M", &HashMap::from([("x", value)]), 0.0, 0).unwrap();

        let data = frame.payload();
        let mut got: u64 = 0;
        for (i, b) in bits.iter().enumerate() {
            got |= (((data[*b as usize / 8] >> (b % 8)) & 1) as u64) << i;
        }
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        prop_assert_eq!(got, (raw as u64) & mask);
        // nothing outside the signal is touched
        let used: u64 = bits.iter().fold(0, |m, b| m | 1 << b);
        let all = u64::from_le_bytes(data.try_into().unwrap());
        prop_assert_eq!(all & !used, 0);
        prop_assert_eq!(cat.decode_frame(&frame).unwrap()[0].1, value);
    }

    #[test]
    fn log_parser_is_total(line in "\\PC{0,60}") {
        let _ = parse_log_line(&line);
    }

    #[test]
    fn log_parser_is_total_on_near_misses(
        ts in "-?[0-9]{0,4}(\\.[0-9]{0,6})?",
        bus in "[0-9]{0,4}",
        id in "[0-9A-Fa-fx]{0,9}",
        sep in "[#:]?",
        data in "[0-9A-Fa-f ]{0,20}",
    ) {
        let _ = parse_log_line(&format!("{ts} {bus} {id}{sep}{data}"));
    }

    #[test]
    fn log_lines_round_trip(
        ts in 0u32..10_000_000,
        bus in any::<u8>(),
        id in 0u16..=0x7FF,
        data in prop::collection::vec(any::<u8>(), 0..=8),
    ) {
        let frame = CanFrame::new(ts as f64 / 1e3, bus, id, &data).unwrap();
        let text = format_log(std::slice::from_ref(&frame));
        prop_assert_eq!(parse_log(&text).unwrap(), vec![frame]);
    }

    #[test]
    fn time_gap_cue_is_monotone_and_exhaustive(
        tau_star in 0.5f64..4.0,
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
    ) {
        let (t1, t2) = (tau_star + a.min(b), tau_star + a.max(b));
        let (c1, c2) = (
            coach::time_gap_cue(t1, tau_star, TIME_GAP_DEADBAND),
            coach::time_gap_cue(t2, tau_star, TIME_GAP_DEADBAND),
        );
        prop_assert!(cue_rank(c1) <= cue_rank(c2));
        prop_assert_eq!(c1, oracle_time_gap_cue(t1, tau_star, TIME_GAP_DEADBAND));
    }

    #[test]
    fn velocity_cue_is_odd(dv in -3.0f64..3.0) {
        let (up, down) = (coach::velocity_cue(dv, VELOCITY_DEADBAND), coach::velocity_cue(-dv, VELOCITY_DEADBAND));
        prop_assert_eq!(cue_rank(up), -cue_rank(down));
        prop_assert_eq!(up, oracle_velocity_cue(dv, VELOCITY_DEADBAND));
    }

    #[test]
    fn ghost_gap_stays_bounded(speeds in prop::collection::vec(0.0f64..60.0, 1..400)) {
        let mut g = GhostState::default();
        for v in speeds {
            let before = (g.virtual_gap, g.reset_count);
            let expected = before.0 + (g.v_ghost - v) * 0.05;
            let reset = g.step(v, 0.05);
            prop_assert!((GHOST_MIN_GAP..=GHOST_MAX_GAP).contains(&g.virtual_gap));
            prop_assert_eq!(reset, !(GHOST_MIN_GAP..=GHOST_MAX_GAP).contains(&expected));
            if !reset {
                prop_assert_eq!(g.virtual_gap, expected);
                prop_assert_eq!(g.reset_count, before.1);
            } else {
                prop_assert_eq!(g.reset_count, before.1 + 1);
            }
        }
    }

    #[test]
    fn director_is_deterministic(
        ops in prop::collection::vec((0u8..3, 1u32..400), 1..60),
        seg in prop::sample::select(vec![30.0, 60.0, 90.0]),
    ) {
        let run = || {
            let mut d = Director::new(study::study_schedule(seg));
            let mut log = Vec::new();
            for (op, n) in &ops {
                match op {
                    0 => {
                        for _ in 0..*n {
                            d.tick(0.05);
                            if d.poll_publish().is_some() {
                                log.push((d.state().total_elapsed(), d.state().segment_index));
                            }
                        }
                    }
                    1 => log.push((-1.0, d.handle_command(ModeCommand::Advance).is_some() as usize)),
                    _ => log.push((-2.0, d.handle_command(ModeCommand::Reverse).is_some() as usize)),
                }
                prop_assert!(d.state().segment_index < d.schedule().len());
            }
            Ok((log, *d.state()))
        };
        prop_assert_eq!(run()?, run()?);
    }

    #[test]
    fn reverse_rule(index in 1usize..18, ticks in 0u32..200) {
        let mut d = Director::new(study::study_schedule(study::SEGMENT_DURATION));
        prop_assert_eq!(d.schedule().len(), 18);
        for _ in 0..index {
            d.handle_command(ModeCommand::Advance);
        }
        for _ in 0..ticks {
            d.tick(0.05);
        }
        let elapsed = d.state().elapsed_in_segment();
        let at = d.state().segment_index;
        d.handle_command(ModeCommand::Reverse);
        if elapsed > 2.0 {
            prop_assert_eq!(d.state().segment_index, at);
        } else {
            prop_assert_eq!(d.state().segment_index, at - 1);
        }
        prop_assert_eq!(d.state().elapsed_in_segment(), 0.0);
    }

    #[test]
    fn publish_count_follows_cadence(ticks in 0u32..4000) {
        let mut d = Director::new(study::study_schedule(study::SEGMENT_DURATION));
        let mut n = d.poll_publish().is_some() as u32;
        for _ in 0..ticks {
            d.tick(0.05);
            n += d.poll_publish().is_some() as u32;
        }
        prop_assert_eq!(n, ticks / 10 + 1);
    }

    #[test]
    fn stats_match_two_pass(xs in prop::collection::vec(-50.0f64..50.0, 2..500)) {
        let s = analytics::stats(&xs).unwrap();
        let (m, sd) = oracle_mean_std(&xs);
        prop_assert!((s.mean - m).abs() <= 1e-9 * m.abs().max(1.0));
        prop_assert!((s.std - sd).abs() <= 1e-9 * sd.max(1.0));
    }

    #[test]
    fn percentile_matches_oracle(xs in prop::collection::vec(-1e3f64..1e3, 1..200), p in 0.0f64..=100.0) {
        let got = analytics::percentile(&xs, p).unwrap();
        let want = oracle_percentile(&xs, p);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn space_error_is_speed_times_time_error(v in 2.0f64..40.0, tau in 0.5f64..4.0, ts in 0.5f64..4.0) {
        let s = v * tau;
        let et = analytics::time_gap_error(&[tau], &[ts]).unwrap()[0];
        let es = analytics::space_gap_error(&[v], &[s], &[ts]).unwrap()[0];
        prop_assert!((es - v * et).abs() <= 1e-9 * v.max(1.0));
    }

    #[test]
    fn fusion_matches_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (tracks, lead) = random_scene(&mut rng);
        let mut buf = TrackBuffer::default();
        for t in &tracks {
            buf.push(*t).unwrap();
        }
        prop_assert_eq!(buf.associate(&lead, DEFAULT_TOLERANCE), oracle_associate(&tracks, &lead, DEFAULT_TOLERANCE));
    }
}

fn sample(v: f64, dv: f64) -> TraceSample {
    TraceSample {
        t: 0.0,
        v,
        v_lead: v + dv,
        s: 60.0,
        delta_v: dv,
        tau: 60.0 / v,
        set_point: Some(2.25),
        cue: CoachCue::None,
        mode: "m".into(),
        feedback: FeedbackType::Coached,
    }
}

#[test]
fn preprocess_matches_brute_force_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    use rand::Rng;
    let mut samples: Vec<TraceSample> = (0..900)
        .map(|_| sample(rng.random_range(27.0..31.0), rng.random_range(-1.0..1.0)))
        .collect();
    samples.extend((0..100).map(|_| sample(rng.random_range(2.0..10.0), rng.random_range(-1.0..1.0))));

    let v: Vec<f64> = samples.iter().map(|s| s.v).collect();
    let dv: Vec<f64> = samples.iter().map(|s| s.delta_v).collect();
    let (v10, dv5, dv99) = (oracle_percentile(&v, 10.0), oracle_percentile(&dv, 5.0), oracle_percentile(&dv, 99.0));
    let expected: Vec<&TraceSample> = samples
        .iter()
        .filter(|s| !(s.v < v10 || s.delta_v < dv5 || s.delta_v > dv99))
        .collect();
    let refs: Vec<&TraceSample> = samples.iter().collect();
    let kept = analytics::preprocess_samples(&refs);
    assert_eq!(kept.len(), expected.len());
    assert!(kept.iter().zip(&expected).all(|(a, b)| std::ptr::eq(*a, *b)));
    // P10 interpolates between the fastest slow sample and the slowest
    // normal one, so all 100 slow samples go
    assert_eq!(kept.iter().filter(|s| s.v < 20.0).count(), 0);

    let th = FilterThresholds::compute(refs.iter().copied()).unwrap();
    assert_eq!((th.v_min, th.delta_v_min, th.delta_v_max), (v10, dv5, dv99));

    let flat: Vec<TraceSample> = (0..50).map(|_| sample(29.0, 0.0)).collect();
    let refs: Vec<&TraceSample> = flat.iter().collect();
    assert_eq!(analytics::preprocess_samples(&refs).len(), 50);
}

/// Ego integration conserves the gap: each step changes it by exactly
/// `(v_lead - v_next) * dt`.
#[test]
fn closed_loop_gap_conservation() {
    let sched = cancoach::director::Schedule::build(&study::study_segments(60.0)[..3]).unwrap();
    for name in ["driver1", "driver4", "driver6"] {
        let mut cfg = SimConfig::new(sched.clone(), DriverKind::Model(preset(name).unwrap()));
        cfg.seed = 9;
        let trace = sim::run(&cfg).unwrap();
        for w in trace.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(b.v >= 0.0);
            let lead = cfg.lead_profile.speed_at(a.t);
            assert!((a.v_lead - lead).abs() < 1e-12);
            let predicted = a.s + (lead - b.v) * cfg.dt;
            assert!((b.s - predicted).abs() < 1e-9, "{name} t={}: {} vs {}", b.t, b.s, predicted);
        }
        let again = sim::run(&cfg).unwrap();
        assert_eq!(trace.samples, again.samples);
    }
}
