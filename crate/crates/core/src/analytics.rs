//! Preprocessing filters, gap-error definitions and the per-driver,
//! per-mode error report with percent reductions against an Instructed
//! baseline.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coach::FeedbackType;
use crate::sim::{Trace, TraceSample};

/// Samples with `v` strictly below this percentile are dropped.
pub const SPEED_PERCENTILE: f64 = 10.0;
/// Relative-velocity band kept, as (lower, upper) percentiles.
pub const RELVEL_PERCENTILES: (f64, f64) = (5.0, 99.0);
/// Histogram bin width for time-gap errors, seconds.
pub const HISTOGRAM_BIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty data")]
    Empty,
    #[error("percentile {0} outside 0..=100")]
    Percentile(f64),
    #[error("need at least 2 samples, got {0}")]
    InsufficientData(usize),
}

/// `tau_star - tau`, elementwise.
pub fn time_gap_error(tau: &[f64], set_points: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    if tau.len() != set_points.len() {
        return Err(AnalyticsError::LengthMismatch(tau.len(), set_points.len()));
    }
    Ok(tau.iter().zip(set_points).map(|(t, ts)| ts - t).collect())
}

/// `v * tau_star - s`, elementwise.
pub fn space_gap_error(v: &[f64], s: &[f64], set_points: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    if v.len() != s.len() {
        return Err(AnalyticsError::LengthMismatch(v.len(), s.len()));
    }
    if v.len() != set_points.len() {
        return Err(AnalyticsError::LengthMismatch(v.len(), set_points.len()));
    }
    Ok(v.iter()
        .zip(s)
        .zip(set_points)
        .map(|((v, s), ts)| v * ts - s)
        .collect())
}

/// Linear-interpolation percentile with inclusive endpoints.
pub fn percentile(data: &[f64], p: f64) -> Result<f64, AnalyticsError> {
    if !(0.0..=100.0).contains(&p) {
        return Err(AnalyticsError::Percentile(p));
    }
    if data.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Thresholds computed by [`preprocess`] for one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    pub v_min: f64,
    pub delta_v_min: f64,
    pub delta_v_max: f64,
}

impl FilterThresholds {
    /// Thresholds over the finite values of a segment; `None` if it has no
    /// lead-bearing samples.
    pub fn compute<'a>(samples: impl IntoIterator<Item = &'a TraceSample>) -> Option<Self> {
        let (v, dv): (Vec<f64>, Vec<f64>) = samples
            .into_iter()
            .filter(|s| s.v.is_finite() && s.delta_v.is_finite())
            .map(|s| (s.v, s.delta_v))
            .unzip();
        Some(Self {
            v_min: percentile(&v, SPEED_PERCENTILE).ok()?,
            delta_v_min: percentile(&dv, RELVEL_PERCENTILES.0).ok()?,
            delta_v_max: percentile(&dv, RELVEL_PERCENTILES.1).ok()?,
        })
    }

    pub fn drops(&self, s: &TraceSample) -> bool {
        s.v < self.v_min || s.delta_v < self.delta_v_min || s.delta_v > self.delta_v_max
    }
}

/// Drop low-speed and extreme relative-velocity samples from one segment.
///
/// Samples without a lead estimate take no part in the thresholds and are
/// never dropped here.
pub fn preprocess_samples<'a>(samples: &[&'a TraceSample]) -> Vec<&'a TraceSample> {
    match FilterThresholds::compute(samples.iter().copied()) {
        Some(th) => samples.iter().copied().filter(|s| !th.drops(s)).collect(),
        None => samples.to_vec(),
    }
}

/// Apply [`preprocess_samples`] to every mode segment of a trace.
pub fn preprocess(trace: &Trace) -> Trace {
    let thresholds: BTreeMap<String, Option<FilterThresholds>> = trace
        .by_mode()
        .into_iter()
        .map(|(mode, group)| (mode, FilterThresholds::compute(group)))
        .collect();
    let samples: Vec<TraceSample> = trace
        .samples
        .iter()
        .filter(|s| !matches!(thresholds.get(&s.mode), Some(Some(th)) if th.drops(s)))
        .cloned()
        .collect();
    if samples.is_empty() && !trace.is_empty() {
        log::warn!("preprocessing removed every sample");
    }
    Trace {
        samples,
        fingerprint: trace.fingerprint.clone(),
        stats: trace.stats.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    /// Sample standard deviation (divisor n - 1).
    pub std: f64,
    pub count: usize,
}

pub fn stats(series: &[f64]) -> Result<ErrorStats, AnalyticsError> {
    let n = series.len();
    if n < 2 {
        return Err(AnalyticsError::InsufficientData(n));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let ss: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    Ok(ErrorStats {
        mean,
        std: (ss / (n - 1) as f64).sqrt(),
        count: n,
    })
}

fn round_half_away(x: f64) -> i32 {
    // absorb representation error so that e.g. 62.4999999999 rounds as 62.5
    ((x * 1e9).round() / 1e9).round() as i32
}

/// Integer percent by which `treatment` improves on `baseline`; `None` when
/// the baseline is not positive.
pub fn percent_reduction(baseline: f64, treatment: f64) -> Option<i32> {
    if !(baseline > 0.0) || !treatment.is_finite() {
        return None;
    }
    Some(round_half_away((baseline - treatment) / baseline * 100.0))
}

/// Mean of per-driver integer percents, rounded. Missing entries are skipped.
pub fn aggregate_reduction(percents: &[Option<i32>]) -> Option<i32> {
    let present: Vec<i32> = percents.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    Some(round_half_away(present.iter().sum::<i32>() as f64 / present.len() as f64))
}

/// `(bin_left, count)` pairs over fixed-width bins aligned to multiples of
/// `width`, spanning the observed range without holes.
pub fn histogram(series: &[f64], width: f64) -> Vec<(f64, u64)> {
    let idx: Vec<i64> = series
        .iter()
        .filter(|x| x.is_finite())
        .map(|x| (x / width + 1e-9).floor() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Vec::new();
    };
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for i in idx {
        counts[(i - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| ((lo + k as i64) as f64 * width, c))
        .collect()
}

/// Errors of the samples that have both a lead estimate and a set point.
pub fn sample_errors(samples: &[&TraceSample]) -> (Vec<f64>, Vec<f64>) {
    samples
        .iter()
        .filter(|s| s.has_lead())
        .filter_map(|s| s.set_point.map(|ts| (ts - s.tau, s.v * ts - s.s)))
        .unzip()
}

/// Which mode is compared against which baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub baseline: String,
    pub treatment: String,
}

impl Pairing {
    /// Parse `baseline:treatment`.
    pub fn parse(text: &str) -> Option<Self> {
        let (b, t) = text.split_once(':')?;
        (!b.is_empty() && !t.is_empty()).then(|| Self {
            baseline: b.into(),
            treatment: t.into(),
        })
    }

    /// Pair `<prefix>_coached` and `<prefix>_ghost` with `<prefix>_instructed`.
    pub fn infer(modes: &[String]) -> Vec<Self> {
        let mut out = Vec::new();
        for m in modes {
            let Some((prefix, suffix)) = m.rsplit_once('_') else {
                continue;
            };
            if suffix == "instructed" {
                continue;
            }
            let baseline = format!("{prefix}_instructed");
            if modes.contains(&baseline) {
                out.push(Self {
                    baseline,
                    treatment: m.clone(),
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub driver: String,
    pub mode: String,
    pub feedback: FeedbackType,
    pub samples_total: usize,
    pub samples_kept: usize,
    /// Time-gap error statistics; absent for velocity matching.
    pub tau_stats: Option<ErrorStats>,
    pub sgap_stats: Option<ErrorStats>,
    pub baseline: Option<String>,
    /// Reduction of |mean| against the baseline row.
    pub pct_reduction_mean: Option<i32>,
    pub pct_reduction_std: Option<i32>,
    pub histogram: Vec<(f64, u64)>,
}

/// Cross-driver average for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: String,
    pub drivers: usize,
    /// Mean over drivers of |mean time-gap error|.
    pub abs_mean: f64,
    /// Mean over drivers of the time-gap error std.
    pub std: f64,
    pub pct_reduction_mean: Option<i32>,
    pub pct_reduction_std: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
}

/// A trace together with the driver it belongs to.
#[derive(Debug, Clone)]
pub struct LabeledTrace {
    pub driver: String,
    pub trace: Trace,
}

/// Build the report. With no explicit pairings they are inferred from the
/// mode labels.
pub fn report(inputs: &[LabeledTrace], pairings: &[Pairing]) -> Report {
    let mut rows = Vec::new();
    let mut modes: Vec<String> = Vec::new();
    for input in inputs {
        for (mode, group) in input.trace.by_mode() {
            let kept = preprocess_samples(&group);
            let (eps_tau, eps_s) = sample_errors(&kept);
            if !modes.contains(&mode) {
                modes.push(mode.clone());
            }
            rows.push(ReportRow {
                driver: input.driver.clone(),
                feedback: group[0].feedback,
                mode,
                samples_total: group.len(),
                samples_kept: kept.len(),
                tau_stats: stats(&eps_tau).ok(),
                sgap_stats: stats(&eps_s).ok(),
                baseline: None,
                pct_reduction_mean: None,
                pct_reduction_std: None,
                histogram: histogram(&eps_tau, HISTOGRAM_BIN),
            });
        }
    }

    let pairings = if pairings.is_empty() {
        Pairing::infer(&modes)
    } else {
        pairings.to_vec()
    };
    let lookup: BTreeMap<(String, String), Option<ErrorStats>> = rows
        .iter()
        .map(|r| ((r.driver.clone(), r.mode.clone()), r.tau_stats))
        .collect();
    for row in &mut rows {
        let Some(pair) = pairings.iter().find(|p| p.treatment == row.mode) else {
            continue;
        };
        let Some(base) = lookup.get(&(row.driver.clone(), pair.baseline.clone())) else {
            continue;
        };
        row.baseline = Some(pair.baseline.clone());
        if let (Some(b), Some(t)) = (base, row.tau_stats) {
            row.pct_reduction_mean = percent_reduction(b.mean.abs(), t.mean.abs());
            row.pct_reduction_std = percent_reduction(b.std, t.std);
        }
    }

    let mut summary = Vec::new();
    for mode in &modes {
        let of_mode: Vec<&ReportRow> = rows
            .iter()
            .filter(|r| &r.mode == mode && r.tau_stats.is_some())
            .collect();
        if of_mode.is_empty() {
            continue;
        }
        let n = of_mode.len() as f64;
        let stats = |r: &&ReportRow| r.tau_stats.expect("filtered");
        let paired = of_mode.iter().any(|r| r.baseline.is_some());
        let pm: Vec<Option<i32>> = of_mode.iter().map(|r| r.pct_reduction_mean).collect();
        let ps: Vec<Option<i32>> = of_mode.iter().map(|r| r.pct_reduction_std).collect();
        summary.push(SummaryRow {
            mode: mode.clone(),
            drivers: of_mode.len(),
            abs_mean: of_mode.iter().map(|r| stats(r).mean.abs()).sum::<f64>() / n,
            std: of_mode.iter().map(|r| stats(r).std).sum::<f64>() / n,
            pct_reduction_mean: if paired { aggregate_reduction(&pm) } else { None },
            pct_reduction_std: if paired { aggregate_reduction(&ps) } else { None },
        });
    }
    Report { rows, summary }
}

pub const REPORT_HEADER: [&str; 15] = [
    "driver",
    "mode",
    "feedback",
    "samples_total",
    "samples_kept",
    "tau_mean",
    "tau_abs_mean",
    "tau_std",
    "sgap_mean",
    "sgap_std",
    "baseline",
    "pct_reduction_mean",
    "pct_reduction_std",
    "tau_count",
    "sgap_count",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV row per (driver, mode) followed by one `Avg` row per mode.
pub fn write_report_csv<W: Write>(report: &Report, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.driver.clone(),
            r.mode.clone(),
            r.feedback.as_str().into(),
            r.samples_total.to_string(),
            r.samples_kept.to_string(),
            opt(r.tau_stats.map(|s| s.mean)),
            opt(r.tau_stats.map(|s| s.mean.abs())),
            opt(r.tau_stats.map(|s| s.std)),
            opt(r.sgap_stats.map(|s| s.mean)),
            opt(r.sgap_stats.map(|s| s.std)),
            r.baseline.clone().unwrap_or_default(),
            opt(r.pct_reduction_mean),
            opt(r.pct_reduction_std),
            opt(r.tau_stats.map(|s| s.count)),
            opt(r.sgap_stats.map(|s| s.count)),
        ])?;
    }
    for s in &report.summary {
        w.write_record([
            "Avg".into(),
            s.mode.clone(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            s.abs_mean.to_string(),
            s.std.to_string(),
            String::new(),
            String::new(),
            String::new(),
            opt(s.pct_reduction_mean),
            opt(s.pct_reduction_std),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush()
}

pub fn report_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coach::CoachCue;

    fn sample(v: f64, dv: f64) -> TraceSample {
        TraceSample {
            t: 0.0,
            v,
            v_lead: v + dv,
            s: 2.0 * v,
            delta_v: dv,
            tau: 2.0,
            set_point: Some(2.25),
            cue: CoachCue::None,
            mode: "m".into(),
            feedback: FeedbackType::Coached,
        }
    }

    #[test]
    fn error_definitions() {
        assert_eq!(time_gap_error(&[2.0], &[2.25]).unwrap(), vec![0.25]);
        assert_eq!(time_gap_error(&[2.25], &[2.25]).unwrap(), vec![0.0]);
        let e = space_gap_error(&[29.0, 29.0], &[60.0, 70.0], &[2.25, 2.25]).unwrap();
        assert!((e[0] - 5.25).abs() < 1e-12);
        assert!((e[1] + 4.75).abs() < 1e-12);
        assert_eq!(
            time_gap_error(&[1.0], &[]),
            Err(AnalyticsError::LengthMismatch(1, 0))
        );
        let e = time_gap_error(&[2.0, 2.0], &[2.25, 1.8]).unwrap();
        assert!((e[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 50.0).unwrap(), 2.5);
        let r: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(percentile(&r, 10.0).unwrap(), 10.0);
        assert_eq!(percentile(&r, 0.0).unwrap(), 0.0);
        assert_eq!(percentile(&r, 100.0).unwrap(), 100.0);
        assert_eq!(percentile(&[], 50.0), Err(AnalyticsError::Empty));
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    #[test]
    fn stats_textbook() {
        let s = stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (2.0, 1.0, 3));
        assert_eq!(stats(&[4.0; 10]).unwrap().std, 0.0);
        assert_eq!(stats(&[1.0]), Err(AnalyticsError::InsufficientData(1)));
    }

    #[test]
    fn reductions() {
        assert_eq!(percent_reduction(0.30, 0.02), Some(93));
        assert_eq!(percent_reduction(0.14, 0.04), Some(71));
        assert_eq!(percent_reduction(0.48, 0.18), Some(63));
        assert_eq!(percent_reduction(0.0, 0.1), None);
        let all = [93, 71, 89, 93, 92, 0].map(Some);
        assert_eq!(aggregate_reduction(&all), Some(73));
        assert_eq!(aggregate_reduction(&[None]), None);
    }

    #[test]
    fn constant_speed_not_dropped_by_speed_rule() {
        let samples: Vec<TraceSample> = (0..50).map(|_| sample(29.0, 0.0)).collect();
        let refs: Vec<&TraceSample> = samples.iter().collect();
        assert_eq!(preprocess_samples(&refs).len(), 50);
        let one = [&samples[0]];
        assert_eq!(preprocess_samples(&one).len(), 1);
    }

    #[test]
    fn preprocess_keeps_segment_boundaries() {
        let mut trace = Trace::default();
        for k in 0..100 {
            let mut a = sample(20.0 + k as f64 * 0.1, 0.0);
            a.mode = "a".into();
            trace.samples.push(a);
        }
        for _ in 0..100 {
            let mut b = sample(29.0, 0.0);
            b.mode = "b".into();
            trace.samples.push(b);
        }
        let out = preprocess(&trace);
        // 10 samples of "a" are strictly below its P10, nothing of "b"
        assert_eq!(out.samples.iter().filter(|s| s.mode == "a").count(), 90);
        assert_eq!(out.samples.iter().filter(|s| s.mode == "b").count(), 100);
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.01, 0.12, -0.03], 0.05);
        assert_eq!(h.len(), 4);
        assert_eq!(h[0], (-0.05, 1));
        assert_eq!(h[1], (0.0, 2));
        assert_eq!(h[2].1, 0);
        assert_eq!(h[3].1, 1);
        assert!(histogram(&[], 0.05).is_empty());
    }

    #[test]
    fn pairing_inference() {
        let modes: Vec<String> = ["ctg_instructed", "ctg_coached", "ctg_ghost", "vm_coached"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = Pairing::infer(&modes);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].treatment, "ctg_coached");
        assert_eq!(Pairing::parse("a:b").unwrap().baseline, "a");
        assert!(Pairing::parse("ab").is_none());
    }

    #[test]
    fn empty_report() {
        assert_eq!(report(&[], &[]), Report::default());
    }
}
