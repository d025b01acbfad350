use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::coach::{CoachCue, FeedbackType};

pub const TRACE_HEADER: [&str; 10] = [
    "t", "v", "v_lead", "s", "delta_v", "tau", "set_point", "cue", "mode", "feedback",
];

/// One tick of a run: the state the coach saw and the cue it issued.
///
/// `s`, `delta_v`, `tau` and `v_lead` are NaN when no lead estimate was
/// available (replayed logs without a radar match).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub v: f64,
    pub v_lead: f64,
    pub s: f64,
    pub delta_v: f64,
    pub tau: f64,
    pub set_point: Option<f64>,
    pub cue: CoachCue,
    pub mode: String,
    pub feedback: FeedbackType,
}

impl TraceSample {
    pub fn has_lead(&self) -> bool {
        self.s.is_finite() && self.tau.is_finite() && self.delta_v.is_finite()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub directive_publishes: u64,
    pub ghost_resets: u32,
    pub accel_saturated_ticks: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub fingerprint: String,
    pub stats: RunStats,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Contiguous-or-not samples grouped by mode label, in first-seen order.
    pub fn by_mode(&self) -> Vec<(String, Vec<&TraceSample>)> {
        let mut groups: Vec<(String, Vec<&TraceSample>)> = Vec::new();
        for s in &self.samples {
            match groups.iter_mut().find(|(m, _)| *m == s.mode) {
                Some((_, v)) => v.push(s),
                None => groups.push((s.mode.clone(), vec![s])),
            }
        }
        groups
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| SimError::Csv(e.to_string());
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for s in &trace.samples {
        w.write_record([
            num(s.t),
            num(s.v),
            num(s.v_lead),
            num(s.s),
            num(s.delta_v),
            num(s.tau),
            s.set_point.map(num).unwrap_or_default(),
            s.cue.as_str().to_owned(),
            s.mode.clone(),
            s.feedback.as_str().to_owned(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Trace, SimError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| SimError::Csv(e.to_string()))?.clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(SimError::Csv(format!(
            "expected header {}, got {}",
            TRACE_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Csv(e.to_string()))?;
        let row = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let float = |k: usize| -> Result<f64, SimError> {
            let text = field(k);
            if text.is_empty() {
                return Ok(f64::NAN);
            }
            text.parse()
                .map_err(|_| SimError::Csv(format!("row {row}: bad {} value {text:?}", TRACE_HEADER[k])))
        };
        let set_point = match field(6) {
            "" => None,
            _ => Some(float(6)?),
        };
        let cue = CoachCue::parse(field(7))
            .ok_or_else(|| SimError::Csv(format!("row {row}: bad cue {:?}", field(7))))?;
        let feedback = FeedbackType::parse(field(9))
            .ok_or_else(|| SimError::Csv(format!("row {row}: bad feedback {:?}", field(9))))?;
        let t = float(0)?;
        let v = float(1)?;
        if !t.is_finite() || !v.is_finite() {
            return Err(SimError::Csv(format!("row {row}: t and v are required")));
        }
        samples.push(TraceSample {
            t,
            v,
            v_lead: float(2)?,
            s: float(3)?,
            delta_v: float(4)?,
            tau: float(5)?,
            set_point,
            cue,
            mode: field(8).to_owned(),
            feedback,
        });
    }
    Ok(Trace {
        samples,
        ..Trace::default()
    })
}
