use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::frame::{CanFrame, MAX_STANDARD_ID};
use super::signal::SignalSpec;
use super::CodecError;

const BUILTIN_CATALOG: &str = include_str!("../../data/catalog.toml");

pub const EGO_SPEED: &str = "EGO_SPEED";
pub const LEAD_INFO: &str = "LEAD_INFO";
pub const TRACK_COUNT: usize = 16;

pub fn track_message_name(index: usize) -> String {
    format!("TRACK_{index:02}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageSpec {
    pub name: String,
    pub id: u16,
    pub hz: f64,
    #[serde(default = "default_dlc")]
    pub dlc: u8,
    #[serde(default, rename = "signal")]
    pub signals: Vec<SignalSpec>,
}

fn default_dlc() -> u8 {
    8
}

impl MessageSpec {
    pub fn signal(&self, name: &str) -> Option<&SignalSpec> {
        self.signals.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Default, Deserialize)]
struct CatalogDocument {
    #[serde(default, rename = "message")]
    messages: Vec<MessageSpec>,
}

/// Frame id -> message layout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    messages: BTreeMap<u16, MessageSpec>,
    by_name: HashMap<String, u16>,
}

impl Catalog {
    /// The synthetic catalog shipped with the crate.
    pub fn builtin() -> Self {
        load_catalog(BUILTIN_CATALOG).expect("builtin catalog is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN_CATALOG
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn message(&self, id: u16) -> Option<&MessageSpec> {
        self.messages.get(&id)
    }

    pub fn message_by_name(&self, name: &str) -> Option<&MessageSpec> {
        self.by_name.get(name).and_then(|id| self.messages.get(id))
    }

    pub fn messages(&self) -> impl Iterator<Item = &MessageSpec> {
        self.messages.values()
    }

    /// Decode every signal of `frame`, in catalog order.
    pub fn decode_frame(&self, frame: &CanFrame) -> Result<Vec<(String, f64)>, CodecError> {
        self.decode_with(frame, |name, value| (name.to_owned(), value))
    }

    /// Same as [`Catalog::decode_frame`] but without allocating names.
    pub fn decode_with<'a, T>(
        &'a self,
        frame: &CanFrame,
        mut f: impl FnMut(&'a str, f64) -> T,
    ) -> Result<Vec<T>, CodecError> {
        let msg = self
            .messages
            .get(&frame.id)
            .ok_or(CodecError::UnknownMessage(frame.id))?;
        let data = frame.payload();
        let mut out = Vec::with_capacity(msg.signals.len());
        for sig in &msg.signals {
            let bits = sig
                .bit_positions()
                .ok_or_else(|| CodecError::Layout(sig.name.clone()))?;
            let needed = bits.iter().map(|&b| b as usize / 8 + 1).max().unwrap_or(0);
            if data.len() < needed {
                return Err(CodecError::Truncated {
                    signal: sig.name.clone(),
                    needed,
                    got: data.len(),
                });
            }
            let raw = sig.extract(data, &bits);
            out.push(f(&sig.name, sig.to_physical(raw)));
        }
        Ok(out)
    }

    /// Build a frame for `message_name`. Every signal must be present in `values`.
    pub fn encode_frame(
        &self,
        message_name: &str,
        values: &HashMap<&str, f64>,
        timestamp: f64,
        bus: u8,
    ) -> Result<CanFrame, CodecError> {
        let msg = self
            .message_by_name(message_name)
            .ok_or_else(|| CodecError::UnknownName(message_name.to_owned()))?;
        let mut data = vec![0u8; msg.dlc as usize];
        for sig in &msg.signals {
            let value = *values
                .get(sig.name.as_str())
                .ok_or_else(|| CodecError::MissingSignal(sig.name.clone()))?;
            let raw = sig.to_raw(value)?;
            let bits = sig
                .bit_positions()
                .ok_or_else(|| CodecError::Layout(sig.name.clone()))?;
            sig.insert(&mut data, &bits, raw);
        }
        CanFrame::new(timestamp, bus, msg.id, &data)
    }
}

/// Parse and validate a catalog document.
pub fn load_catalog(text: &str) -> Result<Catalog, CodecError> {
    let doc: CatalogDocument =
        toml::from_str(text).map_err(|e| CodecError::CatalogSyntax(e.to_string()))?;

    let mut problems = Vec::new();
    let mut messages = BTreeMap::new();
    let mut by_name = HashMap::new();

    for msg in doc.messages {
        if msg.id > MAX_STANDARD_ID {
            problems.push(format!("{}: id 0x{:X} exceeds 11 bits", msg.name, msg.id));
        }
        if msg.dlc > 8 {
            problems.push(format!("{}: dlc {} exceeds 8", msg.name, msg.dlc));
        }
        if !(msg.hz > 0.0) {
            problems.push(format!("{}: hz must be positive", msg.name));
        }
        let mut masks: Vec<(&str, u64)> = Vec::new();
        let mut seen = HashSet::new();
        for sig in &msg.signals {
            if sig.scale == 0.0 || !sig.scale.is_finite() {
                problems.push(format!("{}.{}: scale must be non-zero", msg.name, sig.name));
            }
            match (sig.bit_mask(), sig.byte_extent()) {
                (Some(mask), Some(extent)) => {
                    if extent > msg.dlc as usize {
                        problems.push(format!(
                            "{}.{}: needs {} bytes but dlc is {}",
                            msg.name, sig.name, extent, msg.dlc
                        ));
                    }
                    for (other, other_mask) in &masks {
                        if mask & other_mask != 0 {
                            problems.push(format!(
                                "{}: signals {} and {} overlap",
                                msg.name, other, sig.name
                            ));
                        }
                    }
                    masks.push((&sig.name, mask));
                }
                _ => problems.push(format!(
                    "{}.{}: start_bit {} / length {} does not fit in 64 bits",
                    msg.name, sig.name, sig.start_bit, sig.bit_length
                )),
            }
            if !seen.insert(sig.name.as_str()) {
                problems.push(format!("{}: duplicate signal {}", msg.name, sig.name));
            }
        }
        if by_name.insert(msg.name.clone(), msg.id).is_some() {
            problems.push(format!("duplicate message name {}", msg.name));
        }
        let (id, name) = (msg.id, msg.name.clone());
        if let Some(prev) = messages.insert(id, msg) {
            problems.push(format!(
                "duplicate id 0x{:03X} ({} and {})",
                id, prev.name, name
            ));
        }
    }

    if problems.is_empty() {
        Ok(Catalog { messages, by_name })
    } else {
        Err(CodecError::Validation(problems))
    }
}
