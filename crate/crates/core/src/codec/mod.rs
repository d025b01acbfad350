//! CAN log parsing and signal decoding against a bit-level catalog.

mod catalog;
mod frame;
mod signal;

pub use catalog::{
    load_catalog, track_message_name, Catalog, MessageSpec, EGO_SPEED, LEAD_INFO, TRACK_COUNT,
};
pub use frame::{format_log, parse_log, parse_log_line, CanFrame, MAX_STANDARD_ID};
pub use signal::{ByteOrder, SignalSpec};

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("malformed {field}: {text:?}")]
    Parse { field: &'static str, text: String },
    #[error("identifier 0x{0:X} exceeds the 11-bit range")]
    IdRange(u32),
    #[error("payload of {0} bytes exceeds 8")]
    PayloadTooLong(usize),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<CodecError>,
    },
    #[error("line {line}: timestamp {timestamp} precedes {previous}")]
    OutOfOrder {
        line: usize,
        previous: f64,
        timestamp: f64,
    },
    #[error("no message with id 0x{0:03X} in catalog")]
    UnknownMessage(u16),
    #[error("no message named {0} in catalog")]
    UnknownName(String),
    #[error("signal {signal} needs {needed} payload bytes, frame has {got}")]
    Truncated {
        signal: String,
        needed: usize,
        got: usize,
    },
    #[error("signal {0} has an invalid bit layout")]
    Layout(String),
    #[error("value {value} out of range for signal {signal}")]
    Range { signal: String, value: f64 },
    #[error("missing value for signal {0}")]
    MissingSignal(String),
    #[error("catalog syntax: {0}")]
    CatalogSyntax(String),
    #[error("invalid catalog: {}", .0.join("; "))]
    Validation(Vec<String>),
}
