use std::fmt;

use serde::{Deserialize, Serialize};

use super::CodecError;

pub const MAX_STANDARD_ID: u16 = 0x7FF;

/// A classic CAN frame with an 11-bit identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanFrame {
    pub timestamp: f64,
    pub bus: u8,
    pub id: u16,
    data: [u8; 8],
    len: u8,
}

impl CanFrame {
    pub fn new(timestamp: f64, bus: u8, id: u16, payload: &[u8]) -> Result<Self, CodecError> {
        if id > MAX_STANDARD_ID {
            return Err(CodecError::IdRange(id as u32));
        }
        if payload.len() > 8 {
            return Err(CodecError::PayloadTooLong(payload.len()));
        }
        let mut data = [0u8; 8];
        data[..payload.len()].copy_from_slice(payload);
        Ok(Self {
            timestamp,
            bus,
            id,
            data,
            len: payload.len() as u8,
        })
    }

    pub fn payload(&self) -> &[u8] {
        &self.data[..self.len as usize]
    }
}

impl fmt::Display for CanFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} {} {:03X}#", self.timestamp, self.bus, self.id)?;
        for b in self.payload() {
            write!(f, "{b:02X}")?;
        }
        Ok(())
    }
}

/// Parse one `<timestamp> <bus> <ID-hex>#<DATA-hex>` log line.
pub fn parse_log_line(line: &str) -> Result<CanFrame, CodecError> {
    let mut fields = line.split_ascii_whitespace();
    let malformed = |field: &'static str, text: &str| CodecError::Parse {
        field,
        text: text.chars().take(64).collect(),
    };

    let ts_text = fields.next().ok_or_else(|| malformed("timestamp", line))?;
    let timestamp: f64 = ts_text
        .parse()
        .ok()
        .filter(|t: &f64| t.is_finite())
        .ok_or_else(|| malformed("timestamp", ts_text))?;

    let bus_text = fields.next().ok_or_else(|| malformed("bus", line))?;
    let bus: u8 = bus_text.parse().map_err(|_| malformed("bus", bus_text))?;

    let body = fields.next().ok_or_else(|| malformed("frame", line))?;
    if let Some(extra) = fields.next() {
        return Err(malformed("trailing", extra));
    }
    let (id_text, data_text) = body.split_once('#').ok_or_else(|| malformed("frame", body))?;

    if id_text.is_empty() || id_text.len() > 8 || !id_text.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(malformed("id", id_text));
    }
    let id = u32::from_str_radix(id_text, 16).map_err(|_| malformed("id", id_text))?;
    if id > MAX_STANDARD_ID as u32 {
        return Err(CodecError::IdRange(id));
    }

    if data_text.len() % 2 != 0 || !data_text.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(malformed("data", data_text));
    }
    if data_text.len() > 16 {
        return Err(CodecError::PayloadTooLong(data_text.len() / 2));
    }
    let payload: Vec<u8> = data_text
        .as_bytes()
        .chunks(2)
        .map(|pair| {
            // both chars are ASCII hex digits, checked above
            let s = std::str::from_utf8(pair).unwrap_or("00");
            u8::from_str_radix(s, 16).unwrap_or(0)
        })
        .collect();

    CanFrame::new(timestamp, bus, id as u16, &payload)
}

/// Parse a whole log. Blank lines and `#`/`;` comments are skipped.
///
/// Timestamps must be non-decreasing.
pub fn parse_log(text: &str) -> Result<Vec<CanFrame>, CodecError> {
    let mut frames: Vec<CanFrame> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        let frame = parse_log_line(trimmed).map_err(|e| CodecError::AtLine {
            line: idx + 1,
            source: Box::new(e),
        })?;
        if let Some(prev) = frames.last() {
            if frame.timestamp < prev.timestamp {
                return Err(CodecError::OutOfOrder {
                    line: idx + 1,
                    previous: prev.timestamp,
                    timestamp: frame.timestamp,
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn format_log(frames: &[CanFrame]) -> String {
    let mut out = String::with_capacity(frames.len() * 32);
    for f in frames {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ego_speed_line() {
        let f = parse_log_line("1617500000.050 0 0B4#00000B54").unwrap();
        assert_eq!(f.timestamp, 1617500000.050);
        assert_eq!(f.bus, 0);
        assert_eq!(f.id, 0x0B4);
        assert_eq!(f.payload(), &[0x00, 0x00, 0x0B, 0x54]);
    }

    #[test]
    fn parses_short_payload() {
        let f = parse_log_line("0.000 0 2E6#28A0").unwrap();
        assert_eq!(f.id, 0x2E6);
        assert_eq!(f.payload(), &[0x28, 0xA0]);
        let empty = parse_log_line("0.1 1 010#").unwrap();
        assert!(empty.payload().is_empty());
    }

    #[test]
    fn rejects_garbage() {
        match parse_log_line("1.0 0 GARBAGE") {
            Err(CodecError::Parse { field, .. }) => assert_eq!(field, "frame"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_log_line("x 0 0B4#00"),
            Err(CodecError::Parse { field: "timestamp", .. })
        ));
        assert!(matches!(
            parse_log_line("0.0 0 0B4#0"),
            Err(CodecError::Parse { field: "data", .. })
        ));
        assert!(matches!(
            parse_log_line("0.0 0 0B4#000000000000000000"),
            Err(CodecError::PayloadTooLong(9))
        ));
    }

    #[test]
    fn rejects_extended_id() {
        assert!(matches!(parse_log_line("0.0 0 800#00"), Err(CodecError::IdRange(0x800))));
        assert!(parse_log_line("0.0 0 7FF#00").is_ok());
    }

    #[test]
    fn display_round_trips() {
        let f = parse_log_line("12.250000 2 21F#0102030405060708").unwrap();
        assert_eq!(parse_log_line(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn log_ordering() {
        let ok = parse_log("0.0 0 0B4#00\n\n# note\n0.0 0 0B4#01\n0.05 0 0B4#02\n").unwrap();
        assert_eq!(ok.len(), 3);
        assert!(matches!(
            parse_log("1.0 0 0B4#00\n0.5 0 0B4#00\n"),
            Err(CodecError::OutOfOrder { line: 2, .. })
        ));
    }
}
