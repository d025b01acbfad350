//! Bit-level signal layout and raw <-> physical conversion.

use serde::{Deserialize, Serialize};

use super::CodecError;

/// Byte order of a signal inside the payload.
///
/// `Little` follows the Intel convention: `start_bit` is the least significant
/// bit and bits are numbered `byte * 8 + bit`. `Big` follows the Motorola
/// (DBC) convention: `start_bit` is the most significant bit and the signal
/// continues towards less significant bits in sawtooth order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    Big,
    Little,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub name: String,
    pub start_bit: u8,
    #[serde(rename = "length")]
    pub bit_length: u8,
    #[serde(rename = "order")]
    pub byte_order: ByteOrder,
    #[serde(default)]
    pub signed: bool,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub unit: String,
}

fn default_scale() -> f64 {
    1.0
}

impl SignalSpec {
    /// Linear payload bit positions (`byte * 8 + bit`), most significant first.
    ///
    /// Returns `None` when the layout does not fit inside 64 bits.
    pub fn bit_positions(&self) -> Option<Vec<u8>> {
        if self.bit_length == 0 || self.bit_length > 64 || self.start_bit > 63 {
            return None;
        }
        let len = self.bit_length as u32;
        match self.byte_order {
            ByteOrder::Little => {
                let lsb = self.start_bit as u32;
                if lsb + len > 64 {
                    return None;
                }
                Some((lsb..lsb + len).rev().map(|b| b as u8).collect())
            }
            ByteOrder::Big => {
                let mut out = Vec::with_capacity(len as usize);
                let mut pos = self.start_bit as i32;
                for i in 0..len {
                    if !(0..64).contains(&pos) {
                        return None;
                    }
                    out.push(pos as u8);
                    if i + 1 < len {
                        pos = if pos % 8 == 0 { pos + 15 } else { pos - 1 };
                    }
                }
                Some(out)
            }
        }
    }

    /// Occupied bits as a mask over the linear numbering.
    pub fn bit_mask(&self) -> Option<u64> {
        self.bit_positions()
            .map(|bits| bits.iter().fold(0u64, |m, &b| m | (1u64 << b)))
    }

    /// Number of payload bytes needed to hold this signal.
    pub fn byte_extent(&self) -> Option<usize> {
        self.bit_positions()
            .map(|bits| bits.iter().map(|&b| b as usize / 8 + 1).max().unwrap_or(0))
    }

    pub fn raw_range(&self) -> (i128, i128) {
        let n = self.bit_length as u32;
        if self.signed {
            (-(1i128 << (n - 1)), (1i128 << (n - 1)) - 1)
        } else {
            (0, (1i128 << n) - 1)
        }
    }

    /// Smallest and largest representable physical values.
    pub fn physical_range(&self) -> (f64, f64) {
        let (lo, hi) = self.raw_range();
        let a = self.to_physical(lo);
        let b = self.to_physical(hi);
        (a.min(b), a.max(b))
    }

    pub fn to_physical(&self, raw: i128) -> f64 {
        raw as f64 * self.scale + self.offset
    }

    /// Nearest raw step for a physical value, without range checking.
    pub fn raw_step(&self, value: f64) -> f64 {
        ((value - self.offset) / self.scale).round()
    }

    /// Physical value after quantization to the nearest raw step.
    pub fn quantize(&self, value: f64) -> f64 {
        self.to_physical(self.raw_step(value) as i128)
    }

    pub fn to_raw(&self, value: f64) -> Result<i128, CodecError> {
        if !value.is_finite() {
            return Err(CodecError::Range {
                signal: self.name.clone(),
                value,
            });
        }
        let step = self.raw_step(value);
        let (lo, hi) = self.raw_range();
        if step < lo as f64 || step > hi as f64 {
            return Err(CodecError::Range {
                signal: self.name.clone(),
                value,
            });
        }
        Ok(step as i128)
    }

    /// Extract the raw value from `data`. The caller has checked the extent.
    pub(crate) fn extract(&self, data: &[u8], bits: &[u8]) -> i128 {
        let mut raw: u64 = 0;
        for &b in bits {
            let bit = (data[b as usize / 8] >> (b % 8)) & 1;
            raw = (raw << 1) | bit as u64;
        }
        let n = self.bit_length as u32;
        if self.signed && n < 128 && (raw >> (n - 1)) & 1 == 1 {
            raw as i128 - (1i128 << n)
        } else {
            raw as i128
        }
    }

    pub(crate) fn insert(&self, data: &mut [u8], bits: &[u8], raw: i128) {
        let n = bits.len();
        let unsigned = (raw as u128) & if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
        for (i, &b) in bits.iter().enumerate() {
            let bit = ((unsigned >> (n - 1 - i)) & 1) as u8;
            let byte = &mut data[b as usize / 8];
            *byte = (*byte & !(1 << (b % 8))) | (bit << (b % 8));
        }
    }
}
