use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{fisher_yates, KeyedStream};

/// A balanced payload: even length, exactly half ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Watermark {
    bits: Vec<bool>,
}

impl Watermark {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        let k = bits.len();
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::InvalidWatermark(format!(
                "length must be even and at least 2, got {k}"
            )));
        }
        let ones = bits.iter().filter(|&&b| b).count();
        if ones * 2 != k {
            return Err(Error::InvalidWatermark(format!(
                "must be balanced: {ones} ones in {k} bits"
            )));
        }
        Ok(Self { bits })
    }

    /// A uniformly random balanced watermark of length `k`, derived from
    /// `material` (k/2 zeros then k/2 ones, Fisher–Yates shuffled).
    pub fn random(k: usize, material: [u8; 32]) -> Result<Self> {
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::InvalidWatermark(format!(
                "length must be even and at least 2, got {k}"
            )));
        }
        let mut bits: Vec<bool> = (0..k).map(|i| i >= k / 2).collect();
        fisher_yates(&mut bits, &mut KeyedStream::new(material));
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Watermark file contents: one line of `0`/`1`, newline-terminated.
    pub fn to_file_string(&self) -> String {
        format!("{self}\n")
    }
}

impl fmt::Display for Watermark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_to_string(&self.bits))
    }
}

impl FromStr for Watermark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_bits(s.trim_end_matches(['\n', '\r']))?)
    }
}

pub(crate) fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub(crate) fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
        })
        .collect()
}

/// 256-bit secret that seeds the position shuffle.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelKey([u8; 32]);

impl ModelKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 64 || !s.is_ascii() {
            return Err(Error::Parse(format!(
                "model key must be 64 hex characters, got {} characters",
                s.chars().count()
            )));
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
                .map_err(|_| Error::Parse(format!("invalid hex in model key: {s:?}")))?;
        }
        Ok(Self(out))
    }
}

// Keys are secrets; keep them out of debug logs.
impl fmt::Debug for ModelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ModelKey(..)")
    }
}
