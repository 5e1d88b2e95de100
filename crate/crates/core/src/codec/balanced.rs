//! Extension: enumerative coding between arbitrary messages and balanced
//! watermarks, for callers whose payload is not already balanced.
//!
//! A message of `balanced_capacity(k)` bits is read as a big-endian integer
//! `n` and mapped to the `n`-th balanced word of length `k` in lexicographic
//! order (0 < 1).

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::watermark::Watermark;
use crate::error::{Error, Result};

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `⌊log₂ C(k, k/2)⌋`: message bits that fit in a balanced word of length `k`.
pub fn balanced_capacity(k: usize) -> Result<usize> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidWatermark(format!(
            "length must be even and at least 2, got {k}"
        )));
    }
    Ok(binomial(k, k / 2).bits() as usize - 1)
}

pub fn encode_balanced(message: &[bool], k: usize) -> Result<Watermark> {
    let cap = balanced_capacity(k)?;
    if message.len() != cap {
        return Err(Error::LengthMismatch {
            left: message.len(),
            right: cap,
        });
    }
    let mut n = BigUint::zero();
    for &b in message {
        n = (n << 1u32) + BigUint::from(b as u8);
    }

    let mut ones_left = k / 2;
    let mut bits = Vec::with_capacity(k);
    for pos in 0..k {
        let remaining = k - pos - 1;
        let zero_first = binomial(remaining, ones_left);
        if n < zero_first {
            bits.push(false);
        } else {
            n -= zero_first;
            bits.push(true);
            ones_left -= 1;
        }
    }
    Watermark::new(bits)
}

pub fn decode_balanced(watermark: &Watermark) -> Result<Vec<bool>> {
    let k = watermark.len();
    let cap = balanced_capacity(k)?;
    let mut ones_left = k / 2;
    let mut n = BigUint::zero();
    for (pos, &b) in watermark.bits().iter().enumerate() {
        if b {
            n += binomial(k - pos - 1, ones_left);
            ones_left -= 1;
        }
    }
    if n.bits() as usize > cap {
        return Err(Error::OutOfRange(format!(
            "balanced word index needs {} bits, capacity is {cap}",
            n.bits()
        )));
    }
    Ok((0..cap)
        .rev()
        .map(|i| n.bit(i as u64))
        .collect())
}
