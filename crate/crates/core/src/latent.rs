//! Gaussian latent vectors: shape bookkeeping, deterministic sampling and
//! the `LWM1` binary file format.
//!
//! Values are stored flat in row-major `(c, h, w)` order as `f32`, matching
//! the precision of diffusion-model latents and the on-disk format.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::box_muller;
use crate::rng::SplitMix64;

pub const LATENT_MAGIC: &[u8; 4] = b"LWM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatentShape {
    c: u32,
    h: u32,
    w: u32,
}

impl LatentShape {
    pub fn new(c: u32, h: u32, w: u32) -> Result<Self> {
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::InvalidShape { c, h, w });
        }
        Ok(Self { c, h, w })
    }

    /// The 4×64×64 latent of a 512×512 Stable Diffusion image.
    pub fn sd_default() -> Self {
        Self { c: 4, h: 64, w: 64 }
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    /// Total element count `c·h·w`.
    pub fn len(&self) -> usize {
        self.c as usize * self.h as usize * self.w as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for LatentShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.c, self.h, self.w)
    }
}

impl FromStr for LatentShape {
    type Err = Error;

    /// Parses `CxHxW`, e.g. `4x64x64`.
    fn from_str(s: &str) -> Result<Self> {
        let dims: Vec<&str> = s.trim().split(['x', 'X']).collect();
        if dims.len() != 3 {
            return Err(Error::Parse(format!("shape must look like CxHxW, got {s:?}")));
        }
        let mut out = [0u32; 3];
        for (slot, d) in out.iter_mut().zip(&dims) {
            *slot = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad shape dimension {d:?} in {s:?}")))?;
        }
        Self::new(out[0], out[1], out[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Seed(pub u64);

impl Seed {
    pub fn value(self) -> u64 {
        self.0
    }

    pub fn next(self) -> Self {
        Seed(self.0.wrapping_add(1))
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLatent {
    values: Vec<f32>,
    shape: LatentShape,
}

impl GaussianLatent {
    pub fn new(values: Vec<f32>, shape: LatentShape) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::SizeMismatch(format!(
                "shape {shape} needs {} values, got {}",
                shape.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at index {i}")));
        }
        Ok(Self { values, shape })
    }

    pub(crate) fn from_parts_unchecked(values: Vec<f32>, shape: LatentShape) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        Self { values, shape }
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn shape(&self) -> LatentShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes the `LWM1` encoding: magic, `c`, `h`, `w` as u32 LE, then the
    /// values as IEEE-754 binary32 LE.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 4 * self.values.len());
        buf.extend_from_slice(LATENT_MAGIC);
        for d in [self.shape.c, self.shape.h, self.shape.w] {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input
            .read_exact(&mut header)
            .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        if &header[..4] != LATENT_MAGIC {
            return Err(Error::Format("missing LWM1 magic".into()));
        }
        let dim = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let shape = LatentShape::new(dim(0), dim(1), dim(2))?;
        let mut body = Vec::new();
        input.read_to_end(&mut body)?;
        if body.len() != 4 * shape.len() {
            return Err(Error::Format(format!(
                "shape {shape} needs {} payload bytes, found {}",
                4 * shape.len(),
                body.len()
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(values, shape)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

/// Draws `shape.len()` i.i.d. N(0, 1) values.
///
/// Element `2j` and `2j+1` are the cosine and sine outputs of the Box–Muller
/// transform applied to SplitMix64 outputs `2j` and `2j+1` of `seed`, computed
/// in `f64` and rounded to `f32`. For odd lengths the final sine output is
/// discarded.
pub fn sample_latent(shape: LatentShape, seed: Seed) -> GaussianLatent {
    let r = shape.len();
    let mut values = Vec::with_capacity(r + 1);
    let mut stream = SplitMix64::new(seed.0);
    while values.len() < r {
        let (a, b) = box_muller(stream.next_u64(), stream.next_u64());
        values.push(a as f32);
        values.push(b as f32);
    }
    values.truncate(r);
    GaussianLatent::from_parts_unchecked(values, shape)
}
