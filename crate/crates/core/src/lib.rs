//! Lossless watermarking of Gaussian diffusion latents.
//!
//! A watermark is written into the initial noise of a latent diffusion model
//! purely by permuting the sampled values, so the watermarked latent has
//! exactly the same multiset of values as an unwatermarked one. See
//! [`codec`] for the scheme, [`channel`] for the simulated inversion error,
//! [`stats`] for detection and attribution, and [`harness`] for sweeps.

pub mod channel;
pub mod codec;
pub mod error;
pub mod harness;
pub mod latent;
pub mod rng;
pub mod selftest;
pub mod stats;

pub use channel::{apply_channel, ChannelRun, ChannelSpec};
pub use codec::{embed, embed_with_retry, extract, EmbeddingParams, ExtractionResult, ModelKey, Watermark};
pub use error::{Error, Result};
pub use latent::{sample_latent, GaussianLatent, LatentShape, Seed};
