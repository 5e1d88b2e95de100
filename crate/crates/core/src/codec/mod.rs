//! Watermark embedding by sign-guided rearrangement of a Gaussian latent,
//! and extraction with repetition voting.
//!
//! Embedding never changes a value, only positions:
//!
//! 1. split the sample into negatives `N` and non-negatives `P` (zero is
//!    non-negative);
//! 2. the `r/4` largest-magnitude members of each become the pools `N₁`,
//!    `P₁`; the watermark, repeated `r/(2k)` times, picks one pool element
//!    per bit (0 → `N₁`, 1 → `P₁`) to build `z_l`;
//! 3. the remaining half `R` is sorted, split at the median position into
//!    `R_n` / `R_p`, and each half is cut into `k/2` equal, sum-balanced
//!    groups; the watermark picks one whole group per bit to build `z_s`;
//! 4. `z_l` and `z_s` are interleaved in blocks of `k` and the result is
//!    permuted by a key-derived shuffle.
//!
//! Extraction inverts the shuffle and interleave, reads one bit per `z_l`
//! element (its sign) and one per `z_s` group (the sign of its sum), and
//! takes a per-position majority over the `r/(2k) + 1` copies.

mod balanced;
mod grouping;
mod mixing;
mod partition;
mod pipeline;
mod shuffle;
mod vote;
mod watermark;

pub use balanced::{balanced_capacity, decode_balanced, encode_balanced};
pub use grouping::{group_spread, symmetric_grouping, GroupPlan};
pub use mixing::{build_group_sequence, build_large_sequence, deinterleave, interleave};
pub use partition::{partition_and_rank, Entry, SignPartition};
pub use pipeline::{
    build_group_plan, embed, embed_into, embed_with_retry, extract, EmbeddingParams, ExtractionResult,
    EMBED_MAX_ATTEMPTS,
};
pub use shuffle::{key_permutation, keyed_shuffle, keyed_unshuffle};
pub use vote::{majority_vote, VoteTally};
pub use watermark::{ModelKey, Watermark};

/// Sign convention shared by embedding and extraction: `v >= 0` reads as bit 1.
#[inline]
pub fn sign_bit(v: f64) -> bool {
    v >= 0.0
}
