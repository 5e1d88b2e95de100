//! Building `z_l` and `z_s`, and the block interleave that joins them.

use super::grouping::GroupPlan;
use super::partition::SignPartition;
use super::pipeline::EmbeddingParams;
use super::watermark::Watermark;
use crate::error::{Error, Result};

/// Repeats `m` `r/(2k)` times, taking the next unused element of `N₁` for a
/// 0 bit and of `P₁` for a 1 bit, in descending-magnitude order.
pub fn build_large_sequence(
    m: &Watermark,
    part: &SignPartition,
    params: &EmbeddingParams,
) -> Result<Vec<f32>> {
    if m.len() != params.k() {
        return Err(Error::LengthMismatch {
            left: m.len(),
            right: params.k(),
        });
    }
    let quarter = params.r() / 4;
    if part.large_neg.len() != quarter || part.large_pos.len() != quarter {
        return Err(Error::SizeMismatch(format!(
            "pools hold {} and {} elements, expected {quarter} each",
            part.large_neg.len(),
            part.large_pos.len()
        )));
    }

    let mut neg = part.large_neg.iter();
    let mut pos = part.large_pos.iter();
    let mut out = Vec::with_capacity(params.r() / 2);
    for _ in 0..params.repetitions() {
        for &bit in m.bits() {
            let pool = if bit { &mut pos } else { &mut neg };
            // A balanced m consumes exactly r/4 from each pool.
            let e = pool.next().expect("pool exhausted despite balanced watermark");
            out.push(e.value);
        }
    }
    debug_assert!(neg.next().is_none() && pos.next().is_none());
    Ok(out)
}

/// One pass over `m`, appending the next unused negative group for a 0 bit
/// and the next unused positive group for a 1 bit.
pub fn build_group_sequence(m: &Watermark, plan: &GroupPlan) -> Result<Vec<f32>> {
    if m.len() != 2 * plan.groups_per_side() {
        return Err(Error::LengthMismatch {
            left: m.len(),
            right: 2 * plan.groups_per_side(),
        });
    }
    let mut neg = plan.neg_groups().iter();
    let mut pos = plan.pos_groups().iter();
    let mut out = Vec::with_capacity(m.len() * plan.group_size());
    for &bit in m.bits() {
        let g = if bit { pos.next() } else { neg.next() };
        out.extend_from_slice(g.expect("balanced watermark uses every group once"));
    }
    Ok(out)
}

/// Alternates blocks of `k` elements, `z_l` block first.
pub fn interleave(z_l: &[f32], z_s: &[f32], k: usize) -> Result<Vec<f32>> {
    if z_l.len() != z_s.len() {
        return Err(Error::SizeMismatch(format!(
            "interleave inputs differ in length: {} vs {}",
            z_l.len(),
            z_s.len()
        )));
    }
    if k == 0 || !z_l.len().is_multiple_of(k) {
        return Err(Error::SizeMismatch(format!(
            "block size {k} does not divide {}",
            z_l.len()
        )));
    }
    let mut out = Vec::with_capacity(2 * z_l.len());
    for (a, b) in z_l.chunks_exact(k).zip(z_s.chunks_exact(k)) {
        out.extend_from_slice(a);
        out.extend_from_slice(b);
    }
    Ok(out)
}

pub fn deinterleave(z_m: &[f32], k: usize) -> Result<(Vec<f32>, Vec<f32>)> {
    if k == 0 || !z_m.len().is_multiple_of(2 * k) {
        return Err(Error::SizeMismatch(format!(
            "length {} is not a multiple of 2·{k}",
            z_m.len()
        )));
    }
    let half = z_m.len() / 2;
    let mut z_l = Vec::with_capacity(half);
    let mut z_s = Vec::with_capacity(half);
    for chunk in z_m.chunks_exact(2 * k) {
        z_l.extend_from_slice(&chunk[..k]);
        z_s.extend_from_slice(&chunk[k..]);
    }
    Ok((z_l, z_s))
}
