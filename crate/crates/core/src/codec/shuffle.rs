use super::watermark::ModelKey;
use crate::error::{Error, Result};
use crate::latent::{GaussianLatent, LatentShape};
use crate::rng::{fisher_yates, KeyedStream};

/// The permutation `π` with `shuffled[i] = original[π[i]]`: Fisher–Yates
/// over `0..r` driven by ChaCha20 keyed with the model key.
pub fn key_permutation(key: &ModelKey, r: usize) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..r as u32).collect();
    fisher_yates(&mut perm, &mut KeyedStream::new(*key.as_bytes()));
    perm
}

pub fn keyed_shuffle(z_m: &[f32], key: &ModelKey, shape: LatentShape) -> Result<GaussianLatent> {
    if z_m.len() != shape.len() {
        return Err(Error::SizeMismatch(format!(
            "cannot shuffle {} values into shape {shape}",
            z_m.len()
        )));
    }
    let perm = key_permutation(key, z_m.len());
    let values = perm.iter().map(|&src| z_m[src as usize]).collect();
    Ok(GaussianLatent::from_parts_unchecked(values, shape))
}

pub fn keyed_unshuffle(z_wt: &GaussianLatent, key: &ModelKey) -> Vec<f32> {
    let src = z_wt.values();
    let perm = key_permutation(key, src.len());
    let mut out = vec![0.0f32; src.len()];
    for (&dst, &v) in perm.iter().zip(src) {
        out[dst as usize] = v;
    }
    out
}
