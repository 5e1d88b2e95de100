//! Quick invariant checks runnable from the command line.

use crate::channel::{flip_probability, ChannelSpec};
use crate::codec::{embed_with_retry, extract, EmbeddingParams, ModelKey, Watermark};
use crate::error::Result;
use crate::harness::{run_cell, trial_seed, TrialMaterial};
use crate::latent::{sample_latent, LatentShape, Seed};
use crate::stats::{bit_accuracy, detection_threshold, ks_test_standard_normal};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let shape = LatentShape::sd_default();
    let params = EmbeddingParams::new(shape, 256)?;

    let taus: Vec<usize> = [32, 48, 256]
        .iter()
        .map(|&k| detection_threshold(k, 1e-6).map(|t| t.tau))
        .collect::<Result<_>>()?;
    checks.push(check("thresholds", taus == [30, 41, 167], format!("tau = {taus:?}")));

    let mut lossless = true;
    let mut multiset = true;
    for t in 0..20u64 {
        let mat = TrialMaterial::derive(trial_seed(Seed(0), 256, 0, t as usize), 256)?;
        let (z, used) = embed_with_retry(&mat.watermark, mat.latent_seed, &mat.key, &params)?;
        let out = extract(&z, &mat.key, &params)?;
        lossless &= out.bits == mat.watermark.bits();
        let mut a = z.values().to_vec();
        let mut b = sample_latent(shape, used).into_values();
        a.sort_unstable_by(f32::total_cmp);
        b.sort_unstable_by(f32::total_cmp);
        multiset &= a.iter().map(|v| v.to_bits()).eq(b.iter().map(|v| v.to_bits()));
    }
    checks.push(check("lossless round trip", lossless, "20 trials, k=256".into()));
    checks.push(check("rearrangement only", multiset, "sorted values identical".into()));

    for k in [2usize, 4, 8] {
        let p = EmbeddingParams::new(LatentShape::new(1, 1, 4 * k as u32)?, k)?;
        let key = ModelKey::from_bytes([k as u8; 32]);
        let mut ok = true;
        for (i, m) in balanced_words(k).into_iter().enumerate() {
            let (z, _) = embed_with_retry(&m, Seed(i as u64 * 97), &key, &p)?;
            ok &= extract(&z, &key, &p)?.bits == m.bits();
        }
        checks.push(check("exhaustive small round trip", ok, format!("k={k}, r={}", 4 * k)));
    }

    let m = Watermark::random(256, [1; 32])?;
    let (z, _) = embed_with_retry(&m, Seed(5), &ModelKey::from_bytes([2; 32]), &params)?;
    let wrong = extract(&z, &ModelKey::from_bytes([3; 32]), &params)?;
    let acc = bit_accuracy(m.bits(), &wrong.bits)?;
    checks.push(check("wrong key near chance", (0.35..0.65).contains(&acc), format!("accuracy {acc:.3}")));

    let x: Vec<f64> = sample_latent(shape, Seed(1)).values().iter().map(|&v| v as f64).collect();
    let ks = ks_test_standard_normal(&x)?;
    checks.push(check("sample normality", ks.p_value > 0.001, format!("KS p = {:.4}", ks.p_value)));

    let p = flip_probability(0.675, 0.675)?;
    checks.push(check("flip probability", (p - 0.158655).abs() < 1e-6, format!("Φ(-1) = {p:.6}")));

    let thresh = detection_threshold(256, 1e-6)?;
    let outcomes = run_cell(&params, &ChannelSpec::distorted(), 0, 10, Seed(3), &thresh)?;
    let hits = outcomes.iter().filter(|o| o.detected).count();
    checks.push(check("distorted channel detection", hits == 10, format!("{hits}/10 detected")));

    Ok(checks)
}

fn balanced_words(k: usize) -> Vec<Watermark> {
    (0u32..1 << k)
        .filter(|w| w.count_ones() as usize == k / 2)
        .map(|w| Watermark::new((0..k).map(|i| w >> i & 1 == 1).collect()).expect("balanced"))
        .collect()
}
