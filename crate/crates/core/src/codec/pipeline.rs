use std::fmt::Write as _;

use super::grouping::{group_sum, symmetric_grouping, GroupPlan};
use super::mixing::{build_group_sequence, build_large_sequence, deinterleave, interleave};
use super::partition::partition_and_rank;
use super::shuffle::{keyed_shuffle, keyed_unshuffle};
use super::vote::{majority_vote, VoteTally};
use super::watermark::{bits_to_string, parse_bits, ModelKey, Watermark};
use super::{sign_bit, SignPartition};
use crate::error::{Error, Result};
use crate::latent::{sample_latent, GaussianLatent, LatentShape, Seed};

/// Seeds tried by [`embed_with_retry`] before giving up.
pub const EMBED_MAX_ATTEMPTS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EmbeddingParams {
    shape: LatentShape,
    k: usize,
}

impl EmbeddingParams {
    /// Requires `k` even and at least 2, `2k | r`, and `k <= r/2`.
    pub fn new(shape: LatentShape, k: usize) -> Result<Self> {
        let r = shape.len();
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "watermark length k={k} must be even and at least 2"
            )));
        }
        if !r.is_multiple_of(2 * k) {
            return Err(Error::InvalidParams(format!(
                "2k={} must divide the latent length r={r}",
                2 * k
            )));
        }
        if k > r / 2 {
            return Err(Error::InvalidParams(format!("k={k} exceeds r/2={}", r / 2)));
        }
        Ok(Self { shape, k })
    }

    pub fn shape(&self) -> LatentShape {
        self.shape
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.shape.len()
    }

    /// Copies of the watermark in `z_l`, and also the size of each group.
    pub fn repetitions(&self) -> usize {
        self.r() / (2 * self.k)
    }

    /// Votes per bit: the `z_l` copies plus one from the group stream.
    pub fn votes_per_bit(&self) -> usize {
        self.repetitions() + 1
    }
}

/// Sorts `R`, splits it at the median position and groups each half.
pub fn build_group_plan(part: &SignPartition, params: &EmbeddingParams) -> Result<GroupPlan> {
    let mut residual: Vec<f32> = part.residual.iter().map(|e| e.value).collect();
    if residual.len() != params.r() / 2 {
        return Err(Error::SizeMismatch(format!(
            "residual holds {} elements, expected {}",
            residual.len(),
            params.r() / 2
        )));
    }
    residual.sort_unstable_by(f32::total_cmp);
    let (r_n, r_p) = residual.split_at(params.r() / 4);
    let groups = params.k() / 2;
    GroupPlan::new(symmetric_grouping(r_n, groups)?, symmetric_grouping(r_p, groups)?)
}

/// Samples a latent from `seed` and rearranges it to carry `m`.
///
/// The output is a permutation of `sample_latent(params.shape(), seed)`.
/// Returns [`Error::ImbalancedSample`] when the sample cannot carry a
/// watermark; see [`embed_with_retry`].
pub fn embed(
    m: &Watermark,
    seed: Seed,
    key: &ModelKey,
    params: &EmbeddingParams,
) -> Result<GaussianLatent> {
    let x = sample_latent(params.shape(), seed);
    embed_into(m, &x, key, params)
}

/// Rearranges an existing sample to carry `m`.
pub fn embed_into(
    m: &Watermark,
    x: &GaussianLatent,
    key: &ModelKey,
    params: &EmbeddingParams,
) -> Result<GaussianLatent> {
    if m.len() != params.k() {
        return Err(Error::LengthMismatch {
            left: m.len(),
            right: params.k(),
        });
    }
    if x.shape() != params.shape() {
        return Err(Error::ShapeMismatch {
            expected: params.shape().to_string(),
            actual: x.shape().to_string(),
        });
    }
    let part = partition_and_rank(x)?;
    let z_l = build_large_sequence(m, &part, params)?;
    let plan = build_group_plan(&part, params)?;
    let z_s = build_group_sequence(m, &plan)?;
    let z_m = interleave(&z_l, &z_s, params.k())?;
    keyed_shuffle(&z_m, key, params.shape())
}

/// [`embed`] with the resampling policy: on [`Error::ImbalancedSample`]
/// retry with `seed + 1`, at most [`EMBED_MAX_ATTEMPTS`] seeds in total.
/// Returns the latent and the seed that produced it.
pub fn embed_with_retry(
    m: &Watermark,
    seed: Seed,
    key: &ModelKey,
    params: &EmbeddingParams,
) -> Result<(GaussianLatent, Seed)> {
    let mut s = seed;
    let mut last = None;
    for _ in 0..EMBED_MAX_ATTEMPTS {
        match embed(m, s, key, params) {
            Ok(z) => return Ok((z, s)),
            Err(e @ Error::ImbalancedSample(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
        s = s.next();
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub bits: Vec<bool>,
    pub votes: Vec<VoteTally>,
    /// One bit per `z_l` element (`r/2` bits).
    pub stream_large: Vec<bool>,
    /// One bit per `z_s` group (`k` bits).
    pub stream_groups: Vec<bool>,
}

impl ExtractionResult {
    pub fn k(&self) -> usize {
        self.bits.len()
    }

    /// Text record, one `key=value` line per field:
    ///
    /// ```text
    /// k=4
    /// votes_per_bit=3
    /// bits=0110
    /// tallies=0/3 3/3 3/3 0/3
    /// w1=01100110
    /// w2=0110
    /// ```
    ///
    /// `tallies` lists ones/total per bit position.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let total = self.votes.first().map_or(0, |t| t.total);
        writeln!(s, "k={}", self.k()).unwrap();
        writeln!(s, "votes_per_bit={total}").unwrap();
        writeln!(s, "bits={}", bits_to_string(&self.bits)).unwrap();
        let tallies: Vec<String> = self.votes.iter().map(|t| format!("{}/{}", t.ones, t.total)).collect();
        writeln!(s, "tallies={}", tallies.join(" ")).unwrap();
        writeln!(s, "w1={}", bits_to_string(&self.stream_large)).unwrap();
        writeln!(s, "w2={}", bits_to_string(&self.stream_groups)).unwrap();
        s
    }

    /// Parses a record written by [`to_record`](Self::to_record). Unknown
    /// keys are ignored.
    pub fn from_record(text: &str) -> Result<Self> {
        let mut bits = None;
        let mut votes = None;
        let mut w1 = None;
        let mut w2 = None;
        for line in text.lines() {
            let Some((key, value)) = line.split_once('=') else {
                continue;
            };
            match key.trim() {
                "bits" => bits = Some(parse_bits(value.trim())?),
                "w1" => w1 = Some(parse_bits(value.trim())?),
                "w2" => w2 = Some(parse_bits(value.trim())?),
                "tallies" => {
                    let parsed = value
                        .split_whitespace()
                        .map(|t| {
                            let (a, b) = t
                                .split_once('/')
                                .ok_or_else(|| Error::Parse(format!("bad tally {t:?}")))?;
                            let ones = a.parse().map_err(|_| Error::Parse(format!("bad tally {t:?}")))?;
                            let total = b.parse().map_err(|_| Error::Parse(format!("bad tally {t:?}")))?;
                            Ok(VoteTally { ones, total })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    votes = Some(parsed);
                }
                _ => {}
            }
        }
        let missing = |f: &str| Error::Parse(format!("record is missing `{f}`"));
        Ok(Self {
            bits: bits.ok_or_else(|| missing("bits"))?,
            votes: votes.ok_or_else(|| missing("tallies"))?,
            stream_large: w1.ok_or_else(|| missing("w1"))?,
            stream_groups: w2.ok_or_else(|| missing("w2"))?,
        })
    }
}

/// Recovers the watermark from a (possibly perturbed) latent.
pub fn extract(
    z_wt: &GaussianLatent,
    key: &ModelKey,
    params: &EmbeddingParams,
) -> Result<ExtractionResult> {
    if z_wt.shape() != params.shape() {
        return Err(Error::ShapeMismatch {
            expected: params.shape().to_string(),
            actual: z_wt.shape().to_string(),
        });
    }
    let k = params.k();
    let z_m = keyed_unshuffle(z_wt, key);
    let (z_l, z_s) = deinterleave(&z_m, k)?;

    let stream_large: Vec<bool> = z_l.iter().map(|&v| sign_bit(v as f64)).collect();
    let stream_groups: Vec<bool> = z_s
        .chunks_exact(params.repetitions())
        .map(|g| sign_bit(group_sum(g)))
        .collect();

    let substreams: Vec<&[bool]> = stream_large
        .chunks_exact(k)
        .chain(std::iter::once(stream_groups.as_slice()))
        .collect();
    let (bits, votes) = majority_vote(&substreams)?;

    Ok(ExtractionResult {
        bits,
        votes,
        stream_large,
        stream_groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::partition::Entry;

    fn params(k: usize, r: u32) -> EmbeddingParams {
        EmbeddingParams::new(LatentShape::new(1, 1, r).unwrap(), k).unwrap()
    }

    #[test]
    fn params_validation() {
        let s = LatentShape::sd_default();
        assert!(EmbeddingParams::new(s, 256).is_ok());
        assert!(EmbeddingParams::new(s, 255).is_err());
        assert!(EmbeddingParams::new(s, 0).is_err());
        assert!(EmbeddingParams::new(s, 8192).is_ok());
        assert!(EmbeddingParams::new(s, 16384).is_err());
        assert!(EmbeddingParams::new(LatentShape::new(1, 1, 12).unwrap(), 4).is_err());
        let p = EmbeddingParams::new(s, 256).unwrap();
        assert_eq!((p.repetitions(), p.votes_per_bit()), (32, 33));
    }

    #[test]
    fn zero_noise_round_trip() {
        let p = EmbeddingParams::new(LatentShape::sd_default(), 256).unwrap();
        let m = Watermark::random(256, [5; 32]).unwrap();
        let key = ModelKey::from_bytes([6; 32]);
        let (z, _) = embed_with_retry(&m, Seed(7), &key, &p).unwrap();
        let out = extract(&z, &key, &p).unwrap();
        assert_eq!(out.bits, m.bits());
        assert_eq!(out.stream_groups, m.bits());
        assert!(out.votes.iter().all(|t| t.is_unanimous() && t.total == 33));
        assert_eq!(out.stream_large.len(), 8192);
    }

    #[test]
    fn single_flip_is_outvoted() {
        let p = EmbeddingParams::new(LatentShape::sd_default(), 256).unwrap();
        let m = Watermark::random(256, [1; 32]).unwrap();
        let key = ModelKey::from_bytes([2; 32]);
        let (z, _) = embed_with_retry(&m, Seed(3), &key, &p).unwrap();
        // Locate z_l[0] in the shuffled latent and flip it.
        let perm = crate::codec::key_permutation(&key, p.r());
        let pos = perm.iter().position(|&src| src == 0).unwrap();
        let mut vals = z.into_values();
        vals[pos] = -vals[pos];
        let z = GaussianLatent::new(vals, p.shape()).unwrap();
        let out = extract(&z, &key, &p).unwrap();
        assert_eq!(out.bits, m.bits());
        assert_eq!(out.stream_large[0], !m.bits()[0]);
        assert!(!out.votes[0].is_unanimous());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = params(2, 8);
        let z = sample_latent(LatentShape::new(1, 2, 4).unwrap(), Seed(0));
        assert!(matches!(
            extract(&z, &ModelKey::from_bytes([0; 32]), &p),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn record_round_trip() {
        let r = ExtractionResult {
            bits: vec![false, true],
            votes: vec![VoteTally { ones: 0, total: 3 }, VoteTally { ones: 2, total: 3 }],
            stream_large: vec![false, true, false, false],
            stream_groups: vec![false, true],
        };
        let text = r.to_record();
        assert!(text.contains("tallies=0/3 2/3\n"));
        assert_eq!(ExtractionResult::from_record(&text).unwrap(), r);
        assert!(ExtractionResult::from_record("bits=01\n").is_err());
    }

    #[test]
    fn group_plan_split_is_positional() {
        // R = {-0.3, -0.2, 0.1, 0.4, 0.5, 0.6, 0.7, 0.8}: the lower half holds
        // two positives even though they are non-negative.
        let vals = [-0.3f32, -0.2, 0.1, 0.4, 0.5, 0.6, 0.7, 0.8];
        let residual = vals
            .iter()
            .enumerate()
            .map(|(index, &value)| Entry { index, value })
            .collect();
        let part = SignPartition {
            negatives: vec![],
            nonnegatives: vec![],
            large_neg: vec![],
            large_pos: vec![],
            residual,
        };
        let p = params(4, 16);
        // Lower half {-0.3,-0.2,0.1,0.4} forms groups {-0.3,0.4} and {-0.2,0.1},
        // and the first sums to +0.1, so the sign contract rejects the plan.
        assert!(matches!(build_group_plan(&part, &p), Err(Error::ImbalancedSample(_))));
    }
}
