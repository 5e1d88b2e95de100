//! Detection, attribution and evaluation statistics.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::codec::Watermark;
use crate::error::{Error, Result};

/// |t| above this value is reported as a significant difference.
pub const T_CRITICAL: f64 = 2.101;

/// Standard normal CDF, `0.5·erfc(−x/√2)` with `libm::erfc` (|error| well
/// below 1e-15 over the real line).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn match_count(a: &[bool], b: &[bool]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x == y).count())
}

/// Fraction of positions where `m` and `m_prime` agree.
pub fn bit_accuracy(m: &[bool], m_prime: &[bool]) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::EmptyInput("bit_accuracy needs at least one bit"));
    }
    Ok(match_count(m, m_prime)? as f64 / m.len() as f64)
}

/// Match-count threshold for a `K`-bit watermark.
///
/// `tau` is the smallest integer with `P(Bin(K, ½) ≥ tau) ≤ fpr_bound`.
/// Detection fires on strictly more than `tau` matches, so the realised
/// false-positive rate `P(Bin(K, ½) > tau)` is at most the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionThreshold {
    pub k_bits: usize,
    pub tau: usize,
    pub fpr_bound: f64,
}

impl DetectionThreshold {
    /// Exact chance-match probability `P(Bin(K, ½) > tau)`.
    pub fn false_positive_rate(&self) -> f64 {
        tail_probability(self.k_bits, self.tau + 1)
    }
}

fn binomial_row(k: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(k + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for j in 0..k {
        c = c * (k - j) / (j + 1);
        row.push(c.clone());
    }
    row
}

/// `Σ_{j ≥ from} C(K, j)` as an exact integer.
pub fn binomial_tail_count(k: usize, from: usize) -> BigUint {
    if from > k {
        return BigUint::zero();
    }
    binomial_row(k)[from..].iter().sum()
}

/// `P(Bin(K, ½) ≥ from)` rounded to `f64`.
pub fn tail_probability(k: usize, from: usize) -> f64 {
    let count = binomial_tail_count(k, from);
    if count.is_zero() {
        return 0.0;
    }
    // Scale to 64 significant bits before converting.
    let bits = count.bits() as i64;
    let shift = (bits - 64).max(0);
    let top = (&count >> shift as u64).iter_u64_digits().next().unwrap_or(0);
    top as f64 * 2f64.powi((shift - k as i64) as i32)
}

/// `(m, e)` with `x = m · 2^e` exactly, for finite positive `x`.
fn decompose(x: f64) -> (u64, i64) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

/// Exact test of `count / 2^K ≤ p`.
fn count_within(count: &BigUint, k: usize, p: f64) -> bool {
    let (m, e) = decompose(p);
    let shift = e + k as i64;
    if shift >= 0 {
        *count <= BigUint::from(m) << shift as u64
    } else {
        (count << (-shift) as u64) <= BigUint::from(m)
    }
}

/// Smallest `tau` with `P(Bin(K, ½) ≥ tau) ≤ fpr`, by exact big-integer
/// summation. For K = 32, 48 and 256 at fpr = 1e-6 this gives 30, 41 and 167.
pub fn detection_threshold(k_bits: usize, fpr: f64) -> Result<DetectionThreshold> {
    if k_bits == 0 {
        return Err(Error::OutOfRange("watermark length must be at least 1".into()));
    }
    if !(fpr > 0.0 && fpr < 1.0) {
        return Err(Error::OutOfRange(format!("fpr={fpr} must lie in (0, 1)")));
    }
    let row = binomial_row(k_bits);
    let mut tau = k_bits + 1;
    let mut tail = BigUint::zero();
    for j in (0..=k_bits).rev() {
        tail += &row[j];
        if !count_within(&tail, k_bits, fpr) {
            break;
        }
        tau = j;
    }
    Ok(DetectionThreshold {
        k_bits,
        tau,
        fpr_bound: fpr,
    })
}

/// True iff the match count strictly exceeds `tau`.
pub fn detect(m: &[bool], m_prime: &[bool], thresh: &DetectionThreshold) -> Result<bool> {
    if m.len() != thresh.k_bits {
        return Err(Error::LengthMismatch {
            left: m.len(),
            right: thresh.k_bits,
        });
    }
    Ok(match_count(m, m_prime)? > thresh.tau)
}

pub fn tpr_over_samples<A, B>(pairs: &[(A, B)], thresh: &DetectionThreshold) -> Result<f64>
where
    A: AsRef<[bool]>,
    B: AsRef<[bool]>,
{
    if pairs.is_empty() {
        return Err(Error::EmptyInput("tpr needs at least one pair"));
    }
    let mut hits = 0usize;
    for (m, m_prime) in pairs {
        hits += detect(m.as_ref(), m_prime.as_ref(), thresh)? as usize;
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// Known user signatures and the match count needed to name one of them.
#[derive(Debug, Clone)]
pub struct AttributionDirectory {
    signatures: Vec<Watermark>,
    tau_attr: usize,
}

impl AttributionDirectory {
    /// Uses the union bound: `tau_attr = detection_threshold(K, fpr / n).tau`,
    /// so the chance that a random watermark is attributed to anyone is at
    /// most `fpr`.
    pub fn new(signatures: Vec<Watermark>, fpr: f64) -> Result<Self> {
        let k = Self::check(&signatures)?;
        let tau = detection_threshold(k, fpr / signatures.len() as f64)?.tau;
        Ok(Self {
            signatures,
            tau_attr: tau,
        })
    }

    pub fn with_threshold(signatures: Vec<Watermark>, tau_attr: usize) -> Result<Self> {
        Self::check(&signatures)?;
        Ok(Self {
            signatures,
            tau_attr,
        })
    }

    fn check(signatures: &[Watermark]) -> Result<usize> {
        let first = signatures.first().ok_or(Error::EmptyDirectory)?;
        let k = first.len();
        if let Some(bad) = signatures.iter().find(|s| s.len() != k) {
            return Err(Error::LengthMismatch {
                left: k,
                right: bad.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for s in signatures {
            if !seen.insert(s.bits()) {
                return Err(Error::InvalidWatermark(format!("duplicate signature {s}")));
            }
        }
        Ok(k)
    }

    pub fn signatures(&self) -> &[Watermark] {
        &self.signatures
    }

    pub fn tau_attr(&self) -> usize {
        self.tau_attr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attribution {
    pub user: Option<usize>,
    /// Match count of the best-scoring signature.
    pub matches: usize,
}

/// Best-matching user if its match count exceeds `tau_attr` and no other
/// user ties it.
pub fn attribute(m_prime: &[bool], dir: &AttributionDirectory) -> Result<Attribution> {
    let mut best = 0usize;
    let mut best_user = None;
    let mut tied = false;
    for (i, sig) in dir.signatures.iter().enumerate() {
        let c = match_count(sig.bits(), m_prime)?;
        if best_user.is_none() || c > best {
            best = c;
            best_user = Some(i);
            tied = false;
        } else if c == best {
            tied = true;
        }
    }
    let user = if best > dir.tau_attr && !tied { best_user } else { None };
    Ok(Attribution { user, matches: best })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t_value: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided p-value from Student's t with `df` degrees of freedom.
    pub p_value: f64,
    /// `|t| > 2.101`.
    pub significant: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance two-sample t-test of `mean(a) = mean(b)`.
pub fn welch_ttest(sample_a: &[f64], sample_b: &[f64]) -> Result<TTestResult> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "each sample needs at least 2 values, got {} and {}",
            sample_a.len(),
            sample_b.len()
        )));
    }
    let (ma, va) = mean_var(sample_a);
    let (mb, vb) = mean_var(sample_b);
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        if ma == mb {
            return Ok(TTestResult {
                t_value: 0.0,
                df: na + nb - 2.0,
                p_value: 1.0,
                significant: false,
            });
        }
        return Err(Error::DegenerateSample("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateSample(e.to_string()))?;
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTestResult {
        t_value: t,
        df,
        p_value,
        significant: t.abs() > T_CRITICAL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against N(0, 1).
///
/// The p-value is the asymptotic Kolmogorov survival function evaluated at
/// `(√n + 0.12 + 0.11/√n)·D` (Stephens' small-sample correction).
pub fn ks_test_standard_normal(sample: &[f64]) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("KS test needs at least one value"));
    }
    let mut xs = sample.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
