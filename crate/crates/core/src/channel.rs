//! Parametric stand-ins for the denoise → attack → inversion error that a
//! watermarked latent suffers before extraction.
//!
//! Two primitive channels are provided and may be chained:
//!
//! * additive Gaussian error, `z' = z + σ·ε`, which models the symmetric,
//!   zero-centred inversion error (σ = 0.3 puts ±2σ at ±0.6);
//! * magnitude-dependent sign flips, which model the measured sign
//!   consistency of large (|z| ≥ 0.675) and small elements directly.
//!
//! Text grammar (also used by [`fmt::Display`]):
//!
//! ```text
//! spec    := "identity" | gauss | flip | compose
//! gauss   := "gauss:" sigma
//! flip    := "flip:" p_large "," p_small "," abs_threshold
//! compose := "compose(" spec ("|" spec)* ")"
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::latent::{GaussianLatent, Seed};
use crate::rng::{box_muller, derive_u64, unit_closed_open, SplitMix64};
use crate::stats::normal_cdf;

/// Magnitude separating "large" from "small" latent elements: the upper
/// quartile of |N(0, 1)|.
pub const LARGE_MAGNITUDE_THRESHOLD: f64 = 0.675;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    AdditiveGaussian {
        sigma: f64,
    },
    SignFlip {
        p_large: f64,
        p_small: f64,
        abs_threshold: f64,
    },
    /// Applied left to right; empty is the identity channel.
    Compose(Vec<ChannelSpec>),
}

impl ChannelSpec {
    pub fn identity() -> Self {
        ChannelSpec::Compose(Vec::new())
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::NonpositiveSigma(sigma));
        }
        Ok(ChannelSpec::AdditiveGaussian { sigma })
    }

    pub fn sign_flip(p_large: f64, p_small: f64, abs_threshold: f64) -> Result<Self> {
        for (name, p) in [("p_large", p_large), ("p_small", p_small)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange(format!("{name}={p} is not a probability")));
            }
        }
        if !(abs_threshold.is_finite() && abs_threshold >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "abs_threshold={abs_threshold} must be finite and non-negative"
            )));
        }
        Ok(ChannelSpec::SignFlip {
            p_large,
            p_small,
            abs_threshold,
        })
    }

    /// Inversion of a clean image: additive error with σ = 0.3.
    pub fn clean_inversion() -> Self {
        ChannelSpec::AdditiveGaussian { sigma: 0.3 }
    }

    /// Inversion of a distorted image: 70% sign consistency for large
    /// elements, 55% for small ones.
    pub fn distorted() -> Self {
        ChannelSpec::SignFlip {
            p_large: 0.30,
            p_small: 0.45,
            abs_threshold: LARGE_MAGNITUDE_THRESHOLD,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            ChannelSpec::AdditiveGaussian { .. } => false,
            ChannelSpec::SignFlip { p_large, p_small, .. } => *p_large == 0.0 && *p_small == 0.0,
            ChannelSpec::Compose(parts) => parts.iter().all(ChannelSpec::is_identity),
        }
    }

    fn apply_in_place(&self, values: &mut [f32], seed: u64) {
        match self {
            ChannelSpec::AdditiveGaussian { sigma } => {
                let mut stream = SplitMix64::new(seed);
                for pair in values.chunks_mut(2) {
                    let (a, b) = box_muller(stream.next_u64(), stream.next_u64());
                    pair[0] = (pair[0] as f64 + sigma * a) as f32;
                    if let Some(v) = pair.get_mut(1) {
                        *v = (*v as f64 + sigma * b) as f32;
                    }
                }
            }
            ChannelSpec::SignFlip {
                p_large,
                p_small,
                abs_threshold,
            } => {
                for (i, v) in values.iter_mut().enumerate() {
                    let p = if (v.abs() as f64) >= *abs_threshold {
                        *p_large
                    } else {
                        *p_small
                    };
                    if unit_closed_open(SplitMix64::at(seed, i as u64)) < p {
                        *v = -*v;
                    }
                }
            }
            ChannelSpec::Compose(parts) => {
                for (i, part) in parts.iter().enumerate() {
                    part.apply_in_place(values, derive_u64("channel-stage", &[seed, i as u64]));
                }
            }
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::AdditiveGaussian { sigma } => write!(f, "gauss:{sigma}"),
            ChannelSpec::SignFlip {
                p_large,
                p_small,
                abs_threshold,
            } => write!(f, "flip:{p_large},{p_small},{abs_threshold}"),
            ChannelSpec::Compose(parts) if parts.is_empty() => f.write_str("identity"),
            ChannelSpec::Compose(parts) => {
                f.write_str("compose(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?} in channel spec {s:?}")))
        };
        if s == "identity" {
            return Ok(Self::identity());
        }
        if let Some(rest) = s.strip_prefix("gauss:") {
            return Self::gaussian(num(rest)?);
        }
        if let Some(rest) = s.strip_prefix("flip:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!(
                    "flip needs p_large,p_small,abs_threshold: {s:?}"
                )));
            }
            return Self::sign_flip(num(parts[0])?, num(parts[1])?, num(parts[2])?);
        }
        if let Some(inner) = s.strip_prefix("compose(").and_then(|r| r.strip_suffix(')')) {
            return split_top_level(inner)?
                .into_iter()
                .map(str::parse)
                .collect::<Result<Vec<_>>>()
                .map(ChannelSpec::Compose);
        }
        Err(Error::Parse(format!("unknown channel spec {s:?}")))
    }
}

fn split_top_level(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '|' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse(format!("unbalanced parentheses in {s:?}")));
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced parentheses in {s:?}")));
    }
    if !s.trim().is_empty() {
        parts.push(&s[start..]);
    }
    Ok(parts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRun {
    pub spec: ChannelSpec,
    pub trial_seed: Seed,
}

impl ChannelRun {
    pub fn new(spec: ChannelSpec, trial_seed: Seed) -> Self {
        Self { spec, trial_seed }
    }
}

/// Applies the channel to a copy of `z`.
///
/// Randomness: additive noise uses Box–Muller pairs from SplitMix64 seeded
/// with the trial seed; sign flips compare SplitMix64 output `i` (as a unit
/// float) against the flip probability of element `i`. Stage `j` of a
/// composition is seeded with `derive_u64("channel-stage", [seed, j])`.
pub fn apply_channel(z: &GaussianLatent, run: &ChannelRun) -> GaussianLatent {
    let mut values = z.values().to_vec();
    run.spec.apply_in_place(&mut values, run.trial_seed.value());
    GaussianLatent::from_parts_unchecked(values, z.shape())
}

/// `Φ(−|value|/σ)`: the chance that additive N(0, σ²) error changes the
/// sign of `value`.
pub fn flip_probability(value: f64, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::NonpositiveSigma(sigma));
    }
    Ok(normal_cdf(-value.abs() / sigma))
}

/// Sign-flip channel whose per-class flip rates are one minus the target
/// sign-consistency rates.
pub fn calibrate_signflip(target_large: f64, target_small: f64) -> Result<ChannelSpec> {
    for (name, t) in [("target_large", target_large), ("target_small", target_small)] {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::OutOfRange(format!("{name}={t} must lie in (0, 1)")));
        }
    }
    ChannelSpec::sign_flip(1.0 - target_large, 1.0 - target_small, LARGE_MAGNITUDE_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::{sample_latent, LatentShape};

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn parse_grammar() {
        assert_eq!("gauss:0.3".parse::<ChannelSpec>().unwrap(), ChannelSpec::gaussian(0.3).unwrap());
        assert_eq!("flip:0.30,0.45,0.675".parse::<ChannelSpec>().unwrap(), ChannelSpec::distorted());
        let c: ChannelSpec = "compose(gauss:0.3|flip:0.05,0.25,0.675)".parse().unwrap();
        assert_eq!(
            c,
            ChannelSpec::Compose(vec![
                ChannelSpec::gaussian(0.3).unwrap(),
                ChannelSpec::sign_flip(0.05, 0.25, 0.675).unwrap()
            ])
        );
        assert_eq!(c.to_string(), "compose(gauss:0.3|flip:0.05,0.25,0.675)");
        let nested: ChannelSpec = "compose(identity|compose(gauss:1|gauss:2))".parse().unwrap();
        assert_eq!(nested.to_string().parse::<ChannelSpec>().unwrap(), nested);
        assert_eq!("identity".parse::<ChannelSpec>().unwrap(), ChannelSpec::identity());
    }

    #[test]
    fn parse_errors() {
        for bad in ["gauss:0", "gauss:-1", "gauss:x", "flip:0.1,0.2", "flip:1.5,0,0", "compose(gauss:1", "blur:3", "compose(gauss:1))"] {
            assert!(bad.parse::<ChannelSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn tiny_sigma_is_near_identity() {
        let z = sample_latent(LatentShape::new(1, 8, 8).unwrap(), Seed(1));
        let run = ChannelRun::new(ChannelSpec::gaussian(1e-30).unwrap(), Seed(2));
        assert_eq!(apply_channel(&z, &run), z);
    }

    #[test]
    fn zero_flip_is_identity() {
        let z = sample_latent(LatentShape::new(1, 8, 8).unwrap(), Seed(1));
        let spec = ChannelSpec::sign_flip(0.0, 0.0, 0.675).unwrap();
        assert!(spec.is_identity());
        assert_eq!(apply_channel(&z, &ChannelRun::new(spec, Seed(5))), z);
        assert_eq!(apply_channel(&z, &ChannelRun::new(ChannelSpec::identity(), Seed(5))), z);
    }

    #[test]
    fn deterministic_per_seed() {
        let z = sample_latent(LatentShape::new(1, 16, 16).unwrap(), Seed(1));
        let spec: ChannelSpec = "compose(gauss:0.3|flip:0.3,0.45,0.675)".parse().unwrap();
        let a = apply_channel(&z, &ChannelRun::new(spec.clone(), Seed(9)));
        let b = apply_channel(&z, &ChannelRun::new(spec.clone(), Seed(9)));
        let c = apply_channel(&z, &ChannelRun::new(spec, Seed(10)));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.shape(), z.shape());
    }

    #[test]
    fn full_flip_negates_by_class() {
        let shape = LatentShape::new(1, 1, 4).unwrap();
        let z = GaussianLatent::new(vec![1.0, -0.1, -2.0, 0.2], shape).unwrap();
        let spec = ChannelSpec::sign_flip(1.0, 0.0, 0.675).unwrap();
        let out = apply_channel(&z, &ChannelRun::new(spec, Seed(0)));
        assert_eq!(out.values(), &[-1.0, -0.1, 2.0, 0.2]);
    }

    #[test]
    fn flip_probability_values() {
        assert!(approx(flip_probability(0.0, 0.7).unwrap(), 0.5));
        // Φ(−1) = 0.158655253931457...
        assert!((flip_probability(0.675, 0.675).unwrap() - 0.158_655_253_931_457).abs() < 1e-9);
        assert!((flip_probability(-0.675, 0.675).unwrap() - 0.158_655_253_931_457).abs() < 1e-9);
        assert!(flip_probability(1e6, 1.0).unwrap() < 1e-300);
        assert!(matches!(flip_probability(1.0, 0.0), Err(Error::NonpositiveSigma(_))));
        assert!(flip_probability(1.0, f64::NAN).is_err());
    }

    #[test]
    fn calibration_presets() {
        let clean = calibrate_signflip(0.95, 0.75).unwrap();
        match clean {
            ChannelSpec::SignFlip { p_large, p_small, abs_threshold } => {
                assert!(approx(p_large, 0.05) && approx(p_small, 0.25));
                assert_eq!(abs_threshold, 0.675);
            }
            _ => panic!("expected SignFlip"),
        }
        match calibrate_signflip(0.70, 0.55).unwrap() {
            ChannelSpec::SignFlip { p_large, p_small, .. } => {
                assert!(approx(p_large, 0.30) && approx(p_small, 0.45));
            }
            _ => panic!("expected SignFlip"),
        }
        match calibrate_signflip(1.0 - 1e-12, 1.0 - 1e-12).unwrap() {
            ChannelSpec::SignFlip { p_large, p_small, .. } => assert!(p_large < 1e-11 && p_small < 1e-11),
            _ => panic!("expected SignFlip"),
        }
        assert!(calibrate_signflip(1.0, 0.5).is_err());
        assert!(calibrate_signflip(0.5, 0.0).is_err());
    }
}
