use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::latent::GaussianLatent;

/// A latent element together with its original flat index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub index: usize,
    pub value: f32,
}

/// Sign split of a sample and its large-magnitude quartile pools.
///
/// `large_neg` and `large_pos` are ordered by descending magnitude (lower
/// index first on ties), which is also their consumption order when `z_l`
/// is built. `residual` is in original index order.
#[derive(Debug, Clone)]
pub struct SignPartition {
    pub negatives: Vec<Entry>,
    pub nonnegatives: Vec<Entry>,
    pub large_neg: Vec<Entry>,
    pub large_pos: Vec<Entry>,
    pub residual: Vec<Entry>,
}

impl SignPartition {
    pub fn quarter(&self) -> usize {
        self.large_neg.len()
    }
}

fn by_magnitude_desc(a: &Entry, b: &Entry) -> Ordering {
    b.value
        .abs()
        .total_cmp(&a.value.abs())
        .then(a.index.cmp(&b.index))
}

/// Splits `latent` into `N` (< 0) and `P` (≥ 0) and selects the `r/4`
/// largest-magnitude members of each.
///
/// `r` must be a multiple of 4. Fails with [`Error::ImbalancedSample`] when
/// either sign class has fewer than `r/4` members.
pub fn partition_and_rank(latent: &GaussianLatent) -> Result<SignPartition> {
    let r = latent.len();
    if !r.is_multiple_of(4) {
        return Err(Error::SizeMismatch(format!(
            "latent length {r} is not a multiple of 4"
        )));
    }
    let quarter = r / 4;

    let (negatives, nonnegatives): (Vec<Entry>, Vec<Entry>) = latent
        .values()
        .iter()
        .enumerate()
        .map(|(index, &value)| Entry { index, value })
        .partition(|e| e.value < 0.0);

    if negatives.len() < quarter || nonnegatives.len() < quarter {
        return Err(Error::ImbalancedSample(format!(
            "{} negatives and {} non-negatives, need at least {quarter} of each",
            negatives.len(),
            nonnegatives.len()
        )));
    }

    let (large_neg, rest_neg) = top_quarter(&negatives, quarter);
    let (large_pos, rest_pos) = top_quarter(&nonnegatives, quarter);

    let mut residual = rest_neg;
    residual.extend(rest_pos);
    residual.sort_unstable_by_key(|e| e.index);

    Ok(SignPartition {
        negatives,
        nonnegatives,
        large_neg,
        large_pos,
        residual,
    })
}

fn top_quarter(set: &[Entry], quarter: usize) -> (Vec<Entry>, Vec<Entry>) {
    let mut ranked = set.to_vec();
    ranked.sort_unstable_by(by_magnitude_desc);
    let rest = ranked.split_off(quarter);
    (ranked, rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::{sample_latent, LatentShape, Seed};

    fn latent(values: &[f32]) -> GaussianLatent {
        let shape = LatentShape::new(1, 1, values.len() as u32).unwrap();
        GaussianLatent::new(values.to_vec(), shape).unwrap()
    }

    fn vals(es: &[Entry]) -> Vec<f32> {
        es.iter().map(|e| e.value).collect()
    }

    #[test]
    fn four_element_example() {
        let p = partition_and_rank(&latent(&[0.5, -1.2, 0.0, -0.3])).unwrap();
        assert_eq!(vals(&p.negatives), vec![-1.2, -0.3]);
        assert_eq!(vals(&p.nonnegatives), vec![0.5, 0.0]);
        assert_eq!(vals(&p.large_neg), vec![-1.2]);
        assert_eq!(vals(&p.large_pos), vec![0.5]);
        assert_eq!(vals(&p.residual), vec![0.0, -0.3]);
        assert_eq!(p.residual[0].index, 2);
    }

    #[test]
    fn cardinalities_at_full_size() {
        let x = sample_latent(LatentShape::sd_default(), Seed(7));
        let p = partition_and_rank(&x).unwrap();
        assert_eq!(p.large_neg.len(), 4096);
        assert_eq!(p.large_pos.len(), 4096);
        assert_eq!(p.residual.len(), 8192);
        assert_eq!(p.negatives.len() + p.nonnegatives.len(), 16384);
        let min_large_neg = p.large_neg.iter().map(|e| e.value.abs()).fold(f32::MAX, f32::min);
        let max_rest_neg = p
            .residual
            .iter()
            .filter(|e| e.value < 0.0)
            .map(|e| e.value.abs())
            .fold(0.0, f32::max);
        assert!(min_large_neg >= max_rest_neg);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let p = partition_and_rank(&latent(&[-1.0, 2.0, -1.0, 2.0, -1.0, 0.5, -1.0, 0.5])).unwrap();
        assert_eq!(p.large_neg.iter().map(|e| e.index).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(p.large_pos.iter().map(|e| e.index).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn negative_zero_is_nonnegative() {
        let p = partition_and_rank(&latent(&[-0.0, -1.0, 1.0, -2.0])).unwrap();
        assert_eq!(p.nonnegatives.len(), 2);
        assert_eq!(p.nonnegatives[0].index, 0);
    }

    #[test]
    fn imbalanced_sample_is_rejected() {
        let err = partition_and_rank(&latent(&[1.0, 2.0, 3.0, -1.0, 4.0, 5.0, 6.0, 7.0])).unwrap_err();
        assert!(matches!(err, Error::ImbalancedSample(_)));
    }

    #[test]
    fn length_must_divide_by_four() {
        assert!(partition_and_rank(&latent(&[1.0, -1.0, 0.5, -0.5, 0.1, -0.1])).is_err());
    }
}
