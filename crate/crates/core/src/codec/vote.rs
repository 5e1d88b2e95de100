use crate::error::{Error, Result};

/// Votes for bit 1 out of all votes cast at one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteTally {
    pub ones: u32,
    pub total: u32,
}

impl VoteTally {
    /// Majority decision; an exact tie resolves to 1.
    pub fn bit(&self) -> bool {
        2 * self.ones >= self.total
    }

    pub fn is_unanimous(&self) -> bool {
        self.ones == 0 || self.ones == self.total
    }
}

/// Per-position majority over equal-length substreams.
pub fn majority_vote<S: AsRef<[bool]>>(substreams: &[S]) -> Result<(Vec<bool>, Vec<VoteTally>)> {
    let first = substreams.first().ok_or(Error::EmptyInput("no substreams to vote on"))?;
    let k = first.as_ref().len();
    let mut tallies = vec![VoteTally { ones: 0, total: 0 }; k];
    for s in substreams {
        let s = s.as_ref();
        if s.len() != k {
            return Err(Error::LengthMismatch {
                left: k,
                right: s.len(),
            });
        }
        for (t, &b) in tallies.iter_mut().zip(s) {
            t.ones += b as u32;
            t.total += 1;
        }
    }
    let bits = tallies.iter().map(VoteTally::bit).collect();
    Ok((bits, tallies))
}
