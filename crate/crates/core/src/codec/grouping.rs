use crate::error::{Error, Result};

/// Equal-size groups carved out of the two residual halves.
///
/// Construction enforces the sign contract the extractor relies on: every
/// negative-half group sums to strictly less than zero and every
/// positive-half group to zero or more (a zero sum reads as bit 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPlan {
    neg_groups: Vec<Vec<f32>>,
    pos_groups: Vec<Vec<f32>>,
}

impl GroupPlan {
    pub fn new(neg_groups: Vec<Vec<f32>>, pos_groups: Vec<Vec<f32>>) -> Result<Self> {
        if neg_groups.is_empty() || neg_groups.len() != pos_groups.len() {
            return Err(Error::SizeMismatch(format!(
                "need the same non-zero number of groups on each side, got {} and {}",
                neg_groups.len(),
                pos_groups.len()
            )));
        }
        let size = neg_groups[0].len();
        if size == 0 || neg_groups.iter().chain(&pos_groups).any(|g| g.len() != size) {
            return Err(Error::SizeMismatch("groups must all have the same non-zero size".into()));
        }
        if let Some(i) = neg_groups.iter().position(|g| group_sum(g) >= 0.0) {
            return Err(Error::ImbalancedSample(format!(
                "negative group {i} has non-negative sum {}",
                group_sum(&neg_groups[i])
            )));
        }
        if let Some(i) = pos_groups.iter().position(|g| group_sum(g) < 0.0) {
            return Err(Error::ImbalancedSample(format!(
                "positive group {i} has negative sum {}",
                group_sum(&pos_groups[i])
            )));
        }
        Ok(Self {
            neg_groups,
            pos_groups,
        })
    }

    pub fn neg_groups(&self) -> &[Vec<f32>] {
        &self.neg_groups
    }

    pub fn pos_groups(&self) -> &[Vec<f32>] {
        &self.pos_groups
    }

    pub fn group_size(&self) -> usize {
        self.neg_groups[0].len()
    }

    pub fn groups_per_side(&self) -> usize {
        self.neg_groups.len()
    }
}

/// Left-to-right `f64` sum; the extractor sums groups the same way.
#[inline]
pub(crate) fn group_sum(g: &[f32]) -> f64 {
    g.iter().map(|&v| v as f64).sum()
}

/// Largest minus smallest group sum.
pub fn group_spread(groups: &[Vec<f32>]) -> f64 {
    let sums = groups.iter().map(|g| group_sum(g));
    let (lo, hi) = sums.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s), hi.max(s))
    });
    hi - lo
}

/// Cuts an ascending sequence into `group_count` equal-size groups with
/// nearly equal sums.
///
/// Elements are paired from both ends (i-th smallest with i-th largest).
/// Each pair goes to the non-full group lagging furthest behind the running
/// mean of group sums, measured in the direction the pair moves a sum
/// (below the mean for a non-negative pair, above it for a negative one);
/// ties go to the lowest group index. When the group size is odd the
/// leftover middle elements are handed out last, one per group, by the same
/// rule.
pub fn symmetric_grouping(sorted_half: &[f32], group_count: usize) -> Result<Vec<Vec<f32>>> {
    let len = sorted_half.len();
    if group_count == 0 || len == 0 || !len.is_multiple_of(group_count) {
        return Err(Error::SizeMismatch(format!(
            "{group_count} groups do not divide {len} elements"
        )));
    }
    if sorted_half.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("grouping input must be sorted ascending".into()));
    }

    let size = len / group_count;
    let pairs_per_group = size / 2;
    let n_pairs = pairs_per_group * group_count;

    let mut groups: Vec<Vec<f32>> = (0..group_count).map(|_| Vec::with_capacity(size)).collect();
    let mut sums = vec![0.0f64; group_count];
    let mut total = 0.0f64;

    for i in 0..n_pairs {
        let (lo, hi) = (sorted_half[i], sorted_half[len - 1 - i]);
        let pair = lo as f64 + hi as f64;
        let g = most_lagging(&sums, total, pair, |g| groups[g].len() < 2 * pairs_per_group);
        groups[g].push(lo);
        groups[g].push(hi);
        sums[g] += pair;
        total += pair;
    }

    for &mid in &sorted_half[n_pairs..len - n_pairs] {
        let g = most_lagging(&sums, total, mid as f64, |g| groups[g].len() < size);
        groups[g].push(mid);
        sums[g] += mid as f64;
        total += mid as f64;
    }

    refine_by_swaps(&mut groups, &mut sums);
    Ok(groups)
}

/// Local search after the greedy pass. Each round considers swapping one
/// element between the largest-sum group and one of the [`SWAP_PARTNERS`]
/// smallest-sum groups, or between the smallest-sum group and one of the
/// largest-sum groups. For every such pair the element swap whose value
/// difference best halves their gap is scored by the resulting overall
/// spread, and the best strictly improving swap is applied. Stops when no
/// swap improves, when the spread is within 0.1% of the mean absolute group
/// sum, or after `2 × group count + 16` rounds.
fn refine_by_swaps(groups: &mut [Vec<f32>], sums: &mut [f64]) {
    let n_groups = groups.len();
    if n_groups < 2 {
        return;
    }
    let tolerance = 1e-3 * sums.iter().sum::<f64>().abs() / n_groups as f64;
    let mut order: Vec<usize> = (0..n_groups).collect();
    for _ in 0..2 * n_groups + 16 {
        order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)));
        let (lo, hi) = (order[0], order[n_groups - 1]);
        let current = sums[hi] - sums[lo];
        if current <= tolerance {
            return;
        }
        let mut best: Option<(usize, usize, usize, usize, f64)> = None;
        let partners = SWAP_PARTNERS.min(n_groups - 1);
        let pairs = order[..partners]
            .iter()
            .map(|&g| (hi, g))
            .chain(order[n_groups - partners..].iter().filter(|&&g| g != hi).map(|&g| (g, lo)));
        for (from, to) in pairs {
            let Some((i, j)) = closest_swap(&groups[from], &groups[to], (sums[from] - sums[to]) / 2.0)
            else {
                continue;
            };
            let delta = groups[from][i] as f64 - groups[to][j] as f64;
            let spread = spread_with(sums, from, sums[from] - delta, to, sums[to] + delta);
            if spread < current && best.is_none_or(|b| spread < b.4) {
                best = Some((from, i, to, j, spread));
            }
        }
        let Some((from, i, to, j, _)) = best else { return };
        let tmp = groups[from][i];
        groups[from][i] = groups[to][j];
        groups[to][j] = tmp;
        // Recompute in element order so sums match group_sum exactly.
        sums[from] = group_sum(&groups[from]);
        sums[to] = group_sum(&groups[to]);
    }
}

const SWAP_PARTNERS: usize = 8;

/// Indices `(i, j)` with `a[i] - b[j]` closest to `target`.
fn closest_swap(a: &[f32], b: &[f32], target: f64) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_unstable_by(|&x, &y| b[x].total_cmp(&b[y]));
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, &av) in a.iter().enumerate() {
        // Want b[j] ≈ a[i] - target.
        let want = av as f64 - target;
        let pos = order.partition_point(|&j| (b[j] as f64) < want);
        for cand in [pos.wrapping_sub(1), pos] {
            if let Some(&j) = order.get(cand) {
                let err = (av as f64 - b[j] as f64 - target).abs();
                if best.is_none_or(|(_, _, e)| err < e) {
                    best = Some((i, j, err));
                }
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

fn spread_with(sums: &[f64], a: usize, sa: f64, b: usize, sb: f64) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (g, &s) in sums.iter().enumerate() {
        let s = if g == a {
            sa
        } else if g == b {
            sb
        } else {
            s
        };
        hi = hi.max(s);
        lo = lo.min(s);
    }
    hi - lo
}

fn most_lagging(sums: &[f64], total: f64, delta: f64, open: impl Fn(usize) -> bool) -> usize {
    let mean = total / sums.len() as f64;
    let mut best: Option<(usize, f64)> = None;
    for (g, &s) in sums.iter().enumerate() {
        if !open(g) {
            continue;
        }
        let lag = if delta >= 0.0 { mean - s } else { s - mean };
        if best.is_none_or(|(_, b)| lag > b) {
            best = Some((g, lag));
        }
    }
    best.expect("an open group always exists while elements remain").0
}
