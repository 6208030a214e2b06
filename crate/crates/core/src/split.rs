//! Computing, scoring and applying a single split of one leaf.
//!
//! A split cuts a leaf region along coordinate `k` at `c` into
//! `plus = {x_k > c}` and `minus = {x_k <= c}`. Each child receives the mean
//! residual of the training points it contains, and those points' residuals
//! are reduced by the same amount. Leaves of any dimension are handled the
//! same way: membership is always tested against the full region.

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::Leaf;
use crate::params::SplitTry;
use crate::region::{CoordSet, Region};

/// Mean residual over `plus` and over `minus`.
pub fn split_means(residuals: &[f64], plus: &[usize], minus: &[usize]) -> Result<(f64, f64)> {
    if plus.is_empty() || minus.is_empty() {
        return Err(Error::EmptyChild);
    }
    let mean = |idx: &[usize]| idx.iter().map(|&i| residuals[i]).sum::<f64>() / idx.len() as f64;
    Ok((mean(plus), mean(minus)))
}

/// Outcome of [`apply_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub region_plus: Region,
    pub region_minus: Region,
    pub value_plus: f64,
    pub value_minus: f64,
    pub updated_residuals: Vec<f64>,
}

/// Splits `leaf` along `k` at `c`. `k` must be one of the leaf's coordinates;
/// lift the region first to open a new interaction.
pub fn apply_split(
    k: usize,
    leaf: &Leaf,
    c: f64,
    data: &Dataset,
    residuals: &[f64],
) -> Result<SplitResult> {
    let members = members_of(&leaf.region, data);
    let mut updated_residuals = residuals.to_vec();
    let applied = apply_to_members(k, leaf, c, data, &mut updated_residuals, &members)?;
    Ok(SplitResult {
        region_plus: applied.plus.region,
        region_minus: applied.minus.region,
        value_plus: applied.plus.value,
        value_minus: applied.minus.value,
        updated_residuals,
    })
}

/// Training points split by [`apply_to_members`].
pub(crate) struct AppliedSplit {
    pub plus: Leaf,
    pub minus: Leaf,
    pub members_plus: Vec<usize>,
    pub members_minus: Vec<usize>,
}

/// Split of a leaf whose training members are already known. Residuals are
/// updated in place.
pub(crate) fn apply_to_members(
    k: usize,
    leaf: &Leaf,
    c: f64,
    data: &Dataset,
    residuals: &mut [f64],
    members: &[usize],
) -> Result<AppliedSplit> {
    let (region_plus, region_minus) = leaf.region.cut(k, c)?;
    let (members_plus, members_minus): (Vec<usize>, Vec<usize>) =
        members.iter().partition(|&&i| data.value(i, k) > c);
    let (mu_plus, mu_minus) = split_means(residuals, &members_plus, &members_minus)?;
    for &i in &members_plus {
        residuals[i] -= mu_plus;
    }
    for &i in &members_minus {
        residuals[i] -= mu_minus;
    }
    Ok(AppliedSplit {
        plus: Leaf {
            region: region_plus,
            value: leaf.value + mu_plus,
        },
        minus: Leaf {
            region: region_minus,
            value: leaf.value + mu_minus,
        },
        members_plus,
        members_minus,
    })
}

/// Indices of the training points inside `region`.
pub(crate) fn members_of(region: &Region, data: &Dataset) -> Vec<usize> {
    (0..data.n()).filter(|&i| region.contains(data.row(i))).collect()
}

/// Values of coordinate `k` among `members` that lie strictly below the
/// region's upper bound in `k`.
pub(crate) fn candidate_pool(region: &Region, k: usize, data: &Dataset, members: &[usize]) -> Vec<f64> {
    let (_, upper) = region.interval(k);
    members
        .iter()
        .map(|&i| data.value(i, k))
        .filter(|&v| v < upper)
        .collect()
}

pub(crate) fn draw_from_pool<R: Rng + ?Sized>(pool: &[f64], split_try: SplitTry, rng: &mut R) -> Vec<f64> {
    if pool.is_empty() {
        return Vec::new();
    }
    match split_try {
        SplitTry::Sampled(count) => (0..count)
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect(),
        SplitTry::All => {
            let mut all = pool.to_vec();
            all.sort_by(f64::total_cmp);
            all.dedup();
            all
        }
    }
}

/// Random split points for cutting `leaf` along `k`: `split_try` draws with
/// replacement from the leaf's data values in `k` below the leaf's upper
/// bound (every distinct value for [`SplitTry::All`]). Empty when the pool is.
pub fn candidate_points<R: Rng + ?Sized>(
    leaf: &Region,
    k: usize,
    data: &Dataset,
    split_try: SplitTry,
    rng: &mut R,
) -> Vec<f64> {
    let members = members_of(leaf, data);
    draw_from_pool(&candidate_pool(leaf, k, data, &members), split_try, rng)
}

/// Training sum of squared residuals after the hypothetical split, or `None`
/// when a child would hold no training point. `leaf` may omit `k`, in which
/// case it is treated as unbounded in that coordinate.
pub fn score_split(k: usize, leaf: &Region, c: f64, data: &Dataset, residuals: &[f64]) -> Option<f64> {
    let (lower, upper) = leaf.interval(k);
    if !(lower < c && c < upper) {
        return None;
    }
    let members = members_of(leaf, data);
    let total = residuals.iter().map(|r| r * r).sum();
    score_candidates(k, &members, &[c], data, residuals, total)[0]
}

/// Scores every candidate point for one (leaf, coordinate) pair in a single
/// pass over the leaf's members. `total_ssr` is the current training SSR.
pub(crate) fn score_candidates(
    k: usize,
    members: &[usize],
    candidates: &[f64],
    data: &Dataset,
    residuals: &[f64],
    total_ssr: f64,
) -> Vec<Option<f64>> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    // bucket[b] accumulates members whose value lies in (sorted[b-1], sorted[b]].
    let mut sum = vec![0.0; sorted.len() + 1];
    let mut count = vec![0usize; sorted.len() + 1];
    for &i in members {
        let b = sorted.partition_point(|&c| c < data.value(i, k));
        sum[b] += residuals[i];
        count[b] += 1;
    }
    // Both child sums are accumulated from their own end rather than by
    // subtraction from the total.
    let mut plus_sums = vec![0.0; sorted.len() + 1];
    for b in (0..sorted.len()).rev() {
        plus_sums[b] = plus_sums[b + 1] + sum[b + 1];
    }
    let total_count = members.len();

    let mut minus_sum = 0.0;
    let mut minus_count = 0;
    let scores: Vec<Option<f64>> = (0..sorted.len())
        .map(|b| {
            minus_sum += sum[b];
            minus_count += count[b];
            let plus_count = total_count - minus_count;
            if minus_count == 0 || plus_count == 0 {
                return None;
            }
            let plus_sum = plus_sums[b];
            let gain = plus_sum * plus_sum / plus_count as f64 + minus_sum * minus_sum / minus_count as f64;
            Some(total_ssr - gain)
        })
        .collect();

    candidates
        .iter()
        .map(|c| {
            let b = sorted.partition_point(|s| s < c);
            scores[b]
        })
        .collect()
}

/// A scored way to split one leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    /// Tree owning the leaf.
    pub tree_coords: CoordSet,
    pub split_coord: usize,
    pub leaf_index: usize,
    pub point: f64,
    /// Training SSR after the split; `None` marks a rejected candidate.
    pub score: Option<f64>,
}

/// Lowest-scoring candidate; ties go to the earliest in slice order.
pub fn select_best(candidates: &[SplitCandidate]) -> Result<&SplitCandidate> {
    let mut best: Option<(&SplitCandidate, f64)> = None;
    for cand in candidates {
        if let Some(score) = cand.score {
            if best.is_none_or(|(_, s)| score < s) {
                best = Some((cand, score));
            }
        }
    }
    best.map(|(c, _)| c).ok_or(Error::NoValidSplit)
}
