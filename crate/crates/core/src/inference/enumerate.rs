use crate::error::{Error, Result};
use crate::params::{KSubsetParams, SubsetMask};

/// Largest number of subsets [`enumerate_distribution`] will list.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Exact C(n, k) when it fits, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

pub fn check_enumerable(n: usize, k: usize) -> Result<u64> {
    match binomial(n, k) {
        Some(c) if c <= ENUMERATION_LIMIT => Ok(c),
        _ => Err(Error::EnumerationGuard {
            n,
            k,
            limit: ENUMERATION_LIMIT,
        }),
    }
}

/// Visits every k-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // advance the rightmost index that still has room
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Every weight-k mask with its exact probability under the conditioned
/// distribution, normalized directly from `exp(θᵀz)` without the DP.
pub fn enumerate_distribution(params: &KSubsetParams) -> Result<Vec<(SubsetMask, f64)>> {
    let n = params.n();
    let k = params.k();
    let count = check_enumerable(n, k)?;
    let theta = params.theta();
    let mut masks = Vec::with_capacity(count as usize);
    let mut scores = Vec::with_capacity(count as usize);
    for_each_subset(n, k, |idx| {
        masks.push(SubsetMask::from_indices(n, idx));
        scores.push(idx.iter().map(|&i| theta[i]).sum::<f64>());
    });
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(masks
        .into_iter()
        .zip(weights)
        .map(|(m, w)| (m, w / total))
        .collect())
}
