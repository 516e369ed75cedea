//! Divide-and-conquer form of the exactly-k computation.
//!
//! A range of variables is split at its midpoint; the sum distribution of the
//! range is the convolution of its halves' distributions, truncated at `k`.

use crate::logspace::log_add_exp;
use crate::params::KSubsetParams;

/// Log sum-distribution of a contiguous range: entry `s` is `log Pr(range sums to s)`
/// for `s = 0..=k`.
pub(crate) type SumDist = Vec<f64>;

pub(crate) fn leaf(log_on: f64, log_off: f64, k: usize) -> SumDist {
    let mut d = vec![f64::NEG_INFINITY; k + 1];
    d[0] = log_off;
    if k >= 1 {
        d[1] = log_on;
    }
    d
}

pub(crate) fn convolve(left: &[f64], right: &[f64]) -> SumDist {
    let k = left.len() - 1;
    (0..=k)
        .map(|s| {
            let mut acc = f64::NEG_INFINITY;
            for m in 0..=s {
                acc = log_add_exp(acc, left[m] + right[s - m]);
            }
            acc
        })
        .collect()
}

fn range_dist(log_on: &[f64], log_off: &[f64], k: usize) -> SumDist {
    match log_on.len() {
        0 => {
            let mut d = vec![f64::NEG_INFINITY; k + 1];
            d[0] = 0.0;
            d
        }
        1 => leaf(log_on[0], log_off[0], k),
        len => {
            let mid = len / 2;
            let left = range_dist(&log_on[..mid], &log_off[..mid], k);
            let right = range_dist(&log_on[mid..], &log_off[mid..], k);
            convolve(&left, &right)
        }
    }
}

/// `log Pr(sum z = k)` by recursive halving.
pub fn pr_exactly_k_dc(params: &KSubsetParams) -> f64 {
    let k = params.k();
    range_dist(&params.log_on(), &params.log_off(), k)[k]
}

/// Binary tree of sum-distributions, one node per variable range. Used by the
/// divide-and-conquer sampler to draw the split point at every level.
pub(crate) struct SumTree {
    pub dist: SumDist,
    pub children: Option<Box<(SumTree, SumTree)>>,
    pub len: usize,
}

impl SumTree {
    pub fn build(log_on: &[f64], log_off: &[f64], k: usize) -> SumTree {
        let len = log_on.len();
        if len == 1 {
            return SumTree {
                dist: leaf(log_on[0], log_off[0], k),
                children: None,
                len,
            };
        }
        let mid = len / 2;
        let left = SumTree::build(&log_on[..mid], &log_off[..mid], k);
        let right = SumTree::build(&log_on[mid..], &log_off[mid..], k);
        SumTree {
            dist: convolve(&left.dist, &right.dist),
            children: Some(Box::new((left, right))),
            len,
        }
    }
}

/// Unnormalized log weights of the left-half sum `m` given the total `total`.
pub(crate) fn split_weights(left: &[f64], right: &[f64], total: usize) -> Vec<f64> {
    (0..=total).map(|m| left[m] + right[total - m]).collect()
}
