//! Exact and perturb-and-MAP samplers over k-subsets.

use crate::error::{Error, Result};
use crate::inference::{split_weights, PrefixTable, SumTree};
use crate::params::{KSubsetParams, SubsetMask};
use crate::rng::RngStream;

const UNIFORM_CLAMP: f64 = 1e-12;

/// Exact ancestral sample from `p(z | sum z = k)`.
///
/// Walks the variables from last to first keeping the remaining budget `j`;
/// variable `i` is switched on with probability
/// `Pr(prefix_{i-1} = j-1) p_i / Pr(prefix_i = j)`.
pub fn sample_exact(params: &KSubsetParams, rng: &mut RngStream) -> SubsetMask {
    let log_on = params.log_on();
    let table = PrefixTable::build(&log_on, &params.log_off(), params.k());
    sample_from_table(&table, &log_on, rng)
}

/// Draws one sample from a prebuilt prefix table; lets callers amortize the
/// O(nk) table over many O(n) draws.
pub fn sample_from_table(table: &PrefixTable, log_on: &[f64], rng: &mut RngStream) -> SubsetMask {
    let n = table.n();
    let mut bits = vec![false; n];
    let mut budget = table.k();
    for i in (1..=n).rev() {
        if budget == 0 {
            break;
        }
        if budget == i {
            // every remaining variable must be on
            bits[..i].iter_mut().for_each(|b| *b = true);
            break;
        }
        let p_on = (table.get(i - 1, budget - 1) + log_on[i - 1] - table.get(i, budget)).exp();
        if rng.uniform() < p_on {
            bits[i - 1] = true;
            budget -= 1;
        }
    }
    SubsetMask::new(bits)
}

/// Exact sample by recursive halving: draw how many of the `k` ones fall in
/// the left half, proportional to `Pr(left = m) Pr(right = k - m)`, then recurse.
pub fn sample_exact_dc(params: &KSubsetParams, rng: &mut RngStream) -> SubsetMask {
    let k = params.k();
    let tree = SumTree::build(&params.log_on(), &params.log_off(), k);
    let mut bits = Vec::with_capacity(params.n());
    descend(&tree, k, rng, &mut bits);
    SubsetMask::new(bits)
}

fn descend(node: &SumTree, total: usize, rng: &mut RngStream, bits: &mut Vec<bool>) {
    match &node.children {
        None => bits.push(total == 1),
        Some(children) => {
            let (left, right) = (&children.0, &children.1);
            let left_total = if total == 0 {
                0
            } else if total == node.len {
                left.len
            } else {
                rng.categorical_from_logs(&split_weights(&left.dist, &right.dist, total))
            };
            descend(left, left_total, rng, bits);
            descend(right, total - left_total, rng, bits);
        }
    }
}

/// Standard Gumbel(0, 1) draws, `-log(-log U)` with `U` kept inside
/// `[1e-12, 1 - 1e-12]`.
pub fn gumbel_noise(n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u = rng.uniform().clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP);
            -(-u.ln()).ln()
        })
        .collect()
}

/// Indices of the `k` largest scores, ties going to the lower index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Perturb-and-MAP: the mask of the `k` largest entries of `theta + noise`.
pub fn pam_topk(params: &KSubsetParams, noise: &[f64]) -> Result<SubsetMask> {
    if noise.len() != params.n() {
        return Err(Error::LengthMismatch {
            field: "noise",
            expected: params.n(),
            got: noise.len(),
        });
    }
    if noise.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("noise", "perturbation must be finite"));
    }
    let perturbed: Vec<f64> = params
        .theta()
        .iter()
        .zip(noise)
        .map(|(t, e)| t + e)
        .collect();
    Ok(SubsetMask::from_indices(
        params.n(),
        &top_k_indices(&perturbed, params.k()),
    ))
}
