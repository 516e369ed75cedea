use super::prefix::PrefixTable;
use crate::logspace::{binary_entropy, log_binomial};
use crate::params::KSubsetParams;

/// Entropy (nats) of the k-subset distribution.
///
/// `h[i][j]` is the entropy of the first `i` variables given that they sum to
/// `j`. Peeling off variable `i`, which is on with conditional probability
/// `q = Pr(prefix_{i-1} = j-1) p_i / Pr(prefix_i = j)`, gives
/// `h[i][j] = H_b(q) + q h[i-1][j-1] + (1 - q) h[i-1][j]`.
pub fn entropy(params: &KSubsetParams) -> f64 {
    let n = params.n();
    let k = params.k();
    let log_on = params.log_on();
    let table = PrefixTable::build(&log_on, &params.log_off(), k);
    let mut prev = vec![0.0; k + 1];
    let mut cur = vec![0.0; k + 1];
    for i in 1..=n {
        for j in 0..=k.min(i) {
            let denom = table.get(i, j);
            if j == 0 || denom == f64::NEG_INFINITY {
                // only the all-off prefix remains
                cur[j] = 0.0;
                continue;
            }
            let q = (table.get(i - 1, j - 1) + log_on[i - 1] - denom)
                .exp()
                .clamp(0.0, 1.0);
            let off_branch = if j < i { prev[j] } else { 0.0 };
            cur[j] = binary_entropy(q) + q * prev[j - 1] + (1.0 - q) * off_branch;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[k].max(0.0)
}

/// `KL(p || uniform over k-subsets) = log C(n, k) - H(p)`.
pub fn kl_to_uniform(params: &KSubsetParams) -> f64 {
    (log_binomial(params.n(), params.k()) - entropy(params)).max(0.0)
}
