//! Exact inference for the k-subset distribution: independent Bernoulli
//! variables conditioned on their sum being exactly `k`.

mod density;
mod divide;
mod entropy;
mod enumerate;
mod marginals;
mod prefix;

pub use density::{log_prob, score};
pub use divide::pr_exactly_k_dc;
pub use entropy::{entropy, kl_to_uniform};
pub use enumerate::{
    binomial, check_enumerable, enumerate_distribution, for_each_subset, ENUMERATION_LIMIT,
};
pub use marginals::{
    conditional_marginals, jacobian_vector_product, marginal_jacobian, pairwise_marginals,
    CovJacobian, Marginals,
};
pub use prefix::{pr_exactly_k, PrefixTable};

pub(crate) use density::score_with_marginals;
pub(crate) use divide::{split_weights, SumTree};
