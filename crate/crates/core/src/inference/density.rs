use super::marginals::conditional_marginals;
use super::prefix::pr_exactly_k;
use crate::error::Result;
use crate::params::{KSubsetParams, SubsetMask};

/// `log p(z | sum z = k)`. Masks of the wrong weight are rejected rather than
/// scored `-inf`, since they signal a caller bug.
pub fn log_prob(params: &KSubsetParams, z: &SubsetMask) -> Result<f64> {
    z.check_against(params)?;
    let (log_z, _) = pr_exactly_k(params);
    let joint: f64 = params
        .log_on()
        .iter()
        .zip(params.log_off())
        .zip(z.bits())
        .map(|((&on, off), &bit)| if bit { on } else { off })
        .sum();
    Ok(joint - log_z)
}

/// Score `∇_θ log p(z | sum z = k) = z - μ(θ)`.
pub fn score(params: &KSubsetParams, z: &SubsetMask) -> Result<Vec<f64>> {
    z.check_against(params)?;
    let mu = conditional_marginals(params);
    Ok(score_with_marginals(z, &mu))
}

pub(crate) fn score_with_marginals(z: &SubsetMask, mu: &[f64]) -> Vec<f64> {
    z.bits()
        .iter()
        .zip(mu)
        .map(|(&b, &m)| if b { 1.0 - m } else { -m })
        .collect()
}
