//! Conditional marginals and their derivatives.
//!
//! Conditioned on weight `k`, `Pr(z) ∝ exp(θᵀz)`, an exponential family with
//! sufficient statistic `z`. The marginals are its mean and the Jacobian
//! `∂μ/∂θ` is its covariance, `Pr(z_p = 1, z_q = 1) - μ_p μ_q`.

use serde::{Deserialize, Serialize};

use super::prefix::PrefixTable;
use crate::error::{Error, Result};
use crate::logspace::log_add_exp;
use crate::params::KSubsetParams;

/// `mu[i] = Pr(z_i = 1 | sum z = k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals(Vec<f64>);

impl Marginals {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Marginals {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Dense symmetric `n × n` matrix `j[p][q] = ∂mu_p/∂theta_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovJacobian {
    n: usize,
    cells: Vec<f64>,
}

impl CovJacobian {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.cells[p * self.n + q]
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.cells[p * self.n..(p + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|p| self.row(p).to_vec()).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|p| self.row(p).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Forward-backward marginals for an arbitrary (possibly empty) variable list.
pub(crate) fn marginals_from_logs(log_on: &[f64], log_off: &[f64], k: usize) -> Vec<f64> {
    let n = log_on.len();
    if k == 0 {
        return vec![0.0; n];
    }
    if k == n {
        return vec![1.0; n];
    }
    let prefix = PrefixTable::build(log_on, log_off, k);
    let suffix = PrefixTable::build_suffix(log_on, log_off, k);
    let log_z = prefix.log_pr();
    (0..n)
        .map(|i| {
            // Pr(z_i = 1, sum = k) = sum_j Pr(prefix_i = j) p_i Pr(suffix_{i+1} = k-1-j)
            let mut acc = f64::NEG_INFINITY;
            for j in 0..k {
                acc = log_add_exp(acc, prefix.get(i, j) + suffix.get(i + 1, k - 1 - j));
            }
            (acc + log_on[i] - log_z).exp().clamp(0.0, 1.0)
        })
        .collect()
}

pub fn conditional_marginals(params: &KSubsetParams) -> Marginals {
    Marginals(marginals_from_logs(
        &params.log_on(),
        &params.log_off(),
        params.k(),
    ))
}

/// `Pr(z_p = 1, z_q = 1 | sum z = k)`, with `mu_p` on the diagonal.
///
/// Row `p` clamps variable `p` on: drop it, decrement `k`, and rescale the
/// marginals of the rest by `mu_p`. O(n²k).
pub fn pairwise_marginals(params: &KSubsetParams) -> Vec<Vec<f64>> {
    let n = params.n();
    let k = params.k();
    let log_on = params.log_on();
    let log_off = params.log_off();
    let mu = marginals_from_logs(&log_on, &log_off, k);
    let mut out = vec![vec![0.0; n]; n];
    if k == 0 {
        return out;
    }
    let mut rest_on = Vec::with_capacity(n - 1);
    let mut rest_off = Vec::with_capacity(n - 1);
    for p in 0..n {
        rest_on.clear();
        rest_off.clear();
        rest_on.extend(
            log_on
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != p)
                .map(|(_, &v)| v),
        );
        rest_off.extend(
            log_off
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != p)
                .map(|(_, &v)| v),
        );
        let given = marginals_from_logs(&rest_on, &rest_off, k - 1);
        let row = &mut out[p];
        for (q, g) in (0..n).filter(|&q| q != p).zip(given) {
            row[q] = mu[p] * g;
        }
        row[p] = mu[p];
    }
    out
}

/// Exact Jacobian of the conditional marginals with respect to the logits.
pub fn marginal_jacobian(params: &KSubsetParams) -> CovJacobian {
    let n = params.n();
    let mu = conditional_marginals(params);
    let pair = pairwise_marginals(params);
    let mut cells = vec![0.0; n * n];
    for p in 0..n {
        cells[p * n + p] = mu[p] * (1.0 - mu[p]);
        for q in 0..p {
            // the two clamping orders agree up to rounding
            let joint = 0.5 * (pair[p][q] + pair[q][p]);
            let c = joint - mu[p] * mu[q];
            cells[p * n + q] = c;
            cells[q * n + p] = c;
        }
    }
    CovJacobian { n, cells }
}

/// Value and derivative along one direction, both in log space.
#[derive(Clone, Copy)]
struct LogDual {
    value: f64,
    tangent: f64,
}

impl LogDual {
    const ZERO: LogDual = LogDual {
        value: f64::NEG_INFINITY,
        tangent: 0.0,
    };

    fn shift(self, value: f64, tangent: f64) -> LogDual {
        LogDual {
            value: self.value + value,
            tangent: self.tangent + tangent,
        }
    }

    fn add(self, other: LogDual) -> LogDual {
        let value = log_add_exp(self.value, other.value);
        if value == f64::NEG_INFINITY {
            return LogDual::ZERO;
        }
        let weight = |d: LogDual| {
            if d.value == f64::NEG_INFINITY {
                0.0
            } else {
                (d.value - value).exp()
            }
        };
        LogDual {
            value,
            tangent: weight(self) * self.tangent + weight(other) * other.tangent,
        }
    }
}

fn dual_table(on: &[LogDual], off: &[LogDual], k: usize) -> Vec<Vec<LogDual>> {
    let n = on.len();
    let mut table = vec![vec![LogDual::ZERO; k + 1]; n + 1];
    table[0][0] = LogDual {
        value: 0.0,
        tangent: 0.0,
    };
    for i in 1..=n {
        let (a, b) = (on[i - 1], off[i - 1]);
        table[i][0] = table[i - 1][0].shift(b.value, b.tangent);
        for j in 1..=k.min(i) {
            let stay = table[i - 1][j].shift(b.value, b.tangent);
            let take = table[i - 1][j - 1].shift(a.value, a.tangent);
            table[i][j] = stay.add(take);
        }
    }
    table
}

/// Directional derivative of the marginals, `J v`, without forming `J`.
///
/// Propagates a tangent along `v` through the forward and backward tables
/// (forward-mode differentiation of the log-domain recursion), so the cost
/// stays O(nk).
pub fn jacobian_vector_product(params: &KSubsetParams, v: &[f64]) -> Result<Vec<f64>> {
    let n = params.n();
    let k = params.k();
    if v.len() != n {
        return Err(Error::LengthMismatch {
            field: "v",
            expected: n,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("v", "direction must be finite"));
    }
    if k == 0 || k == n {
        return Ok(vec![0.0; n]);
    }
    let probs = params.probs();
    // d log p_i = (1 - p_i) v_i, d log(1 - p_i) = -p_i v_i
    let on: Vec<LogDual> = params
        .log_on()
        .into_iter()
        .zip(probs.iter().zip(v))
        .map(|(value, (&p, &d))| LogDual {
            value,
            tangent: (1.0 - p) * d,
        })
        .collect();
    let off: Vec<LogDual> = params
        .log_off()
        .into_iter()
        .zip(probs.iter().zip(v))
        .map(|(value, (&p, &d))| LogDual {
            value,
            tangent: -p * d,
        })
        .collect();
    let prefix = dual_table(&on, &off, k);
    let rev_on: Vec<LogDual> = on.iter().rev().copied().collect();
    let rev_off: Vec<LogDual> = off.iter().rev().copied().collect();
    let rev = dual_table(&rev_on, &rev_off, k);
    let log_z = prefix[n][k];

    Ok((0..n)
        .map(|i| {
            let suffix_row = &rev[n - i - 1];
            let mut d_mu = 0.0;
            for j in 0..k {
                let pre = prefix[i][j];
                let suf = suffix_row[k - 1 - j];
                let value = pre.value + on[i].value + suf.value - log_z.value;
                if value == f64::NEG_INFINITY {
                    continue;
                }
                let tangent = pre.tangent + on[i].tangent + suf.tangent - log_z.tangent;
                d_mu += value.exp() * tangent;
            }
            d_mu
        })
        .collect())
}
