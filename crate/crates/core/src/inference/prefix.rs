use crate::logspace::log_add_exp;
use crate::params::KSubsetParams;

/// Log-domain table of partial-sum probabilities.
///
/// `get(i, j) = log Pr(z_1 + ... + z_i = j)` for `0 <= i <= n`, `0 <= j <= k`.
/// Sums above `k` are never tracked, so each row carries mass at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTable {
    width: usize,
    cells: Vec<f64>,
}

impl PrefixTable {
    /// Number of variables covered by the last row.
    pub fn n(&self) -> usize {
        self.cells.len() / self.width - 1
    }

    pub fn k(&self) -> usize {
        self.width - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.width..(i + 1) * self.width]
    }

    /// `log Pr(sum of all variables = k)`.
    pub fn log_pr(&self) -> f64 {
        self.get(self.n(), self.k())
    }

    /// Runs the exactly-k recursion over the variables in the given order.
    pub(crate) fn build(log_on: &[f64], log_off: &[f64], k: usize) -> Self {
        let n = log_on.len();
        let width = k + 1;
        let mut cells = vec![f64::NEG_INFINITY; (n + 1) * width];
        cells[0] = 0.0;
        for i in 1..=n {
            let (prev, cur) = cells.split_at_mut(i * width);
            let prev = &prev[(i - 1) * width..];
            let cur = &mut cur[..width];
            let (on, off) = (log_on[i - 1], log_off[i - 1]);
            cur[0] = prev[0] + off;
            for j in 1..width.min(i + 1) {
                cur[j] = log_add_exp(prev[j] + off, prev[j - 1] + on);
            }
        }
        PrefixTable { width, cells }
    }

    /// Suffix table: `get(i, j) = log Pr(z_{i+1} + ... + z_n = j)`, with `get(n, 0) = 0`.
    pub(crate) fn build_suffix(log_on: &[f64], log_off: &[f64], k: usize) -> Self {
        let rev_on: Vec<f64> = log_on.iter().rev().copied().collect();
        let rev_off: Vec<f64> = log_off.iter().rev().copied().collect();
        let rev = Self::build(&rev_on, &rev_off, k);
        let n = log_on.len();
        let width = rev.width;
        let mut cells = vec![f64::NEG_INFINITY; rev.cells.len()];
        for i in 0..=n {
            cells[i * width..(i + 1) * width].copy_from_slice(rev.row(n - i));
        }
        PrefixTable { width, cells }
    }
}

/// Exactly-k probability and the prefix table it was read from, in O(nk).
pub fn pr_exactly_k(params: &KSubsetParams) -> (f64, PrefixTable) {
    let table = PrefixTable::build(&params.log_on(), &params.log_off(), params.k());
    (table.log_pr(), table)
}
