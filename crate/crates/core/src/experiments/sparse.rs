//! Sparse linear regression as k-subset feature selection.
//!
//! A k-subset distribution over the columns of a design matrix is trained so
//! that least squares on the selected columns has small RMSE. The learned
//! subset is read off as the MAP state (the k largest logits).

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::loss::LossOracle;
use crate::params::{KSubsetParams, SubsetMask};
use crate::rng::RngStream;
use crate::sampling::top_k_indices;

/// Synthetic regression problem with a planted support.
///
/// Columns of `design` have unit Euclidean norm; `true_weights` are expressed
/// in that standardized basis, so `targets = design[:, support] w + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRegressionProblem {
    pub design: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub support: SubsetMask,
    pub true_weights: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
}

impl SparseRegressionProblem {
    pub fn num_samples(&self) -> usize {
        self.design.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.design.ncols()
    }

    pub fn columns(&self, selected: &[usize]) -> DMatrix<f64> {
        self.design.select_columns(selected)
    }

    /// RMSE of least squares restricted to `selected`.
    pub fn subset_rmse(&self, selected: &[usize]) -> f64 {
        least_squares(&self.columns(selected), &self.targets).1
    }
}

/// Draws rows from `N(0, Σ)` with unit diagonal and constant off-diagonal
/// `rho`, plants a uniform random support with weights `±U(0.5, 1.5)`, adds
/// `N(0, sigma²)` noise to the targets and scales columns to unit norm.
pub fn generate_sparse_problem(
    n: usize,
    k: usize,
    m: usize,
    sigma: f64,
    rho: f64,
    seed: u64,
) -> Result<SparseRegressionProblem> {
    if k == 0 || k > n {
        return Err(Error::invalid(
            "k",
            format!("need 1 <= k <= n, got k = {k}, n = {n}"),
        ));
    }
    if m <= n {
        return Err(Error::invalid(
            "m",
            format!("need m > n, got m = {m}, n = {n}"),
        ));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid(
            "rho",
            format!("need 0 <= rho < 1, got {rho}"),
        ));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("need sigma >= 0, got {sigma}"),
        ));
    }
    let mut rng = RngStream::new(seed);
    // equicorrelated rows: x = sqrt(1 - rho) e + sqrt(rho) c 1
    let (own, shared) = ((1.0 - rho).sqrt(), rho.sqrt());
    let mut raw = DMatrix::zeros(m, n);
    for r in 0..m {
        let common = rng.standard_normal();
        for c in 0..n {
            raw[(r, c)] = own * rng.standard_normal() + shared * common;
        }
    }
    let mut support_idx = index::sample(&mut rng, n, k).into_vec();
    support_idx.sort_unstable();
    let raw_weights: Vec<f64> = support_idx
        .iter()
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * rng.random_range(0.5..1.5)
        })
        .collect();

    let norms: Vec<f64> = (0..n).map(|c| raw.column(c).norm()).collect();
    let mut design = raw;
    for (c, norm) in norms.iter().enumerate() {
        design.column_mut(c).unscale_mut(*norm);
    }
    let true_weights: Vec<f64> = support_idx
        .iter()
        .zip(&raw_weights)
        .map(|(&c, w)| w * norms[c])
        .collect();
    let mut targets = DVector::zeros(m);
    for (&c, w) in support_idx.iter().zip(&true_weights) {
        targets.axpy(*w, &design.column(c), 1.0);
    }
    for r in 0..m {
        targets[r] += sigma * rng.standard_normal();
    }
    Ok(SparseRegressionProblem {
        design,
        targets,
        support: SubsetMask::from_indices(n, &support_idx),
        true_weights,
        sigma,
        rho,
    })
}

/// Least squares by SVD: returns the minimum-norm minimizer of `‖A w - y‖`
/// and the root-mean-square residual. Singular values below
/// `max(m, k) · s_max · ε` are treated as zero.
pub fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, f64) {
    let m = design.nrows();
    let cols = design.ncols();
    if cols == 0 || m == 0 {
        return (DVector::zeros(cols), y.norm() / (m.max(1) as f64).sqrt());
    }
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let eps = m.max(cols) as f64 * s_max * f64::EPSILON;
    let w = if s_max == 0.0 {
        DVector::zeros(cols)
    } else {
        svd.solve(y, eps).expect("u and v were computed")
    };
    let residual = y - design * &w;
    (w, residual.norm() / (m as f64).sqrt())
}

/// RMSE of least squares on the selected columns, with an envelope gradient.
///
/// With `r = y - Φ_z w` and weights held fixed, the gradient with respect to a
/// continuous column mask is `∂ℓ/∂z_i = -(rᵀΦ_i) w_i / (m ℓ)`. Selected
/// columns use their fitted weight. An unselected column has no fitted weight;
/// it uses the coefficient a one-column refit of the residual would give it,
/// `w_i = Φ_iᵀ r / ‖Φ_i‖²`.
pub struct RegressionLoss<'a> {
    problem: &'a SparseRegressionProblem,
}

impl<'a> RegressionLoss<'a> {
    pub fn new(problem: &'a SparseRegressionProblem) -> Self {
        RegressionLoss { problem }
    }

    fn selected(z: &[f64]) -> Vec<usize> {
        z.iter()
            .enumerate()
            .filter_map(|(i, &v)| (v > 0.5).then_some(i))
            .collect()
    }
}

impl LossOracle for RegressionLoss<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        self.problem.subset_rmse(&Self::selected(z))
    }

    fn grad(&self, z: &[f64]) -> Vec<f64> {
        let p = self.problem;
        let n = p.num_features();
        let m = p.num_samples() as f64;
        let selected = Self::selected(z);
        let sub = p.columns(&selected);
        let (w, rmse) = least_squares(&sub, &p.targets);
        let scale = p.targets.norm() / m.sqrt();
        if rmse <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return vec![0.0; n];
        }
        let residual = &p.targets - &sub * &w;
        let mut weight = vec![f64::NAN; n];
        for (slot, &col) in selected.iter().enumerate() {
            weight[col] = w[slot];
        }
        (0..n)
            .map(|i| {
                let column = p.design.column(i);
                let corr = residual.dot(&column);
                let wi = if weight[i].is_nan() {
                    corr / column.norm_squared()
                } else {
                    weight[i]
                };
                -corr * wi / (m * rmse)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// RMSE of the subset drawn on the forward pass (MAP subset if the
    /// estimator does not draw a discrete sample).
    pub rmse: f64,
    /// Size of the intersection of the current MAP subset with the planted support.
    pub map_overlap_with_planted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRegressionRun {
    pub map_subset: SubsetMask,
    pub final_rmse: f64,
    pub theta: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Learns k-subset logits by plain gradient descent on the selected-subset
/// RMSE, starting from `θ = 0`.
pub fn run_sparse_regression(
    problem: &SparseRegressionProblem,
    k: usize,
    steps: usize,
    lr: f64,
    estimator: &Estimator,
    seed: u64,
) -> Result<SparseRegressionRun> {
    let n = problem.num_features();
    if steps == 0 {
        return Err(Error::invalid("steps", "need at least one step"));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::invalid("lr", format!("must be positive, got {lr}")));
    }
    let mut params = KSubsetParams::uniform(n, k)?;
    estimator.validate(&params)?;
    let loss = RegressionLoss::new(problem);
    let planted = problem.support.indices();
    let mut rng = RngStream::new(seed);
    let mut trace = Vec::with_capacity(steps);
    for step in 0..steps {
        let estimate = estimator.estimate(&params, &loss, &mut rng)?;
        let map = top_k_indices(params.theta(), k);
        let forward = match &estimate.sample {
            Some(z) => z.indices(),
            None => map.clone(),
        };
        trace.push(TraceRow {
            step,
            rmse: problem.subset_rmse(&forward),
            map_overlap_with_planted: map.iter().filter(|i| planted.contains(i)).count(),
        });
        let theta = params
            .theta()
            .iter()
            .zip(&estimate.g)
            .map(|(t, g)| t - lr * g)
            .collect();
        params = params.with_theta(theta)?;
    }
    let map = top_k_indices(params.theta(), k);
    Ok(SparseRegressionRun {
        final_rmse: problem.subset_rmse(&map),
        map_subset: SubsetMask::from_indices(n, &map),
        theta: params.theta().to_vec(),
        trace,
    })
}
