//! Bias / variance / error study of the gradient estimators on an enumerable
//! k-subset distribution with loss `ℓ(z) = ‖z - b‖²`, `b ~ N(0, I)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::compute_metrics;
use crate::error::{Error, Result};
use crate::estimators::{exact_gradient, Estimator};
use crate::inference::check_enumerable;
use crate::loss::SquaredDistance;
use crate::params::KSubsetParams;
use crate::rng::{derive_seed, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub k: usize,
    pub num_estimates: usize,
    pub master_seed: u64,
    pub estimators: Vec<Estimator>,
    /// Seed for the target `b`; defaults to `master_seed`.
    pub truth_seed: Option<u64>,
    /// Evaluate at `θ ~ N(0, I)` drawn from this seed instead of `θ = 0`.
    pub theta_seed: Option<u64>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Record wall time per estimator. Off by default so reports are reproducible byte for byte.
    pub timing: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 10,
            k: 5,
            num_estimates: 10_000,
            master_seed: 0,
            estimators: ["simple", "sfe", "imle", "softsub", "simple-f", "simple-b"]
                .iter()
                .map(|name| Estimator::from_name(name).expect("built-in estimator"))
                .collect(),
            truth_seed: None,
            theta_seed: None,
            threads: None,
            timing: false,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.k > self.n {
            return Err(Error::invalid(
                "k",
                format!("k = {} exceeds n = {}", self.k, self.n),
            ));
        }
        if self.num_estimates < 2 {
            return Err(Error::invalid("samples", "need at least 2 estimates"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("estimators", "list is empty"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        check_enumerable(self.n, self.k)?;
        let probe = KSubsetParams::uniform(self.n, self.k)?;
        self.estimators.iter().try_for_each(|e| e.validate(&probe))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: String,
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub bias: f64,
    pub variance: f64,
    pub mean_error: f64,
    pub error_std: f64,
    pub wall_time_ms: f64,
    pub master_seed: u64,
}

/// The problem instance shared by every estimator of one run.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub params: KSubsetParams,
    pub loss: SquaredDistance,
    pub exact: Vec<f64>,
}

pub fn build_problem(config: &SyntheticConfig) -> Result<SyntheticProblem> {
    let mut truth = RngStream::new(config.truth_seed.unwrap_or(config.master_seed));
    let target: Vec<f64> = (0..config.n).map(|_| truth.standard_normal()).collect();
    let theta = match config.theta_seed {
        Some(seed) => {
            let mut r = RngStream::new(seed);
            (0..config.n).map(|_| r.standard_normal()).collect()
        }
        None => vec![0.0; config.n],
    };
    let params = KSubsetParams::new(theta, config.k)?;
    let loss = SquaredDistance::new(target);
    let exact = exact_gradient(&params, &loss)?.g;
    Ok(SyntheticProblem {
        params,
        loss,
        exact,
    })
}

/// Stream key of an estimator, so its trials do not depend on list order.
fn stream_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn run_estimator(
    problem: &SyntheticProblem,
    estimator: &Estimator,
    config: &SyntheticConfig,
) -> Result<Vec<Vec<f64>>> {
    let master = derive_seed(config.master_seed, stream_key(estimator.name()));
    (0..config.num_estimates as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::for_trial(master, trial);
            estimator
                .estimate(&problem.params, &problem.loss, &mut rng)
                .map(|e| e.g)
        })
        .collect()
}

/// Runs every configured estimator `num_estimates` times and scores it against
/// the exact gradient. Results depend only on the configuration, not on the
/// thread count or trial scheduling.
pub fn run_synthetic(config: &SyntheticConfig) -> Result<Vec<EstimatorReport>> {
    config.validate()?;
    let problem = build_problem(config)?;
    let run_all = || {
        config
            .estimators
            .iter()
            .map(|estimator| {
                let started = Instant::now();
                let estimates = run_estimator(&problem, estimator, config)?;
                let elapsed = started.elapsed().as_secs_f64() * 1e3;
                let m = compute_metrics(&estimates, &problem.exact)?;
                Ok(EstimatorReport {
                    estimator: estimator.name().to_string(),
                    n: config.n,
                    k: config.k,
                    samples: config.num_estimates,
                    bias: m.bias,
                    variance: m.variance,
                    mean_error: m.mean_error,
                    error_std: m.error_std,
                    wall_time_ms: if config.timing { elapsed } else { 0.0 },
                    master_seed: config.master_seed,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    match config.threads {
        None => run_all(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Io(format!("thread pool: {e}")))?
            .install(run_all),
    }
}
