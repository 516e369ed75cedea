//! Cross-checks every exact routine against brute-force enumeration on small
//! random instances.

use serde::Serialize;

use crate::error::Result;
use crate::inference::{
    conditional_marginals, entropy, enumerate_distribution, jacobian_vector_product, kl_to_uniform,
    log_prob, marginal_jacobian, pairwise_marginals, pr_exactly_k, pr_exactly_k_dc,
};
use crate::logspace::log_binomial;
use crate::params::KSubsetParams;
use crate::rng::RngStream;

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub instances: usize,
    pub checks: usize,
    pub tolerance: f64,
    pub max_error: f64,
    pub failures: Vec<String>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Tally {
    checks: usize,
    tolerance: f64,
    max_error: f64,
    failures: Vec<String>,
}

impl Tally {
    fn close(&mut self, what: &str, instance: usize, got: f64, want: f64) {
        self.checks += 1;
        let err = (got - want).abs() / want.abs().max(1.0);
        if err.is_nan() || err > self.tolerance {
            self.failures.push(format!(
                "instance {instance}: {what}: got {got}, want {want}"
            ));
        }
        if err.is_finite() {
            self.max_error = self.max_error.max(err);
        }
    }
}

/// Random instance `i` of the suite: `n` in `1..=10`, `k` in `0..=n`, logits
/// `N(0, 2²)`.
pub fn random_instance(seed: u64, i: u64) -> KSubsetParams {
    let mut rng = RngStream::for_trial(seed, i);
    let n = 1 + (rng.uniform() * 10.0) as usize;
    let k = (rng.uniform() * (n + 1) as f64) as usize;
    let theta = (0..n).map(|_| 2.0 * rng.standard_normal()).collect();
    KSubsetParams::new(theta, k).expect("finite logits, k <= n")
}

pub fn run_selfcheck(instances: usize, seed: u64, tolerance: f64) -> Result<SelfCheckReport> {
    let mut tally = Tally {
        checks: 0,
        tolerance,
        max_error: 0.0,
        failures: Vec::new(),
    };
    for i in 0..instances {
        let params = random_instance(seed, i as u64);
        check_instance(&params, i, &mut tally)?;
    }
    Ok(SelfCheckReport {
        instances,
        checks: tally.checks,
        tolerance,
        max_error: tally.max_error,
        failures: tally.failures,
    })
}

fn check_instance(params: &KSubsetParams, i: usize, t: &mut Tally) -> Result<()> {
    let n = params.n();
    let dist = enumerate_distribution(params)?;
    let probs = params.probs();

    let pr: f64 = dist
        .iter()
        .map(|(z, _)| {
            z.bits()
                .iter()
                .zip(&probs)
                .map(|(&b, &p)| if b { p } else { 1.0 - p })
                .product::<f64>()
        })
        .sum();
    t.close("pr", i, pr_exactly_k(params).0.exp(), pr);
    t.close("pr (halving)", i, pr_exactly_k_dc(params).exp(), pr);

    let mut mu = vec![0.0; n];
    let mut pair = vec![vec![0.0; n]; n];
    let mut h = 0.0;
    for (z, w) in &dist {
        let on = z.indices();
        for &a in &on {
            mu[a] += w;
            for &b in &on {
                pair[a][b] += w;
            }
        }
        if *w > 0.0 {
            h -= w * w.ln();
        }
        t.close("log_prob", i, log_prob(params, z)?.exp(), *w);
    }
    let got_mu = conditional_marginals(params);
    let got_pair = pairwise_marginals(params);
    let jac = marginal_jacobian(params);
    for a in 0..n {
        t.close("marginal", i, got_mu[a], mu[a]);
        for b in 0..n {
            t.close("pairwise", i, got_pair[a][b], pair[a][b]);
            t.close("jacobian", i, jac.get(a, b), pair[a][b] - mu[a] * mu[b]);
        }
    }
    let v: Vec<f64> = (0..n).map(|a| (a as f64 * 0.7).sin()).collect();
    let jvp = jacobian_vector_product(params, &v)?;
    for a in 0..n {
        let want: f64 = (0..n).map(|b| (pair[a][b] - mu[a] * mu[b]) * v[b]).sum();
        t.close("jvp", i, jvp[a], want);
    }
    t.close("entropy", i, entropy(params), h);
    t.close(
        "kl_to_uniform",
        i,
        kl_to_uniform(params),
        (log_binomial(n, params.k()) - h).max(0.0),
    );
    Ok(())
}
