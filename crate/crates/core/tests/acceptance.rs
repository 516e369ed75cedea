//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute, random_params};
use ksubset_core::estimators::{exact_gradient, Estimator};
use ksubset_core::experiments::{
    generate_sparse_problem, run_sparse_regression, run_synthetic, EstimatorReport, SyntheticConfig,
};
use ksubset_core::inference::{
    conditional_marginals, entropy, enumerate_distribution, kl_to_uniform, log_prob,
    marginal_jacobian, pairwise_marginals, pr_exactly_k, pr_exactly_k_dc, score,
};
use ksubset_core::logspace::log_binomial;
use ksubset_core::loss::{LinearLoss, LossOracle, SquaredDistance};
use ksubset_core::sampling::{sample_exact_dc, sample_from_table};
use ksubset_core::{KSubsetParams, RngStream, SubsetMask};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = RngStream::new(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let p = random_params(&mut rng, 12, 1.0);
        let b = brute(p.theta(), p.k());
        let mut check = |what: &str, got: f64, want: f64| -> Result<(), String> {
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, format!("instance {i} {what}: {got} vs {want}"))
        };
        check("pr", pr_exactly_k(&p).0.exp(), b.pr)?;
        let mu = conditional_marginals(&p);
        let pair = pairwise_marginals(&p);
        for a in 0..p.n() {
            check("marginal", mu[a], b.mu[a])?;
            for c in 0..p.n() {
                check("pairwise", pair[a][c], b.pair[a][c])?;
            }
        }
        check("entropy", entropy(&p), b.entropy)?;
        check(
            "kl",
            kl_to_uniform(&p),
            log_binomial(p.n(), p.k()) - b.entropy,
        )?;
        for (z, w) in &b.support {
            check(
                "log_prob",
                log_prob(&p, &SubsetMask::new(z.clone())).unwrap(),
                w.ln(),
            )?;
        }
    }
    within(started.elapsed(), 10.0)?;
    Ok(format!("200 instances, max abs error {worst:.1e}"))
}

fn jacobian_correctness() -> Outcome {
    let mut rng = RngStream::new(2);
    let h = 1e-4;
    let mut worst_rel: f64 = 0.0;
    for i in 0..50 {
        let p = random_params(&mut rng, 32, 1.0);
        let n = p.n();
        let j = marginal_jacobian(&p);
        let mu = conditional_marginals(&p);
        let mut j_norm: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for a in 0..n {
            let row_sum: f64 = j.row(a).iter().sum();
            ensure(
                row_sum.abs() <= 1e-9,
                format!("instance {i}: row {a} sums to {row_sum}"),
            )?;
            let diag = mu[a] * (1.0 - mu[a]);
            ensure(
                (j.get(a, a) - diag).abs() <= 1e-9,
                format!("instance {i}: diagonal {a}"),
            )?;
            for c in 0..n {
                ensure(
                    (j.get(a, c) - j.get(c, a)).abs() <= 1e-9,
                    format!("instance {i}: asymmetric at ({a}, {c})"),
                )?;
                j_norm = j_norm.max(j.get(a, c).abs());
            }
        }
        for q in 0..n {
            let mut up = p.theta().to_vec();
            let mut down = p.theta().to_vec();
            up[q] += h;
            down[q] -= h;
            let mu_up = conditional_marginals(&p.with_theta(up).unwrap());
            let mu_down = conditional_marginals(&p.with_theta(down).unwrap());
            for a in 0..n {
                let fd = (mu_up[a] - mu_down[a]) / (2.0 * h);
                diff = diff.max((fd - j.get(a, q)).abs());
            }
        }
        let rel = if j_norm > 0.0 { diff / j_norm } else { diff };
        worst_rel = worst_rel.max(rel);
        ensure(
            rel <= 1e-5,
            format!("instance {i}: relative error {rel:.2e}"),
        )?;
    }
    Ok(format!(
        "50 instances, worst relative error {worst_rel:.1e}"
    ))
}

fn sampler_fidelity() -> Outcome {
    let started = Instant::now();
    let draws = 300_000;
    let mut theta_rng = RngStream::new(3);
    let theta: Vec<f64> = (0..8).map(|_| 1.5 * theta_rng.standard_normal()).collect();
    let p = KSubsetParams::new(theta, 3).unwrap();
    let exact = enumerate_distribution(&p).unwrap();
    let critical = ChiSquared::new((exact.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    let (_, table) = pr_exactly_k(&p);
    let log_on = p.log_on();
    let mut worst_tv: f64 = 0.0;
    let mut worst_chi: f64 = 0.0;
    for seed in SEEDS {
        for sampler in ["exact", "halving"] {
            let mut rng = RngStream::new(seed);
            let mut counts: HashMap<SubsetMask, f64> = HashMap::new();
            for _ in 0..draws {
                let z = match sampler {
                    "exact" => sample_from_table(&table, &log_on, &mut rng),
                    _ => sample_exact_dc(&p, &mut rng),
                };
                *counts.entry(z).or_insert(0.0) += 1.0;
            }
            ensure(
                counts.keys().all(|z| z.weight() == 3),
                format!("{sampler} drew a subset of the wrong size"),
            )?;
            let mut tv = 0.0;
            let mut chi = 0.0;
            for (z, prob) in &exact {
                let observed = counts.get(z).copied().unwrap_or(0.0);
                let expected = prob * draws as f64;
                tv += (observed / draws as f64 - prob).abs();
                chi += (observed - expected).powi(2) / expected;
            }
            tv *= 0.5;
            worst_tv = worst_tv.max(tv);
            worst_chi = worst_chi.max(chi);
            ensure(tv <= 0.01, format!("{sampler} seed {seed}: TV {tv:.4}"))?;
            ensure(
                chi < critical,
                format!("{sampler} seed {seed}: chi-square {chi:.1} >= {critical:.1}"),
            )?;
        }
    }
    within(started.elapsed(), 30.0)?;
    Ok(format!(
        "worst TV {worst_tv:.4}, worst chi-square {worst_chi:.1} (critical {critical:.1})"
    ))
}

fn halving_equivalence() -> Outcome {
    let mut rng = RngStream::new(4);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let p = random_params(&mut rng, 64, 1.0);
        let dp = pr_exactly_k(&p).0;
        let dc = pr_exactly_k_dc(&p);
        let err = (dp - dc).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, format!("instance {i}: {dp} vs {dc}"))?;
    }
    Ok(format!(
        "200 instances up to n = 64, max log error {worst:.1e}"
    ))
}

fn exactness_identities() -> Outcome {
    let mut rng = RngStream::new(5);
    for i in 0..30 {
        let p = random_params(&mut rng, 9, 1.0);
        let n = p.n();
        let b: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let loss = SquaredDistance::new(b.clone());
        // z is binary, so ‖z - b‖² = Σ z_i (1 - 2 b_i) + ‖b‖² and ∇E[ℓ] = J (1 - 2b)
        let c: Vec<f64> = b.iter().map(|bi| 1.0 - 2.0 * bi).collect();
        let closed = marginal_jacobian(&p).mul_vec(&c);
        let mut sfe = vec![0.0; n];
        for (z, w) in enumerate_distribution(&p).unwrap() {
            let weight = w * loss.value(&z.to_f64());
            for (g, s) in sfe.iter_mut().zip(score(&p, &z).unwrap()) {
                *g += weight * s;
            }
        }
        let reference = exact_gradient(&p, &loss).unwrap().g;
        for a in 0..n {
            ensure(
                (sfe[a] - closed[a]).abs() <= 1e-10,
                format!("instance {i}: averaged SFE {} vs {}", sfe[a], closed[a]),
            )?;
            ensure(
                (reference[a] - closed[a]).abs() <= 1e-10,
                format!(
                    "instance {i}: exact gradient {} vs {}",
                    reference[a], closed[a]
                ),
            )?;
        }

        let linear = LinearLoss { weights: c.clone() };
        let mut first = None;
        for seed in 0..5 {
            let g = Estimator::Simple
                .estimate(&p, &linear, &mut RngStream::new(seed))
                .unwrap()
                .g;
            for a in 0..n {
                ensure(
                    (g[a] - closed[a]).abs() <= 1e-10,
                    format!(
                        "instance {i}: SIMPLE on a linear loss {} vs {}",
                        g[a], closed[a]
                    ),
                )?;
            }
            match &first {
                None => first = Some(g),
                Some(f) => ensure(f == &g, format!("instance {i}: SIMPLE not deterministic"))?,
            }
        }
    }
    for (n, k) in [(1, 0), (6, 3), (10, 5), (12, 4), (20, 20)] {
        let p = KSubsetParams::uniform(n, k).unwrap();
        let h = entropy(&p);
        ensure(
            (h - log_binomial(n, k)).abs() <= 1e-10,
            format!("uniform entropy n={n} k={k}: {h}"),
        )?;
        ensure(
            kl_to_uniform(&p) <= 1e-10,
            format!("uniform KL n={n} k={k}"),
        )?;
    }
    Ok("averaged SFE, SIMPLE on linear losses, uniform entropy and KL".into())
}

fn config(n: usize, k: usize, seed: u64, estimators: &[&str]) -> SyntheticConfig {
    SyntheticConfig {
        n,
        k,
        num_estimates: 10_000,
        master_seed: seed,
        estimators: estimators
            .iter()
            .map(|e| Estimator::from_name(e).unwrap())
            .collect(),
        ..SyntheticConfig::default()
    }
}

fn by_name<'a>(reports: &'a [EstimatorReport], name: &str) -> &'a EstimatorReport {
    reports.iter().find(|r| r.estimator == name).unwrap()
}

fn estimator_ordering() -> Outcome {
    let mut summary = Vec::new();
    for seed in SEEDS {
        let started = Instant::now();
        let reports = run_synthetic(&config(10, 5, seed, &["simple", "sfe", "imle", "softsub"]))
            .map_err(|e| e.to_string())?;
        within(started.elapsed(), 120.0)?;
        let simple = by_name(&reports, "simple");
        let sfe = by_name(&reports, "sfe");
        let imle = by_name(&reports, "imle");
        let softsub = by_name(&reports, "softsub");
        ensure(
            sfe.bias < 0.05,
            format!("seed {seed}: SFE bias {}", sfe.bias),
        )?;
        ensure(
            simple.bias < imle.bias,
            format!(
                "seed {seed}: SIMPLE bias {} vs I-MLE {}",
                simple.bias, imle.bias
            ),
        )?;
        ensure(
            simple.variance < sfe.variance,
            format!(
                "seed {seed}: SIMPLE variance {} vs SFE {}",
                simple.variance, sfe.variance
            ),
        )?;
        for other in [sfe, imle, softsub] {
            ensure(
                simple.mean_error < other.mean_error,
                format!(
                    "seed {seed}: SIMPLE mean error {} vs {} {}",
                    simple.mean_error, other.estimator, other.mean_error
                ),
            )?;
        }
        summary.push(format!("{:.3}", simple.mean_error));
    }
    Ok(format!(
        "5 seeds, SIMPLE mean error [{}]",
        summary.join(", ")
    ))
}

fn single_item_ordering() -> Outcome {
    for seed in SEEDS {
        let reports = run_synthetic(&config(10, 1, seed, &["simple", "st-gumbel"]))
            .map_err(|e| e.to_string())?;
        let simple = by_name(&reports, "simple");
        let st = by_name(&reports, "st-gumbel");
        ensure(
            simple.bias <= st.bias,
            format!(
                "seed {seed}: SIMPLE bias {} vs ST-Gumbel {}",
                simple.bias, st.bias
            ),
        )?;
        ensure(
            simple.variance <= st.variance,
            format!(
                "seed {seed}: SIMPLE variance {} vs ST-Gumbel {}",
                simple.variance, st.variance
            ),
        )?;
    }
    Ok("5 seeds, SIMPLE bias and variance at most ST-Gumbel's".into())
}

fn sparse_recovery() -> Outcome {
    let started = Instant::now();
    let mut recovered = 0;
    let mut worst_noiseless: f64 = 0.0;
    for seed in 0..10u64 {
        let problem =
            generate_sparse_problem(20, 3, 200, 0.1, 0.5, seed).map_err(|e| e.to_string())?;
        let run = run_sparse_regression(&problem, 3, 500, 0.5, &Estimator::Simple, seed)
            .map_err(|e| e.to_string())?;
        if run.map_subset == problem.support {
            recovered += 1;
        }
        let mean = |rows: &[ksubset_core::experiments::TraceRow]| {
            rows.iter().map(|r| r.rmse).sum::<f64>() / rows.len() as f64
        };
        let (first, last) = (mean(&run.trace[..50]), mean(&run.trace[450..]));
        ensure(
            last < first,
            format!("seed {seed}: trace mean {last} over the last 50 steps vs {first}"),
        )?;

        let clean =
            generate_sparse_problem(20, 3, 200, 0.0, 0.5, seed).map_err(|e| e.to_string())?;
        let run = run_sparse_regression(&clean, 3, 500, 0.5, &Estimator::Simple, seed)
            .map_err(|e| e.to_string())?;
        worst_noiseless = worst_noiseless.max(run.final_rmse);
    }
    ensure(recovered >= 9, format!("recovered {recovered}/10"))?;
    ensure(
        worst_noiseless <= 1e-6,
        format!("noiseless rmse {worst_noiseless:.2e}"),
    )?;
    within(started.elapsed(), 60.0)?;
    Ok(format!(
        "recovered {recovered}/10, worst noiseless rmse {worst_noiseless:.1e}"
    ))
}

fn bench_csv(threads: Option<&str>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ksubset"));
    cmd.args([
        "bench-synthetic",
        "--n",
        "10",
        "--k",
        "5",
        "--samples",
        "10000",
        "--seed",
        "7",
    ]);
    cmd.env_remove("KSUBSET_THREADS");
    if let Some(t) = threads {
        cmd.env("KSUBSET_THREADS", t);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        String::from_utf8_lossy(&out.stderr).to_string(),
    )?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let machine = std::thread::available_parallelism().map_or(1, |n| n.get());
    let first = bench_csv(None)?;
    let second = bench_csv(None)?;
    let single = bench_csv(Some("1"))?;
    let many = bench_csv(Some("4"))?;
    ensure(first == second, "two default runs differ")?;
    ensure(
        first == single,
        "one thread differs from machine parallelism",
    )?;
    ensure(
        first == many,
        "four threads differ from machine parallelism",
    )?;
    Ok(format!(
        "{} bytes identical across runs and 1, 4 and {machine} threads",
        first.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("jacobian correctness", jacobian_correctness),
        ("sampler fidelity", sampler_fidelity),
        ("halving equivalence", halving_equivalence),
        ("exactness identities", exactness_identities),
        ("estimator ordering n=10 k=5", estimator_ordering),
        ("single item ordering vs ST-Gumbel", single_item_ordering),
        ("sparse regression recovery", sparse_recovery),
        ("report determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
