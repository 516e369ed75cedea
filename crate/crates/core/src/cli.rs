//! `ksubset` command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or arguments, 2 on internal
//! failure (I/O errors, failed self-check).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::experiments::{
    generate_sparse_problem, run_sparse_regression, run_synthetic, write_reports, write_trace,
    ReportFormat, SyntheticConfig,
};
use crate::inference::{conditional_marginals, entropy, kl_to_uniform, pr_exactly_k};
use crate::params::KSubsetParams;
use crate::rng::RngStream;
use crate::sampling::{gumbel_noise, pam_topk, sample_exact_dc, sample_from_table};
use crate::selfcheck::run_selfcheck;

/// Environment variable capping the worker threads of parallel commands.
pub const THREADS_ENV: &str = "KSUBSET_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ksubset",
    version,
    about = "Exact inference, sampling and gradient estimation for k-subset distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exactly-k probability, marginals, entropy and KL to uniform.
    Marginals {
        /// JSON file `{"theta": [...], "k": K}`.
        input: PathBuf,
    },
    /// Draw samples, one 0/1 string per line.
    Sample {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Sampler::Exact)]
        sampler: Sampler,
    },
    /// Bias and variance of gradient estimators against the exact gradient.
    BenchSynthetic(BenchArgs),
    /// Feature selection for sparse linear regression.
    SparseRegress(SparseArgs),
    /// Compare the exact routines against enumeration on random instances.
    Selfcheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sampler {
    Exact,
    Dc,
    Pam,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Single-sample estimates per estimator.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated estimator names.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "simple,sfe,imle,softsub,simple-f,simple-b"
    )]
    estimators: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Evaluate at logits drawn from N(0, I) with this seed instead of zero.
    #[arg(long)]
    theta_seed: Option<u64>,
    /// Seed of the regression target; defaults to --seed.
    #[arg(long)]
    truth_seed: Option<u64>,
    /// Step size of simple-f and imle.
    #[arg(long)]
    lambda: Option<f64>,
    /// Temperature of softsub and st-gumbel.
    #[arg(long)]
    temperature: Option<f64>,
    /// Gumbel noise scale of imle and simple-b.
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Record wall time; makes the report vary between runs.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SparseArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "simple")]
    estimator: String,
    /// Trace CSV `step,rmse,map_overlap_with_planted`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 2,
        _ => 1,
    }
}

fn read_params(path: &PathBuf) -> Result<KSubsetParams> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::invalid("input", e.to_string()))
}

fn env_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            v.trim().parse::<usize>().map(Some).map_err(|_| {
                Error::invalid("KSUBSET_THREADS", format!("not a thread count: {v:?}"))
            })
        }
        Err(_) => Ok(None),
    }
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Marginals { input } => {
            let params = read_params(&input)?;
            let log_pr = pr_exactly_k(&params).0;
            write_json(
                out,
                &json!({
                    "n": params.n(),
                    "k": params.k(),
                    "pr": log_pr.exp(),
                    "log_pr": log_pr,
                    "mu": conditional_marginals(&params).into_vec(),
                    "entropy": entropy(&params),
                    "kl_to_uniform": kl_to_uniform(&params),
                }),
            )?;
        }
        Command::Sample {
            input,
            count,
            seed,
            sampler,
        } => {
            let params = read_params(&input)?;
            let mut rng = RngStream::new(seed);
            let mut out = BufWriter::new(out);
            let log_on = params.log_on();
            let (_, table) = pr_exactly_k(&params);
            for _ in 0..count {
                let z = match sampler {
                    Sampler::Exact => sample_from_table(&table, &log_on, &mut rng),
                    Sampler::Dc => sample_exact_dc(&params, &mut rng),
                    Sampler::Pam => pam_topk(&params, &gumbel_noise(params.n(), &mut rng))?,
                };
                writeln!(out, "{z}")?;
            }
            out.flush()?;
        }
        Command::BenchSynthetic(args) => bench(args, out)?,
        Command::SparseRegress(args) => sparse(args, out)?,
        Command::Selfcheck {
            instances,
            seed,
            tolerance,
        } => {
            let report = run_selfcheck(instances, seed, tolerance)?;
            write_json(
                out,
                &serde_json::to_value(&report).map_err(|e| Error::Io(e.to_string()))?,
            )?;
            if !report.passed() {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn build_estimator(name: &str, args: &BenchArgs) -> Result<Estimator> {
    let mut e = Estimator::from_name(name.trim())?;
    match &mut e {
        Estimator::SimpleF { lambda } => {
            if let Some(l) = args.lambda {
                *lambda = l;
            }
        }
        Estimator::Imle {
            lambda,
            noise_scale,
        } => {
            if let Some(l) = args.lambda {
                *lambda = l;
            }
            if let Some(s) = args.noise_scale {
                *noise_scale = s;
            }
        }
        Estimator::SimpleB { noise_scale } => {
            if let Some(s) = args.noise_scale {
                *noise_scale = s;
            }
        }
        Estimator::SoftSub { temperature } | Estimator::StGumbel { temperature } => {
            if let Some(t) = args.temperature {
                *temperature = t;
            }
        }
        _ => {}
    }
    Ok(e)
}

fn bench(args: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let estimators = args
        .estimators
        .iter()
        .map(|name| build_estimator(name, &args))
        .collect::<Result<Vec<_>>>()?;
    let config = SyntheticConfig {
        n: args.n,
        k: args.k,
        num_estimates: args.samples,
        master_seed: args.seed,
        estimators,
        truth_seed: args.truth_seed,
        theta_seed: args.theta_seed,
        threads: match args.threads {
            Some(t) => Some(t),
            None => env_threads()?,
        },
        timing: args.timing,
    };
    let reports = run_synthetic(&config)?;
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    };
    match &args.out {
        Some(path) => write_reports(BufWriter::new(File::create(path)?), &reports, format),
        None => write_reports(out, &reports, format),
    }
}

fn sparse(args: SparseArgs, out: &mut dyn Write) -> Result<()> {
    let estimator = Estimator::from_name(&args.estimator)?;
    let problem = generate_sparse_problem(args.n, args.k, args.m, args.sigma, args.rho, args.seed)?;
    let run = run_sparse_regression(&problem, args.k, args.steps, args.lr, &estimator, args.seed)?;
    if let Some(path) = &args.out {
        write_trace(BufWriter::new(File::create(path)?), &run.trace)?;
    }
    let planted = problem.support.indices();
    let selected = run.map_subset.indices();
    write_json(
        out,
        &json!({
            "estimator": estimator.name(),
            "planted": planted,
            "selected": selected,
            "overlap": selected.iter().filter(|i| planted.contains(i)).count(),
            "final_rmse": run.final_rmse,
            "planted_rmse": problem.subset_rmse(&planted),
            "steps": args.steps,
        }),
    )
}
