//! Gradient estimators for `∇_θ E_{z ~ p(z | sum z = k)}[ℓ(z)]`.
//!
//! All estimators consume one sample (or one noise draw) per call and are
//! selected through [`Estimator`]. The exact enumeration gradient is the
//! reference every other estimator is scored against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    conditional_marginals, enumerate_distribution, jacobian_vector_product, score_with_marginals,
};
use crate::logspace::softmax;
use crate::loss::LossOracle;
use crate::params::{KSubsetParams, SubsetMask};
use crate::rng::RngStream;
use crate::sampling::{gumbel_noise, pam_topk, sample_exact};

pub const DEFAULT_LAMBDA: f64 = 30.0;
pub const DEFAULT_SOFTSUB_TEMPERATURE: f64 = 0.5;
pub const DEFAULT_ST_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_NOISE_SCALE: f64 = 1.0;

/// Floor applied to `log(1 - s)` in the relaxed top-k recurrence.
const SOFTSUB_LOG_FLOOR: f64 = -1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    pub samples_used: usize,
    /// The discrete forward sample, for estimators that draw one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SubsetMask>,
}

/// How the forward sample is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForwardMode {
    /// Exact sample from the conditioned distribution.
    Exact,
    /// Top-k of Gumbel-perturbed logits.
    Pam,
}

/// How the marginal derivative is applied to the downstream gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BackwardMode {
    /// Exact Jacobian-vector product of the conditional marginals.
    Jacobian,
    /// `(ẑ - z̃) / λ` where `z̃` is drawn by the forward mechanism at `θ - λ g`.
    FiniteDifference { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Estimator {
    /// Enumeration of the score-function identity; deterministic.
    Exact,
    Simple,
    SimpleF {
        lambda: f64,
    },
    SimpleB {
        noise_scale: f64,
    },
    Sfe {
        baseline: Option<f64>,
    },
    Imle {
        lambda: f64,
        noise_scale: f64,
    },
    SoftSub {
        temperature: f64,
    },
    StGumbel {
        temperature: f64,
    },
}

impl Estimator {
    /// Estimator with default hyperparameters from its short name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "exact" => Estimator::Exact,
            "simple" => Estimator::Simple,
            "simple-f" => Estimator::SimpleF {
                lambda: DEFAULT_LAMBDA,
            },
            "simple-b" => Estimator::SimpleB {
                noise_scale: DEFAULT_NOISE_SCALE,
            },
            "sfe" => Estimator::Sfe { baseline: None },
            "imle" => Estimator::Imle {
                lambda: DEFAULT_LAMBDA,
                noise_scale: DEFAULT_NOISE_SCALE,
            },
            "softsub" => Estimator::SoftSub {
                temperature: DEFAULT_SOFTSUB_TEMPERATURE,
            },
            "st-gumbel" => Estimator::StGumbel {
                temperature: DEFAULT_ST_TEMPERATURE,
            },
            other => {
                return Err(Error::invalid(
                    "estimators",
                    format!(
                        "unknown estimator {other:?} (expected one of exact, simple, simple-f, \
                         simple-b, sfe, imle, softsub, st-gumbel)"
                    ),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Exact => "exact",
            Estimator::Simple => "simple",
            Estimator::SimpleF { .. } => "simple-f",
            Estimator::SimpleB { .. } => "simple-b",
            Estimator::Sfe { .. } => "sfe",
            Estimator::Imle { .. } => "imle",
            Estimator::SoftSub { .. } => "softsub",
            Estimator::StGumbel { .. } => "st-gumbel",
        }
    }

    pub fn validate(&self, params: &KSubsetParams) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be positive, got {v}")))
            }
        };
        match *self {
            Estimator::SimpleF { lambda } => positive("lambda", lambda),
            Estimator::SimpleB { noise_scale } => positive("noise_scale", noise_scale),
            Estimator::Imle {
                lambda,
                noise_scale,
            } => positive("lambda", lambda).and(positive("noise_scale", noise_scale)),
            Estimator::SoftSub { temperature } => positive("temperature", temperature),
            Estimator::StGumbel { temperature } => {
                positive("temperature", temperature)?;
                if params.k() != 1 {
                    return Err(Error::invalid(
                        "k",
                        format!(
                            "straight-through Gumbel-Softmax needs k = 1, got {}",
                            params.k()
                        ),
                    ));
                }
                Ok(())
            }
            Estimator::Exact => {
                crate::inference::check_enumerable(params.n(), params.k()).map(|_| ())
            }
            Estimator::Simple | Estimator::Sfe { .. } => Ok(()),
        }
    }

    pub fn estimate(
        &self,
        params: &KSubsetParams,
        loss: &dyn LossOracle,
        rng: &mut RngStream,
    ) -> Result<GradientEstimate> {
        match *self {
            Estimator::Exact => exact_gradient(params, loss),
            Estimator::Simple => estimate_simple(
                params,
                loss,
                rng,
                ForwardMode::Exact,
                BackwardMode::Jacobian,
                1.0,
            ),
            Estimator::SimpleF { lambda } => estimate_simple(
                params,
                loss,
                rng,
                ForwardMode::Exact,
                BackwardMode::FiniteDifference { lambda },
                1.0,
            ),
            Estimator::SimpleB { noise_scale } => estimate_simple(
                params,
                loss,
                rng,
                ForwardMode::Pam,
                BackwardMode::Jacobian,
                noise_scale,
            ),
            Estimator::Sfe { baseline } => estimate_sfe(params, loss, rng, baseline),
            Estimator::Imle {
                lambda,
                noise_scale,
            } => estimate_imle(params, loss, rng, lambda, noise_scale),
            Estimator::SoftSub { temperature } => estimate_softsub(params, loss, rng, temperature),
            Estimator::StGumbel { temperature } => {
                estimate_st_gumbel(params, loss, rng, temperature)
            }
        }
    }
}

/// `Σ_z p(z) ℓ(z) (z - μ)` over every k-subset.
pub fn exact_gradient(params: &KSubsetParams, loss: &dyn LossOracle) -> Result<GradientEstimate> {
    let dist = enumerate_distribution(params)?;
    let n = params.n();
    let mut mu = vec![0.0; n];
    for (z, p) in &dist {
        for i in z.indices() {
            mu[i] += p;
        }
    }
    let mut g = vec![0.0; n];
    for (z, p) in &dist {
        let weighted = p * loss.value(&z.to_f64());
        for (gi, (&bit, m)) in g.iter_mut().zip(z.bits().iter().zip(&mu)) {
            *gi += weighted * (if bit { 1.0 } else { 0.0 } - m);
        }
    }
    Ok(GradientEstimate {
        g,
        samples_used: dist.len(),
        sample: None,
    })
}

fn draw_forward(
    params: &KSubsetParams,
    rng: &mut RngStream,
    forward: ForwardMode,
    noise_scale: f64,
) -> Result<(SubsetMask, Option<Vec<f64>>)> {
    Ok(match forward {
        ForwardMode::Exact => (sample_exact(params, rng), None),
        ForwardMode::Pam => {
            let noise: Vec<f64> = gumbel_noise(params.n(), rng)
                .into_iter()
                .map(|e| e * noise_scale)
                .collect();
            (pam_topk(params, &noise)?, Some(noise))
        }
    })
}

/// SIMPLE and its ablations.
///
/// * `Exact` + `Jacobian`: SIMPLE proper, `J(θ) ∇ℓ(z)` with `z` an exact sample.
/// * `Pam` + `Jacobian`: SIMPLE-b.
/// * `Exact` + `FiniteDifference`: SIMPLE-f; `ẑ` is the forward sample and
///   `z̃` a fresh exact sample at `θ - λ ∇ℓ(ẑ)`.
/// * `Pam` + `FiniteDifference` coincides with I-MLE (shared noise).
///
/// `noise_scale` multiplies the Gumbel noise and is ignored for exact forwards.
pub fn estimate_simple(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    rng: &mut RngStream,
    forward: ForwardMode,
    backward: BackwardMode,
    noise_scale: f64,
) -> Result<GradientEstimate> {
    let (z, noise) = draw_forward(params, rng, forward, noise_scale)?;
    let downstream = loss.grad(&z.to_f64());
    match backward {
        BackwardMode::Jacobian => Ok(GradientEstimate {
            g: jacobian_vector_product(params, &downstream)?,
            samples_used: 1,
            sample: Some(z),
        }),
        BackwardMode::FiniteDifference { lambda } => {
            let shifted = params.with_theta(
                params
                    .theta()
                    .iter()
                    .zip(&downstream)
                    .map(|(t, d)| t - lambda * d)
                    .collect(),
            )?;
            let z_tilde = match noise {
                None => sample_exact(&shifted, rng),
                Some(noise) => pam_topk(&shifted, &noise)?,
            };
            Ok(GradientEstimate {
                g: finite_difference(&z, &z_tilde, lambda),
                samples_used: 2,
                sample: Some(z),
            })
        }
    }
}

fn finite_difference(z_hat: &SubsetMask, z_tilde: &SubsetMask, lambda: f64) -> Vec<f64> {
    z_hat
        .to_f64()
        .iter()
        .zip(z_tilde.to_f64())
        .map(|(a, b)| (a - b) / lambda)
        .collect()
}

/// Score-function (REINFORCE) estimate `(ℓ(z) - b) (z - μ)`; no baseline by default.
pub fn estimate_sfe(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    rng: &mut RngStream,
    baseline: Option<f64>,
) -> Result<GradientEstimate> {
    let z = sample_exact(params, rng);
    let mu = conditional_marginals(params);
    let weight = loss.value(&z.to_f64()) - baseline.unwrap_or(0.0);
    Ok(GradientEstimate {
        g: score_with_marginals(&z, &mu)
            .into_iter()
            .map(|s| weight * s)
            .collect(),
        samples_used: 1,
        sample: Some(z),
    })
}

/// I-MLE: perturb-and-MAP forward, finite difference of two MAP states that
/// share one Gumbel draw.
pub fn estimate_imle(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    rng: &mut RngStream,
    lambda: f64,
    noise_scale: f64,
) -> Result<GradientEstimate> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::invalid(
            "lambda",
            format!("must be positive, got {lambda}"),
        ));
    }
    estimate_simple(
        params,
        loss,
        rng,
        ForwardMode::Pam,
        BackwardMode::FiniteDifference { lambda },
        noise_scale,
    )
}

/// Relaxed top-k sample together with `∂y/∂κ₀`.
///
/// Runs `k` rounds of `s = softmax(κ / t)`, `κ ← κ + log(1 - s)` and returns
/// `y = Σ s`. The derivative is carried forward for every input direction at
/// once (`jac[i][q] = ∂y_i/∂κ₀_q`).
pub fn relaxed_topk(kappa: &[f64], k: usize, temperature: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = kappa.len();
    let mut kappa = kappa.to_vec();
    // tangent[i][q] = ∂κ_i/∂κ₀_q
    let mut tangent: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|q| if i == q { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut y = vec![0.0; n];
    let mut jac = vec![vec![0.0; n]; n];
    let mut s_dot = vec![vec![0.0; n]; n];
    for _ in 0..k {
        let scaled: Vec<f64> = kappa.iter().map(|x| x / temperature).collect();
        let s = softmax(&scaled);
        // ṡ_i = s_i (κ̇_i - Σ_j s_j κ̇_j) / t
        for q in 0..n {
            let mean: f64 = (0..n).map(|j| s[j] * tangent[j][q]).sum();
            for i in 0..n {
                s_dot[i][q] = s[i] * (tangent[i][q] - mean) / temperature;
            }
        }
        let total: f64 = s.iter().sum();
        for i in 0..n {
            y[i] += s[i];
            for q in 0..n {
                jac[i][q] += s_dot[i][q];
            }
            // 1 - s_i as the mass of the other entries, avoiding cancellation
            let rest = (total - s[i]).max(0.0);
            let log_rest = if rest > 0.0 {
                rest.ln()
            } else {
                f64::NEG_INFINITY
            };
            if log_rest > SOFTSUB_LOG_FLOOR {
                kappa[i] += log_rest;
                for q in 0..n {
                    tangent[i][q] -= s_dot[i][q] / rest;
                }
            } else {
                kappa[i] += SOFTSUB_LOG_FLOOR;
            }
        }
    }
    (y, jac)
}

/// SoftSub: relaxed top-k of Gumbel-perturbed logits, differentiated exactly
/// with the noise held fixed.
pub fn estimate_softsub(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    rng: &mut RngStream,
    temperature: f64,
) -> Result<GradientEstimate> {
    let noise = gumbel_noise(params.n(), rng);
    softsub_with_noise(params, loss, &noise, temperature)
}

pub fn softsub_with_noise(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    noise: &[f64],
    temperature: f64,
) -> Result<GradientEstimate> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::invalid(
            "temperature",
            format!("must be positive, got {temperature}"),
        ));
    }
    if noise.len() != params.n() {
        return Err(Error::LengthMismatch {
            field: "noise",
            expected: params.n(),
            got: noise.len(),
        });
    }
    let kappa: Vec<f64> = params
        .theta()
        .iter()
        .zip(noise)
        .map(|(t, e)| t + e)
        .collect();
    let (y, jac) = relaxed_topk(&kappa, params.k(), temperature);
    let downstream = loss.grad(&y);
    let n = params.n();
    let g = (0..n)
        .map(|q| (0..n).map(|i| downstream[i] * jac[i][q]).sum())
        .collect();
    Ok(GradientEstimate {
        g,
        samples_used: 1,
        sample: None,
    })
}

/// Straight-through Gumbel-Softmax (k = 1): one-hot argmax forward, softmax
/// Jacobian at the perturbed logits backward.
pub fn estimate_st_gumbel(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    rng: &mut RngStream,
    temperature: f64,
) -> Result<GradientEstimate> {
    if params.k() != 1 {
        return Err(Error::invalid(
            "k",
            format!(
                "straight-through Gumbel-Softmax needs k = 1, got {}",
                params.k()
            ),
        ));
    }
    let noise = gumbel_noise(params.n(), rng);
    st_gumbel_with_noise(params, loss, &noise, temperature)
}

pub fn st_gumbel_with_noise(
    params: &KSubsetParams,
    loss: &dyn LossOracle,
    noise: &[f64],
    temperature: f64,
) -> Result<GradientEstimate> {
    if params.k() != 1 {
        return Err(Error::invalid(
            "k",
            format!(
                "straight-through Gumbel-Softmax needs k = 1, got {}",
                params.k()
            ),
        ));
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::invalid(
            "temperature",
            format!("must be positive, got {temperature}"),
        ));
    }
    let z = pam_topk(params, noise)?;
    let scaled: Vec<f64> = params
        .theta()
        .iter()
        .zip(noise)
        .map(|(t, e)| (t + e) / temperature)
        .collect();
    let y = softmax(&scaled);
    let downstream = loss.grad(&z.to_f64());
    // (diag(y) - y yᵀ) / t is symmetric, so Jᵀ d = J d
    let dot: f64 = y.iter().zip(&downstream).map(|(a, b)| a * b).sum();
    Ok(GradientEstimate {
        g: y.iter()
            .zip(&downstream)
            .map(|(yi, di)| yi * (di - dot) / temperature)
            .collect(),
        samples_used: 1,
        sample: Some(z),
    })
}
