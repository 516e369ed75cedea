use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_sigmoid, sigmoid};

/// Logits of `n` independent Bernoulli variables together with the subset size `k`
/// they are conditioned on.
///
/// Variable `i` is on with probability `sigmoid(theta[i])`. Logits with magnitude
/// above ~30 are accepted; they saturate the sigmoid but all downstream
/// computations stay in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct KSubsetParams {
    theta: Vec<f64>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    theta: Vec<f64>,
    k: usize,
}

impl TryFrom<RawParams> for KSubsetParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        KSubsetParams::new(raw.theta, raw.k)
    }
}

impl From<KSubsetParams> for RawParams {
    fn from(p: KSubsetParams) -> Self {
        RawParams {
            theta: p.theta,
            k: p.k,
        }
    }
}

impl KSubsetParams {
    pub fn new(theta: Vec<f64>, k: usize) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::invalid("theta", "need at least one variable"));
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::invalid(
                "theta",
                format!("logit {i} is not finite ({})", theta[i]),
            ));
        }
        if k > theta.len() {
            return Err(Error::invalid(
                "k",
                format!("k = {k} exceeds n = {}", theta.len()),
            ));
        }
        Ok(KSubsetParams { theta, k })
    }

    /// All-zero logits: the uniform distribution over k-subsets.
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        Self::new(vec![0.0; n], k)
    }

    /// Builds logits from success probabilities in the open interval (0, 1).
    pub fn from_probs(probs: &[f64], k: usize) -> Result<Self> {
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::invalid(
                "probs",
                format!("probability {i} = {} is outside (0, 1)", probs[i]),
            ));
        }
        Self::new(probs.iter().map(|&p| (p / (1.0 - p)).ln()).collect(), k)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.theta.clone(), k)
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.n() {
            return Err(Error::LengthMismatch {
                field: "theta",
                expected: self.n(),
                got: theta.len(),
            });
        }
        Self::new(theta, self.k)
    }

    pub fn probs(&self) -> Vec<f64> {
        self.theta.iter().map(|&t| sigmoid(t)).collect()
    }

    /// `log p_i`, the log-probability that variable `i` is on.
    pub fn log_on(&self) -> Vec<f64> {
        self.theta.iter().map(|&t| log_sigmoid(t)).collect()
    }

    /// `log (1 - p_i)`.
    pub fn log_off(&self) -> Vec<f64> {
        self.theta.iter().map(|&t| log_sigmoid(-t)).collect()
    }
}

/// A binary vector; every sampler and MAP routine returns one of weight exactly `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetMask(Vec<bool>);

impl SubsetMask {
    pub fn new(bits: Vec<bool>) -> Self {
        SubsetMask(bits)
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; n];
        for &i in indices {
            bits[i] = true;
        }
        SubsetMask(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// Checks the mask against `params`: same length and weight `k`.
    pub fn check_against(&self, params: &KSubsetParams) -> Result<()> {
        if self.len() != params.n() {
            return Err(Error::LengthMismatch {
                field: "mask",
                expected: params.n(),
                got: self.len(),
            });
        }
        let weight = self.weight();
        if weight != params.k() {
            return Err(Error::WeightMismatch {
                weight,
                k: params.k(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SubsetMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(
                    "mask",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(SubsetMask)
    }
}
