#![allow(dead_code)]

use ksubset_core::{KSubsetParams, RngStream};

/// Brute force over all 2^n binary vectors in the linear domain.
pub struct Brute {
    pub pr: f64,
    pub mu: Vec<f64>,
    pub pair: Vec<Vec<f64>>,
    pub entropy: f64,
    /// (mask bits, conditional probability) for every weight-k vector.
    pub support: Vec<(Vec<bool>, f64)>,
}

pub fn brute(theta: &[f64], k: usize) -> Brute {
    let n = theta.len();
    let p: Vec<f64> = theta.iter().map(|t| 1.0 / (1.0 + (-t).exp())).collect();
    let mut support = Vec::new();
    let mut pr = 0.0;
    for bits in 0u32..(1 << n) {
        if bits.count_ones() as usize != k {
            continue;
        }
        let z: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        let w: f64 = z
            .iter()
            .zip(&p)
            .map(|(&b, &pi)| if b { pi } else { 1.0 - pi })
            .product();
        pr += w;
        support.push((z, w));
    }
    let mut mu = vec![0.0; n];
    let mut pair = vec![vec![0.0; n]; n];
    let mut entropy = 0.0;
    for (z, w) in support.iter_mut() {
        *w /= pr;
        for a in 0..n {
            if z[a] {
                mu[a] += *w;
                for b in 0..n {
                    if z[b] {
                        pair[a][b] += *w;
                    }
                }
            }
        }
        if *w > 0.0 {
            entropy -= *w * w.ln();
        }
    }
    Brute {
        pr,
        mu,
        pair,
        entropy,
        support,
    }
}

pub fn random_params(rng: &mut RngStream, max_n: usize, scale: f64) -> KSubsetParams {
    let n = 1 + (rng.uniform() * max_n as f64) as usize;
    let k = (rng.uniform() * (n + 1) as f64) as usize;
    let theta = (0..n).map(|_| scale * rng.standard_normal()).collect();
    KSubsetParams::new(theta, k).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
