//! Downstream losses evaluated on (possibly relaxed) subset vectors.

/// A loss `ℓ(z)` and its gradient, treating `z` as a real vector.
///
/// Implementations must be deterministic: the same `z` always yields the same
/// value and gradient.
pub trait LossOracle: Sync {
    fn value(&self, z: &[f64]) -> f64;
    fn grad(&self, z: &[f64]) -> Vec<f64>;
}

/// `ℓ(z) = ‖z - b‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistance {
    pub target: Vec<f64>,
}

impl SquaredDistance {
    pub fn new(target: Vec<f64>) -> Self {
        SquaredDistance { target }
    }
}

impl LossOracle for SquaredDistance {
    fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    }

    fn grad(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.target)
            .map(|(a, b)| 2.0 * (a - b))
            .collect()
    }
}

/// `ℓ(z) = cᵀz`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLoss {
    pub weights: Vec<f64>,
}

impl LossOracle for LinearLoss {
    fn value(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    fn grad(&self, _z: &[f64]) -> Vec<f64> {
        self.weights.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLoss(pub f64);

impl LossOracle for ConstantLoss {
    fn value(&self, _z: &[f64]) -> f64 {
        self.0
    }

    fn grad(&self, z: &[f64]) -> Vec<f64> {
        vec![0.0; z.len()]
    }
}
