//! Exact inference, exact sampling and gradient estimation for the k-subset
//! distribution: `n` independent Bernoulli variables with logits `θ`,
//! conditioned on exactly `k` of them being on.
//!
//! The crate is organized bottom-up:
//!
//! * [`inference`]: exactly-k probability, conditional and pairwise marginals,
//!   the marginal Jacobian, entropy, KL to uniform and an enumeration oracle.
//! * [`sampling`]: exact ancestral and divide-and-conquer samplers, Gumbel noise
//!   and perturb-and-MAP top-k.
//! * [`estimators`]: SIMPLE and its baselines behind one interface.
//! * [`experiments`]: the bias/variance benchmark and sparse regression.
//! * [`cli`]: the `ksubset` command-line front end.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod inference;
pub mod logspace;
pub mod loss;
pub mod params;
pub mod rng;
pub mod sampling;
pub mod selfcheck;

pub use error::{Error, Result};
pub use params::{KSubsetParams, SubsetMask};
pub use rng::RngStream;
