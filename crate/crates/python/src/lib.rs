//! Python bindings: `import ksubset`.

use ksubset_core::estimators::Estimator;
use ksubset_core::experiments::{self, SyntheticConfig};
use ksubset_core::inference::{
    conditional_marginals, entropy, enumerate_distribution, jacobian_vector_product, kl_to_uniform,
    log_prob, marginal_jacobian, pairwise_marginals, pr_exactly_k, score,
};
use ksubset_core::sampling::{self, sample_exact_dc, sample_from_table};
use ksubset_core::{Error, KSubsetParams, RngStream, SubsetMask};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyIOError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn mask(params: &KSubsetParams, z: Vec<bool>) -> PyResult<SubsetMask> {
    let z = SubsetMask::new(z);
    z.check_against(params).map_err(py_err)?;
    Ok(z)
}

/// k-subset distribution over `len(theta)` variables.
#[pyclass(name = "KSubset", module = "ksubset", frozen)]
pub struct PyKSubset {
    inner: KSubsetParams,
}

#[pymethods]
impl PyKSubset {
    #[new]
    fn new(theta: Vec<f64>, k: usize) -> PyResult<Self> {
        Ok(PyKSubset {
            inner: KSubsetParams::new(theta, k).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_probs(probs: Vec<f64>, k: usize) -> PyResult<Self> {
        Ok(PyKSubset {
            inner: KSubsetParams::from_probs(&probs, k).map_err(py_err)?,
        })
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// `log Pr(sum z = k)` under the unconditioned Bernoulli product.
    fn log_pr(&self) -> f64 {
        pr_exactly_k(&self.inner).0
    }

    fn pr(&self) -> f64 {
        self.log_pr().exp()
    }

    fn marginals(&self) -> Vec<f64> {
        conditional_marginals(&self.inner).into_vec()
    }

    fn pairwise(&self) -> Vec<Vec<f64>> {
        pairwise_marginals(&self.inner)
    }

    fn jacobian(&self) -> Vec<Vec<f64>> {
        marginal_jacobian(&self.inner).to_rows()
    }

    fn jvp(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        jacobian_vector_product(&self.inner, &v).map_err(py_err)
    }

    fn entropy(&self) -> f64 {
        entropy(&self.inner)
    }

    fn kl_to_uniform(&self) -> f64 {
        kl_to_uniform(&self.inner)
    }

    fn log_prob(&self, z: Vec<bool>) -> PyResult<f64> {
        log_prob(&self.inner, &mask(&self.inner, z)?).map_err(py_err)
    }

    fn score(&self, z: Vec<bool>) -> PyResult<Vec<f64>> {
        score(&self.inner, &mask(&self.inner, z)?).map_err(py_err)
    }

    /// Every weight-k mask with its probability.
    fn enumerate(&self) -> PyResult<Vec<(Vec<bool>, f64)>> {
        Ok(enumerate_distribution(&self.inner)
            .map_err(py_err)?
            .into_iter()
            .map(|(z, p)| (z.bits().to_vec(), p))
            .collect())
    }

    #[pyo3(signature = (count = 1, seed = 0))]
    fn sample(&self, count: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut rng = RngStream::new(seed);
        let log_on = self.inner.log_on();
        let (_, table) = pr_exactly_k(&self.inner);
        (0..count)
            .map(|_| sample_from_table(&table, &log_on, &mut rng).bits().to_vec())
            .collect()
    }

    #[pyo3(signature = (count = 1, seed = 0))]
    fn sample_dc(&self, count: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut rng = RngStream::new(seed);
        (0..count)
            .map(|_| sample_exact_dc(&self.inner, &mut rng).bits().to_vec())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("KSubset(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

/// Bias and variance report of each estimator, one dict per estimator.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (n = 10, k = 5, samples = 10_000, seed = 0, estimators = None, theta_seed = None, threads = None))]
fn run_synthetic<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
    estimators: Option<Vec<String>>,
    theta_seed: Option<u64>,
    threads: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = SyntheticConfig {
        n,
        k,
        num_estimates: samples,
        master_seed: seed,
        theta_seed,
        threads,
        ..SyntheticConfig::default()
    };
    if let Some(names) = estimators {
        config.estimators = names
            .iter()
            .map(|name| Estimator::from_name(name))
            .collect::<Result<_, _>>()
            .map_err(py_err)?;
    }
    let reports = py
        .detach(|| experiments::run_synthetic(&config))
        .map_err(py_err)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("estimator", r.estimator)?;
            d.set_item("n", r.n)?;
            d.set_item("k", r.k)?;
            d.set_item("samples", r.samples)?;
            d.set_item("bias", r.bias)?;
            d.set_item("variance", r.variance)?;
            d.set_item("mean_error", r.mean_error)?;
            d.set_item("error_std", r.error_std)?;
            d.set_item("master_seed", r.master_seed)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn cosine_distance(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    if u.len() != v.len() {
        return Err(PyValueError::new_err("vectors differ in length"));
    }
    Ok(experiments::cosine_distance(&u, &v))
}

#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn gumbel_noise(n: usize, seed: u64) -> Vec<f64> {
    sampling::gumbel_noise(n, &mut RngStream::new(seed))
}

/// Mask of the k largest entries of `theta + noise`.
#[pyfunction]
fn pam_topk(theta: Vec<f64>, k: usize, noise: Vec<f64>) -> PyResult<Vec<bool>> {
    let params = KSubsetParams::new(theta, k).map_err(py_err)?;
    Ok(sampling::pam_topk(&params, &noise)
        .map_err(py_err)?
        .bits()
        .to_vec())
}

#[pymodule]
fn ksubset(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKSubset>()?;
    m.add_function(wrap_pyfunction!(run_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(gumbel_noise, m)?)?;
    m.add_function(wrap_pyfunction!(pam_topk, m)?)?;
    Ok(())
}
