//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spdcov::expcli::{check_logs as run_check_logs, pair_gap, CheckLogsConfig};
use spdcov::gcp::{synth_dataset, train_with, TrainConfig};
use spdcov::heads::{head_forward, HeadKind, HeadTag};
use spdcov::manifold::{self, MetricSpec, TangentAt};
use spdcov::symlin::{Matrix, SpdMatrix, SymMatrix};
use spdcov::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Shape(_) | Error::Config(_) | Error::Parse { .. } | Error::NotSymmetric { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn spd(rows: Vec<Vec<f64>>) -> PyResult<SpdMatrix> {
    SpdMatrix::from_rows(&rows).map_err(to_py)
}

fn sym(rows: Vec<Vec<f64>>) -> PyResult<SymMatrix> {
    SymMatrix::from_rows(&rows).map_err(to_py)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

/// A metric on SPD matrices, e.g. `Metric("pem", theta=0.5)`.
#[pyclass(name = "Metric", module = "spdcov_py")]
struct PyMetric {
    spec: MetricSpec,
}

#[pymethods]
impl PyMetric {
    #[new]
    #[pyo3(signature = (family, theta=1.0, alpha=1.0, beta=0.0, theta2=None, m=None))]
    fn new(
        family: &str,
        theta: f64,
        alpha: f64,
        beta: f64,
        theta2: Option<f64>,
        m: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let spec = match family.to_ascii_lowercase().as_str() {
            "lem" => MetricSpec::Lem { alpha, beta },
            "aim" => MetricSpec::Aim { theta, alpha, beta },
            "em" | "pem" => MetricSpec::Em { theta, alpha, beta },
            "mpem" => MetricSpec::Mpem {
                theta1: theta,
                theta2: theta2.ok_or_else(|| PyValueError::new_err("mpem needs theta2"))?,
            },
            "lcm" => MetricSpec::Lcm { theta },
            "bwm" => MetricSpec::Bwm { theta },
            "gbwm" => MetricSpec::Gbwm { theta, m: m.map(spd).transpose()? },
            other => return Err(PyValueError::new_err(format!("unknown metric family `{other}`"))),
        };
        Ok(Self { spec })
    }

    fn log_identity(&self, p: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let v = manifold::rielog_identity(&self.spec, &spd(p)?).map_err(to_py)?;
        Ok(rows(v.as_matrix()))
    }

    fn exp_identity(&self, v: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let p = manifold::rieexp_identity(&self.spec, &sym(v)?).map_err(to_py)?;
        Ok(rows(p.as_matrix()))
    }

    fn log_at(&self, p: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let t = manifold::rielog_at(&self.spec, &spd(p)?, &spd(q)?).map_err(to_py)?;
        Ok(rows(t.vec.as_matrix()))
    }

    fn exp_at(&self, p: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let t = TangentAt { base: spd(p)?, vec: sym(v)? };
        let q = manifold::rieexp_at(&self.spec, &t).map_err(to_py)?;
        Ok(rows(q.as_matrix()))
    }

    fn inner(&self, p: Vec<Vec<f64>>, v: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> PyResult<f64> {
        manifold::metric_at(&self.spec, &spd(p)?, &sym(v)?, &sym(w)?).map_err(to_py)
    }

    fn distance(&self, p: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<f64> {
        manifold::geodesic_dist(&self.spec, &spd(p)?, &spd(q)?).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Metric({})", self.spec)
    }
}

/// `(1/N) X̄ X̄ᵀ + eps·I` of a `d × N` feature map.
#[pyfunction]
#[pyo3(signature = (x, eps=0.0))]
fn covariance_pool(x: Vec<Vec<f64>>, eps: f64) -> PyResult<Vec<Vec<f64>>> {
    let s = spdcov::gcp::covariance_pool(&matrix(x)?, eps).map_err(to_py)?;
    Ok(rows(s.as_matrix()))
}

/// `(d_PEM(theta), d_LEM)` between two SPD matrices.
#[pyfunction]
#[pyo3(signature = (p, q, theta=0.5))]
fn distance_gap(p: Vec<Vec<f64>>, q: Vec<Vec<f64>>, theta: f64) -> PyResult<(f64, f64)> {
    pair_gap(&spd(p)?, &spd(q)?, theta).map_err(to_py)
}

/// Logits of a matrix-function head followed by `A·vec(·) + b`.
#[pyfunction]
#[pyo3(signature = (head, s, a, b, theta=0.5))]
fn head_logits(head: &str, s: Vec<Vec<f64>>, a: Vec<Vec<f64>>, b: Vec<f64>, theta: f64) -> PyResult<Vec<f64>> {
    let tag: HeadTag = head.parse().map_err(to_py)?;
    let s = spd(s)?;
    let mut kind = HeadKind::new(tag, theta);
    if tag == HeadTag::PowEmlrPrime {
        kind.shared_p = Some(SymMatrix::identity(s.n()));
    }
    head_forward(&kind, &s, &matrix(a)?, &b).map_err(to_py)
}

/// Runs the logarithm/exponential invariant suite; returns `(passed, max_error, checks)`.
#[pyfunction]
#[pyo3(signature = (n=8, trials=100, seed=0))]
fn check_logs(py: Python<'_>, n: usize, trials: usize, seed: u64) -> PyResult<(bool, f64, usize)> {
    let cfg = CheckLogsConfig { n, trials, seed, perturb: false };
    let r = py.detach(|| run_check_logs(&cfg)).map_err(to_py)?;
    Ok((r.passed, r.max_error, r.checks))
}

/// Trains a head on synthetic feature maps; returns per-epoch `(loss, train_top1, val_top1)`.
#[pyfunction]
#[pyo3(signature = (head="pow", theta=0.5, epochs=10, spread=1.0, seed=0))]
fn train_synthetic(
    py: Python<'_>,
    head: &str,
    theta: f64,
    epochs: usize,
    spread: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let tag: HeadTag = head.parse().map_err(to_py)?;
    let mut cfg = TrainConfig { head: tag, theta, epochs, ..TrainConfig::default() };
    cfg.sgd.seed = seed;
    let record = py
        .detach(|| {
            let (train, val) = synth_dataset(4, 8, 16, 40, spread, seed)?.split_at(4 * 20);
            train_with(&train, Some(&val), &cfg, None)
        })
        .map_err(to_py)?
        .1;
    Ok(record.epochs.iter().map(|e| (e.train_loss, e.train_top1, e.val_top1.unwrap_or(f64::NAN))).collect())
}

#[pymodule]
fn spdcov_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(covariance_pool, m)?)?;
    m.add_function(wrap_pyfunction!(distance_gap, m)?)?;
    m.add_function(wrap_pyfunction!(head_logits, m)?)?;
    m.add_function(wrap_pyfunction!(check_logs, m)?)?;
    m.add_function(wrap_pyfunction!(train_synthetic, m)?)?;
    Ok(())
}
