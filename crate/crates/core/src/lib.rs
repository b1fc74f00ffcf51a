//! Geometry of symmetric positive-definite matrices and the covariance-pooling
//! classifiers built on it.
//!
//! * [`symlin`]: dense symmetric linear algebra kernels.
//! * [`manifold`]: seven parameterized Riemannian metric families on SPD matrices.
//! * [`heads`]: Euclidean and SPD multinomial logistic regression heads.
//! * [`optim`]: SGD, Riemannian SGD and the scaled-initialization scheme.
//! * [`gcp`]: covariance pooling, data formats, training and evaluation.
//! * [`expcli`]: experiment drivers behind the `spdcov` command-line tool.

pub mod error;
pub mod expcli;
pub mod gcp;
pub mod heads;
pub mod manifold;
pub mod optim;
pub mod symlin;

pub use error::{Error, Result};
