use crate::error::{Error, Result};
use crate::manifold::{rieexp_identity, MetricSpec};
use crate::symlin::random::{random_symmetric, standard_normal_matrix, trial_rng};
use crate::symlin::{mpow, Matrix, SpdMatrix};

/// One `d × N` feature map and its class label.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSample {
    pub x: Matrix,
    pub label: usize,
}

/// Homogeneous collection of feature maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<FeatureSample>,
    /// Channels.
    pub d: usize,
    /// Spatial positions per sample.
    pub n: usize,
    pub classes: usize,
}

impl Dataset {
    pub fn new(samples: Vec<FeatureSample>, d: usize, n: usize, classes: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Shape(format!("need at least two positions per sample, got {n}")));
        }
        if classes == 0 || d == 0 {
            return Err(Error::Shape("dataset needs at least one channel and one class".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.x.rows() != d || s.x.cols() != n {
                return Err(Error::Shape(format!("sample {i} is {}x{}, expected {d}x{n}", s.x.rows(), s.x.cols())));
            }
            if s.label >= classes {
                return Err(Error::Shape(format!("sample {i} has label {} but only {classes} classes", s.label)));
            }
            if !s.x.is_finite() {
                return Err(Error::numeric("dataset", format!("sample {i} has non-finite entries")));
            }
        }
        Ok(Self { samples, d, n, classes })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First `k` samples and the rest, as two datasets with the same shape.
    pub fn split_at(mut self, k: usize) -> (Dataset, Dataset) {
        let rest = self.samples.split_off(k.min(self.samples.len()));
        let tail = Dataset { samples: rest, d: self.d, n: self.n, classes: self.classes };
        (self, tail)
    }
}

/// Sample covariance `(1/N) X̄ X̄ᵀ` with column-mean centring, not regularized.
pub fn raw_covariance(x: &Matrix) -> Result<Matrix> {
    let (d, n) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Shape(format!("covariance needs at least two columns, got {n}")));
    }
    let centred = Matrix::from_fn(d, n, |i, j| {
        let row = x.row(i);
        row[j] - row.iter().sum::<f64>() / n as f64
    });
    Ok(centred.matmul_tr(&centred).scale(1.0 / n as f64).symmetrized())
}

/// `Σ + ε·I`; `None` selects `ε = 1e-6·tr(Σ)/d`.
pub fn ridge(cov: Matrix, eps_reg: Option<f64>) -> Result<SpdMatrix> {
    let d = cov.rows();
    let eps = eps_reg.unwrap_or(1e-6 * cov.trace() / d as f64);
    if !(eps >= 0.0) {
        return Err(Error::Config(format!("covariance ridge must be nonnegative, got {eps}")));
    }
    let mut c = cov;
    for i in 0..d {
        c[(i, i)] += eps;
    }
    SpdMatrix::new(c)
}

/// `(1/N) X̄ X̄ᵀ + ε·I`
pub fn covariance_pool(x: &Matrix, eps_reg: f64) -> Result<SpdMatrix> {
    ridge(raw_covariance(x)?, Some(eps_reg))
}

/// Synthetic feature maps: class `c` draws its columns from `N(0, G_c)` with
/// `G_c = exp(spread·B_c)` and `B_c` a fixed random symmetric matrix scaled by `1/√d`.
pub fn synth_dataset(classes: usize, d: usize, n: usize, per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if !(spread >= 0.0) {
        return Err(Error::Config(format!("spread must be nonnegative, got {spread}")));
    }
    let mut rng = trial_rng(seed, 0);
    let roots = (0..classes)
        .map(|_| {
            let b = random_symmetric(d, &mut rng).scale(spread / (d as f64).sqrt());
            let g = rieexp_identity(&MetricSpec::lem(), &b)?;
            mpow(&g, 0.5)
        })
        .collect::<Result<Vec<SpdMatrix>>>()?;
    let mut rng = trial_rng(seed, 1);
    let mut samples = Vec::with_capacity(classes * per_class);
    for _ in 0..per_class {
        for (label, root) in roots.iter().enumerate() {
            let z = standard_normal_matrix(d, n, &mut rng);
            samples.push(FeatureSample { x: root.as_matrix().matmul(&z), label });
        }
    }
    Dataset::new(samples, d, n, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::rel_frobenius;

    #[test]
    fn identical_columns_give_ridge() {
        let x = Matrix::from_fn(3, 5, |i, _| i as f64 + 1.0);
        let s = covariance_pool(&x, 0.25).unwrap();
        assert_eq!(s.as_matrix(), &Matrix::identity(3).scale(0.25));
    }

    #[test]
    fn rank_deficient_without_ridge_fails() {
        let x = Matrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(covariance_pool(&x, 0.0), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn matches_direct_sum() {
        let mut rng = trial_rng(5, 0);
        let x = standard_normal_matrix(4, 9, &mut rng);
        let eps = 1e-3;
        let s = covariance_pool(&x, eps).unwrap();
        let mu: Vec<f64> = (0..4).map(|i| x.row(i).iter().sum::<f64>() / 9.0).collect();
        let mut direct = Matrix::identity(4).scale(eps);
        for j in 0..9 {
            let c: Vec<f64> = (0..4).map(|i| x[(i, j)] - mu[i]).collect();
            direct.axpy(1.0 / 9.0, &Matrix::from_fn(4, 4, |a, b| c[a] * c[b]));
        }
        assert!(rel_frobenius(s.as_matrix(), &direct) < 1e-12);
        assert_eq!(s.as_matrix().max_asymmetry(), 0.0);
    }

    #[test]
    fn default_ridge_scales_with_trace() {
        let cov = Matrix::from_diag(&[2.0, 4.0]);
        let s = ridge(cov, None).unwrap();
        assert!((s[(0, 0)] - (2.0 + 3e-6)).abs() < 1e-15);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = synth_dataset(3, 4, 16, 5, 1.0, 9).unwrap();
        let b = synth_dataset(3, 4, 16, 5, 1.0, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);
        assert_ne!(a, synth_dataset(3, 4, 16, 5, 1.0, 10).unwrap());
    }
}
