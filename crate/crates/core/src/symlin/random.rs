//! Random symmetric and SPD matrix generators used by the samplers, the
//! synthetic data generator and the property checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rand::SeedableRng;

use super::eig::sym_eig_raw;
use super::matrix::{Matrix, SpdMatrix, SymMatrix};

/// Deterministic per-trial generator: the master seed selects the key and the
/// trial index selects the ChaCha stream, so trials can run in any order.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `(G + Gᵀ)/2` with `G` standard normal.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    SymMatrix::from_matrix_unchecked(standard_normal_matrix(n, n, rng))
}

/// Haar-ish orthogonal matrix from the eigenvectors of a random symmetric matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let s = random_symmetric(n, rng);
    sym_eig_raw(s.as_matrix()).expect("eigendecomposition of a random symmetric matrix").vectors
}

/// SPD matrix with log-uniform spectrum in `[1, cond]` and a random eigenbasis.
pub fn random_spd_with_cond<R: Rng + ?Sized>(n: usize, cond: f64, rng: &mut R) -> SpdMatrix {
    let u = random_orthogonal(n, rng);
    let log_cond = cond.ln();
    let mut spectrum: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * log_cond).exp()).collect();
    if n >= 2 {
        spectrum[0] = 1.0;
        spectrum[1] = cond;
    }
    let scaled = Matrix::from_fn(n, n, |i, j| u[(i, j)] * spectrum[j]);
    SpdMatrix::from_matrix_unchecked(scaled.matmul_tr(&u))
}

/// `A Aᵀ / n + I` with `A` standard normal.
pub fn wishart_plus_identity<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpdMatrix {
    let a = standard_normal_matrix(n, n, rng);
    let mut g = a.matmul_tr(&a).scale(1.0 / n as f64);
    for i in 0..n {
        g[(i, i)] += 1.0;
    }
    SpdMatrix::from_matrix_unchecked(g)
}

/// `exp(scale · B)` with `B` a random symmetric matrix normalised by `√n`.
pub fn log_exp_spd<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> SpdMatrix {
    let b = random_symmetric(n, rng);
    let eig = sym_eig_raw(b.as_matrix()).expect("eigendecomposition of a random symmetric matrix");
    let s = scale / (n as f64).sqrt();
    let spectrum: Vec<f64> = eig.values.iter().map(|&l| (s * l).exp()).collect();
    SpdMatrix::from_matrix_unchecked(eig.recompose_with(&spectrum))
}
