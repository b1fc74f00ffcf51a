//! Coupled Newton–Schulz iteration for the matrix square root, with trace
//! pre-normalization and sqrt-trace post-compensation.

use super::matrix::{Matrix, SpdMatrix};
use crate::error::{Error, Result};

pub fn newton_schulz_sqrt(p: &SpdMatrix, iters: usize) -> Result<SpdMatrix> {
    if iters == 0 {
        return Err(Error::Config("newton_schulz_sqrt needs at least one iteration".into()));
    }
    let n = p.n();
    let tr = p.trace();
    let identity = Matrix::identity(n);
    let mut y = p.as_matrix().scale(1.0 / tr);
    let mut z = identity.clone();
    let mut prev_residual = f64::INFINITY;
    let mut growth_streak = 0;

    for _ in 0..iters {
        let zy = z.matmul(&y);
        let residual = (&identity - &zy).frobenius_norm();
        if !residual.is_finite() {
            return Err(Error::numeric("newton_schulz_sqrt", "iterate became non-finite"));
        }
        // tolerate one bump from round-off, not a sustained climb
        if residual > prev_residual * (1.0 + 1e-6) && residual > 1e-8 {
            growth_streak += 1;
            if growth_streak >= 2 {
                return Err(Error::numeric(
                    "newton_schulz_sqrt",
                    format!("diverging: residual grew from {prev_residual:.3e} to {residual:.3e}"),
                ));
            }
        } else {
            growth_streak = 0;
        }
        prev_residual = residual;

        let t = (&identity.scale(3.0) - &zy).scale(0.5);
        y = y.matmul(&t);
        z = t.matmul(&z);
    }
    SpdMatrix::new(y.scale(tr.sqrt()).symmetrized())
        .map_err(|e| Error::numeric("newton_schulz_sqrt", format!("result is not SPD: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::funcs::mpow;
    use crate::symlin::matrix::rel_frobenius;
    use crate::symlin::testutil::random_spd;

    #[test]
    fn identity_converges_to_identity() {
        // trace normalization maps I to I/n, so small k is not exact
        for n in [1, 2, 5, 16] {
            let s = newton_schulz_sqrt(&SpdMatrix::identity(n), 15).unwrap();
            assert!(rel_frobenius(s.as_matrix(), &Matrix::identity(n)) < 1e-12, "n={n}");
        }
        let one = newton_schulz_sqrt(&SpdMatrix::identity(1), 1).unwrap();
        assert_eq!(one.as_matrix(), &Matrix::identity(1));
    }

    #[test]
    fn diagonal_square_root() {
        let s = newton_schulz_sqrt(&SpdMatrix::from_diag(&[4.0, 1.0]).unwrap(), 15).unwrap();
        assert!(rel_frobenius(s.as_matrix(), &Matrix::from_diag(&[2.0, 1.0])) < 1e-6);
    }

    #[test]
    fn random_well_conditioned() {
        for seed in 0..5 {
            let p = random_spd(16, 100.0, seed);
            let ns = newton_schulz_sqrt(&p, 15).unwrap();
            let exact = mpow(&p, 0.5).unwrap();
            assert!(rel_frobenius(ns.as_matrix(), exact.as_matrix()) < 1e-6);
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(newton_schulz_sqrt(&SpdMatrix::identity(2), 0).is_err());
    }
}
