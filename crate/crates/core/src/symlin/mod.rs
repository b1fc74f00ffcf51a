//! Dense symmetric and triangular linear algebra: eigendecomposition,
//! Cholesky, spectral matrix functions and their differentials, Lyapunov
//! solvers and the Newton–Schulz square root.

pub mod chol;
pub mod eig;
pub mod funcs;
pub mod lyapunov;
pub mod matrix;
pub mod newton_schulz;
pub mod random;

#[cfg(test)]
pub(crate) mod testutil;

pub use chol::{
    cholesky, dchol, dchol_adjoint, dchol_inverse, dchol_with_factor, diag_part, dlog_diag, inv_lower,
    solve_lower, spd_inverse, strict_lower,
};
pub use eig::{sym_eig, EigDecomp};
pub use funcs::{
    dlog, dmat_fun, dpow, dspectral, mat_fun, mexp, mlog, mpow, mpow_eig, sym_fun, vec_sym, SpectralFn,
};
pub use lyapunov::{gen_lyapunov, lyapunov};
pub use matrix::{rel_frobenius, LowerTri, Matrix, SpdMatrix, SymMatrix};
pub use newton_schulz::newton_schulz_sqrt;
