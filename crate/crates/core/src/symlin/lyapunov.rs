//! Lyapunov operators `P X + X P = V` and `M X P + P X M = V`.

use super::eig::{sym_eig, EigDecomp};
use super::matrix::{Matrix, SpdMatrix, SymMatrix};
use crate::error::{Error, Result};

/// Above this spectral condition number of `M` the generalized solve is refused.
pub const GEN_LYAPUNOV_MAX_COND: f64 = 1e12;

/// Solves `P X + X P = V` in the eigenbasis of `P`.
pub fn lyapunov(p: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(&p.as_sym())?;
    Ok(lyapunov_eig(&eig, v))
}

pub fn lyapunov_eig(eig: &EigDecomp, v: &SymMatrix) -> SymMatrix {
    let vt = eig.to_eigenbasis(v.as_matrix());
    let l = &eig.values;
    let xt = Matrix::from_fn(l.len(), l.len(), |i, j| vt[(i, j)] / (l[i] + l[j]));
    SymMatrix::from_matrix_unchecked(eig.from_eigenbasis(&xt))
}

/// Solves `M X P + P X M = V` by congruence with `M^{-1/2}`, which reduces it
/// to a standard Lyapunov equation in `M^{-1/2} P M^{-1/2}`.
pub fn gen_lyapunov(p: &SpdMatrix, m: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
    let eig_m = sym_eig(&m.as_sym())?;
    let (hi, lo) = (eig_m.values[0], *eig_m.values.last().expect("non-empty spectrum"));
    let cond = hi / lo;
    if !(lo > 0.0) || !(cond < GEN_LYAPUNOV_MAX_COND) {
        return Err(Error::numeric(
            "gen_lyapunov",
            format!("M is ill-conditioned (condition estimate {cond:.3e})"),
        ));
    }
    let inv_sqrt: Vec<f64> = eig_m.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let m_isqrt = eig_m.recompose_with(&inv_sqrt);
    let congruence = |x: &Matrix| m_isqrt.matmul(x).matmul(&m_isqrt).symmetrized();
    let p_hat = SymMatrix::from_matrix_unchecked(congruence(p.as_matrix()));
    let v_hat = SymMatrix::from_matrix_unchecked(congruence(v.as_matrix()));
    let y = lyapunov_eig(&sym_eig(&p_hat)?, &v_hat);
    Ok(SymMatrix::from_matrix_unchecked(congruence(y.as_matrix())))
}
