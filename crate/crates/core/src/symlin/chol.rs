//! Cholesky factorization, its differential, and the triangular helpers used
//! by the Log-Cholesky geometry.

use super::matrix::{LowerTri, Matrix, SpdMatrix, SymMatrix};
use crate::error::{Error, Result};

pub(crate) fn cholesky_raw(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Shape("cholesky requires a square matrix".into()));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            let (ri, rj) = (l.row(i), l.row(j));
            for k in 0..j {
                s -= ri[k] * rj[k];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Lower Cholesky factor `L` with `L Lᵀ = P`.
pub fn cholesky(p: &SpdMatrix) -> Result<LowerTri> {
    cholesky_raw(p.as_matrix()).map(LowerTri::from_matrix_unchecked)
}

/// `L⁻¹ B` by forward substitution.
pub fn solve_lower(l: &LowerTri, b: &Matrix) -> Matrix {
    let n = l.n();
    assert_eq!(b.rows(), n, "solve_lower shape mismatch");
    let m = b.cols();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik == 0.0 {
                continue;
            }
            for c in 0..m {
                let v = x[(k, c)];
                x[(i, c)] -= lik * v;
            }
        }
        let d = l[(i, i)];
        for c in 0..m {
            x[(i, c)] /= d;
        }
    }
    x
}

pub fn inv_lower(l: &LowerTri) -> Matrix {
    solve_lower(l, &Matrix::identity(l.n()))
}

/// `P⁻¹ = L⁻ᵀ L⁻¹` from the Cholesky factor.
pub fn spd_inverse(p: &SpdMatrix) -> Result<SpdMatrix> {
    let l = cholesky(p)?;
    let linv = inv_lower(&l);
    Ok(SpdMatrix::from_matrix_unchecked(linv.tr_matmul(&linv)))
}

/// `L⁻¹ V L⁻ᵀ` for symmetric `V`.
fn congruence_by_inverse(l: &LowerTri, v: &Matrix) -> Matrix {
    let y = solve_lower(l, v);
    solve_lower(l, &y.transpose()).symmetrized()
}

/// Strict lower part plus half the diagonal.
fn half_lower(x: &Matrix) -> Matrix {
    let n = x.rows();
    Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => x[(i, j)],
        std::cmp::Ordering::Equal => 0.5 * x[(i, i)],
        std::cmp::Ordering::Less => 0.0,
    })
}

/// Differential of the Cholesky map at `P` applied to `V`:
/// the lower-triangular `Ṽ` with `Ṽ Lᵀ + L Ṽᵀ = V`.
pub fn dchol(p: &SpdMatrix, v: &SymMatrix) -> Result<LowerTri> {
    let l = cholesky(p)?;
    Ok(dchol_with_factor(&l, v))
}

pub fn dchol_with_factor(l: &LowerTri, v: &SymMatrix) -> LowerTri {
    let x = congruence_by_inverse(l, v.as_matrix());
    LowerTri::from_matrix_unchecked(l.as_matrix().matmul(&half_lower(&x)))
}

/// Adjoint of `dchol` with respect to the Frobenius product: for a lower
/// cotangent `G`, returns the symmetric `V̄` with `⟨G, dchol(V)⟩ = ⟨V̄, V⟩`.
pub fn dchol_adjoint(l: &LowerTri, g: &Matrix) -> SymMatrix {
    let lt_g = l.as_matrix().tr_matmul(&lower_part(g));
    let n = l.n();
    let phi_adj = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 0.5 * lt_g[(i, i)],
        std::cmp::Ordering::Greater => 0.5 * lt_g[(i, j)],
        std::cmp::Ordering::Less => 0.5 * lt_g[(j, i)],
    });
    // L⁻ᵀ Φ*(LᵀG) L⁻¹
    let linv = inv_lower(l);
    SymMatrix::from_matrix_unchecked(linv.tr_matmul(&phi_adj).matmul(&linv))
}

fn lower_part(x: &Matrix) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols(), |i, j| if i >= j { x[(i, j)] } else { 0.0 })
}

/// Differential of `L ↦ L Lᵀ` at `L`: `X Lᵀ + L Xᵀ`.
pub fn dchol_inverse(l: &LowerTri, x: &Matrix) -> SymMatrix {
    let xlt = x.matmul_tr(l.as_matrix());
    SymMatrix::from_matrix_unchecked(&xlt + &xlt.transpose())
}

/// `⌊X⌋`: the strictly lower-triangular part.
pub fn strict_lower(x: &Matrix) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols(), |i, j| if i > j { x[(i, j)] } else { 0.0 })
}

/// `D(X)`: diagonal matrix carrying the diagonal of `X`.
pub fn diag_part(x: &Matrix) -> Matrix {
    Matrix::from_diag(&x.diagonal())
}

/// `dlog(D)`: elementwise logarithm of the diagonal (off-diagonal entries are dropped).
pub fn dlog_diag(x: &Matrix) -> Result<Matrix> {
    let diag = x.diagonal();
    if let Some((i, d)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(Error::domain("dlog_diag", format!("diagonal entry {i} is {d}, expected > 0")));
    }
    Ok(Matrix::from_diag(&diag.iter().map(|d| d.ln()).collect::<Vec<_>>()))
}
